"""File builders shared by the CLI and acceptance tests."""

import csv

import yaml


def write_config(tmp_path, body, name="exp.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(body, sort_keys=False), encoding="utf-8")
    return p


def write_preds(path, labels):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "label"])
        for k, v in labels.items():
            w.writerow([k, v])
    return path


def constructed_rates(tp, fn, fp, tn):
    """Gold and prediction tables realising a chosen binary confusion."""
    gold, pred = {}, {}
    i = 0
    for g, p, n in ((1, 1, tp), (1, 0, fn), (0, 1, fp), (0, 0, tn)):
        for _ in range(n):
            gold[f"x{i:05d}"], pred[f"x{i:05d}"] = g, p
            i += 1
    return gold, pred


def write_gold(path, gold):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "text", "label"])
        for k, v in gold.items():
            w.writerow([k, f"text {k}", v])
    return path
