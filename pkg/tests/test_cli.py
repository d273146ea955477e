import csv
import json

import pytest

from builders import constructed_rates, write_config, write_gold, write_preds
from smmpipe.cli import main, run_experiment
from smmpipe.config import load_config
from smmpipe.corpus import write_dataset
from smmpipe.errors import ConfigInvalid


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def task3_config(tmp_path, task3_small):
    write_dataset(task3_small, tmp_path / "dev.csv")
    return write_config(tmp_path, {
        "task": "task3",
        "data": {"dev": "dev.csv"},
        "backends": {
            "direct": {"kind": "mock", "confusion": {g: {g: 1.0} for g in range(4)}},
            "gate": {"kind": "mock", "seed": 1,
                     "confusion": {0: {0: 0.9, 1: 0.1}, 1: {1: 1.0}, 2: {1: 1.0}, 3: {1: 1.0}}},
            "stage2": {"kind": "mock", "seed": 2,
                       "confusion": {0: {2: 1.0}, 1: {1: 1.0}, 2: {2: 1.0}, 3: {3: 0.5, 2: 0.5}}},
        },
        "pipelines": [
            {"name": "direct", "variant": "direct", "members": ["direct"]},
            {"name": "cascade", "variant": "two_stage", "members": ["gate", "stage2"]},
        ],
        "output_dir": "runs",
        "cache_dir": "cache",
    })


@pytest.fixture
def simulated_config(tmp_path, task5_dev):
    write_dataset(task5_dev, tmp_path / "dev.csv")
    return write_config(tmp_path, {
        "task": "task5",
        "data": {"dev": "dev.csv"},
        "providers": {"sim": {"transport": "simulated", "outputs": "01", "seed": 4}},
        "backends": {"llm": {"kind": "prompted", "provider": "sim", "model": "sim-1",
                             "template": "task5.direct"}},
        "pipelines": [{"name": "llm", "variant": "direct", "members": ["llm"]}],
        "evaluation": {"figures": False},
    })


def test_run_writes_one_csv_per_pipeline(task3_config, tmp_path, capsys):
    assert main(["run", "--config", str(task3_config)]) == 0
    (run_dir,) = (tmp_path / "runs").iterdir()
    for name in ("direct", "cascade"):
        rows = read_csv(run_dir / f"{name}.csv")
        assert len(rows) == 40
        assert list(rows[0]) == ["id", "label"]
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["datasets"]["dev"]["samples"] == 40
    assert run_dir.name.startswith(manifest["config_checksum"][:12] + "-")
    assert (run_dir / "reports" / "comparison.md").exists()
    assert (run_dir / "reports" / "cascade.confusion.png").exists()
    assert "run directory" in capsys.readouterr().out


def test_run_reports_cascade_metrics(task3_config, tmp_path):
    run_dir, manifest = run_experiment(load_config(task3_config))
    direct = json.loads((run_dir / "reports" / "direct.metrics.json").read_text())
    assert direct["macro_f1"] == 1.0
    table = json.loads((run_dir / "reports" / "comparison.json").read_text())
    assert [r["name"] for r in table["rows"]] == ["direct", "cascade"]
    assert "mean" in table and "median" in table


def test_second_run_zero_remote_calls(simulated_config, tmp_path, capsys):
    assert main(["run", "--config", str(simulated_config)]) == 0
    assert "remote calls: 389" in capsys.readouterr().out
    assert main(["run", "--config", str(simulated_config)]) == 0
    out = capsys.readouterr().out
    assert "remote calls: 0" in out and "cache hits: 389" in out


def test_cache_stats_and_purge(simulated_config, tmp_path, capsys):
    main(["run", "--config", str(simulated_config)])
    main(["run", "--config", str(simulated_config)])
    capsys.readouterr()
    cache_dir = str(tmp_path / ".smmpipe-cache")
    assert main(["cache", "stats", "--cache-dir", cache_dir]) == 0
    out = capsys.readouterr().out
    assert "entries: 389" in out and "hits: 389" in out
    assert main(["cache", "purge", "--cache-dir", cache_dir]) == 1
    assert main(["cache", "purge", "--cache-dir", cache_dir, "--yes"]) == 0
    capsys.readouterr()
    main(["cache", "stats", "--cache-dir", cache_dir])
    assert "entries: 0" in capsys.readouterr().out


def test_cache_stats_missing_directory(tmp_path, capsys):
    assert main(["cache", "stats", "--cache-dir", str(tmp_path / "nowhere")]) == 0
    assert "entries: 0" in capsys.readouterr().out


def test_undefined_backend_is_config_error(tmp_path, task5_dev, capsys):
    write_dataset(task5_dev, tmp_path / "dev.csv")
    cfg = write_config(tmp_path, {
        "task": "task5", "data": {"dev": "dev.csv"},
        "backends": {"a": {"kind": "mock", "confusion": {0: {0: 1}, 1: {1: 1}}}},
        "pipelines": [{"name": "p", "variant": "or_rule", "members": ["a", "ghost"]}],
    })
    with pytest.raises(ConfigInvalid) as info:
        load_config(cfg)
    assert info.value.field == "pipelines[0].members[1]"
    assert main(["run", "--config", str(cfg)]) == 1
    assert "ghost" in capsys.readouterr().err


@pytest.mark.parametrize("body, field", [
    ({"task": "task9"}, "task"),
    ({"task": "task5", "data": {"dev": "d.csv"}, "fallback_label": 3}, "fallback_label"),
    ({"task": "task5", "data": {"dev": "d.csv"},
      "providers": {"x": {"endpoint": "http://x", "token": "abc"}},
      "backends": {"b": {"kind": "prompted", "provider": "x", "model": "m", "template": "task5.direct"}},
      "pipelines": [{"variant": "direct", "members": ["b"]}]}, "providers.x"),
    ({"task": "task5", "data": {"dev": "d.csv"},
      "backends": {"b": {"kind": "mock", "confusion": {0: {0: 1}, 1: {1: 1}}}},
      "pipelines": [{"variant": "stacking", "members": ["b"]}]}, "pipelines[0].variant"),
])
def test_config_field_errors(tmp_path, body, field):
    with pytest.raises(ConfigInvalid) as info:
        load_config(write_config(tmp_path, body))
    assert info.value.field == field
    assert info.value.exit_code == 1


def test_run_bad_data_exit_2(tmp_path, capsys):
    (tmp_path / "dev.csv").write_text("id,text,label\na,x,7\n")
    cfg = write_config(tmp_path, {
        "task": "task5", "data": {"dev": "dev.csv"},
        "backends": {"b": {"kind": "mock", "confusion": {0: {0: 1}, 1: {1: 1}}}},
        "pipelines": [{"variant": "direct", "members": ["b"]}],
    })
    assert main(["run", "--config", str(cfg)]) == 2
    assert "row 1" in capsys.readouterr().err


def test_run_remote_failure_exit_3(tmp_path, task5_dev, monkeypatch):
    monkeypatch.delenv("SMMPIPE_API_TOKEN", raising=False)
    write_dataset(task5_dev, tmp_path / "dev.csv")
    cfg = write_config(tmp_path, {
        "task": "task5", "data": {"dev": "dev.csv"},
        "providers": {"x": {"endpoint": "http://127.0.0.1:9/v1"}},
        "backends": {"b": {"kind": "prompted", "provider": "x", "model": "m", "template": "task5.direct"}},
        "pipelines": [{"variant": "direct", "members": ["b"]}],
    })
    assert main(["run", "--config", str(cfg)]) == 3


# evaluate ---------------------------------------------------------------------

def test_evaluate_gold_against_itself(tmp_path, task5_dev, capsys):
    write_dataset(task5_dev, tmp_path / "gold.csv")
    write_preds(tmp_path / "same.csv", task5_dev.gold())
    assert main(["evaluate", str(tmp_path / "same.csv"), "--gold", str(tmp_path / "gold.csv"),
                 "--task", "task5", "--out", str(tmp_path / "ev"), "--no-figures"]) == 0
    rep = json.loads((tmp_path / "ev" / "same.metrics.json").read_text())
    assert rep["class1_f1"] == rep["macro_f1"] == rep["f_beta"] == 1.0
    assert "F1=1.000" in capsys.readouterr().out


def test_evaluate_constructed_rates(tmp_path, capsys):
    gold, pred = constructed_rates(tp=1930, fn=70, fp=95, tn=1000)
    write_gold(tmp_path / "gold.csv", gold)
    write_preds(tmp_path / "bart.csv", pred)
    assert main(["evaluate", str(tmp_path / "bart.csv"), "--gold", str(tmp_path / "gold.csv"),
                 "--task", "task6", "--out", str(tmp_path / "ev"), "--format", "json"]) == 0
    assert "F1=0.959 P=0.953 R=0.965" in capsys.readouterr().out
    assert not (tmp_path / "ev" / "bart.metrics.md").exists()
    assert (tmp_path / "ev" / "bart.confusion.png").stat().st_size > 0


def test_evaluate_three_sets_comparison(tmp_path, task5_dev):
    write_dataset(task5_dev, tmp_path / "gold.csv")
    gold = task5_dev.gold()
    paths = []
    for k, name in enumerate(["a", "b", "c"]):
        labels = {sid: (1 - g if i % (k + 3) == 0 else g) for i, (sid, g) in enumerate(gold.items())}
        paths.append(str(write_preds(tmp_path / f"{name}.csv", labels)))
    out = tmp_path / "ev"
    assert main(["evaluate", *paths, "--gold", str(tmp_path / "gold.csv"), "--task", "task5",
                 "--out", str(out), "--pair", "a,c"]) == 0
    md = (out / "comparison.md").read_text()
    assert "| Mean" in md and "| Median" in md
    assert (out / "disagreement_a__c.json").exists()
    assert not (out / "disagreement_a__b.json").exists()


def test_evaluate_id_mismatch_exit_2(tmp_path, task5_dev, capsys):
    write_dataset(task5_dev, tmp_path / "gold.csv")
    short = dict(list(task5_dev.gold().items())[:-1])
    write_preds(tmp_path / "short.csv", short)
    assert main(["evaluate", str(tmp_path / "short.csv"), "--gold", str(tmp_path / "gold.csv"),
                 "--task", "task5", "--out", str(tmp_path / "ev")]) == 2
    assert "[evaluation]" in capsys.readouterr().err


def test_evaluate_missing_file_exit_2(tmp_path):
    assert main(["evaluate", str(tmp_path / "nope.csv"), "--gold", str(tmp_path / "nope.csv"),
                 "--task", "task5"]) == 2


def test_bad_parallelism_exit_1(task3_config):
    assert main(["run", "--config", str(task3_config), "--parallelism", "0"]) == 1
