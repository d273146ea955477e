"""Confusion matrices, P/R/F1 family metrics, comparison tables and error analysis.

Any metric whose denominator is zero is 0. Macro averages run over the declared
label space, so a class that is never predicted still contributes an F1 of 0.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import DataError, IdMismatch
from .predictions import PredictionSet

DEFAULT_BETA = 2.0


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple
    cells: np.ndarray  # cells[gold_index, pred_index]

    def index(self, label) -> int:
        return self.labels.index(label)

    def count(self, gold, pred) -> int:
        return int(self.cells[self.index(gold), self.index(pred)])

    def tp(self, c) -> int:
        i = self.index(c)
        return int(self.cells[i, i])

    def fp(self, c) -> int:
        i = self.index(c)
        return int(self.cells[:, i].sum() - self.cells[i, i])

    def fn(self, c) -> int:
        i = self.index(c)
        return int(self.cells[i, :].sum() - self.cells[i, i])

    def support(self, c) -> int:
        return int(self.cells[self.index(c), :].sum())

    @property
    def total(self) -> int:
        return int(self.cells.sum())

    def to_list(self) -> list:
        return self.cells.astype(int).tolist()

    @classmethod
    def from_counts(cls, labels, cells):
        arr = np.asarray(cells, dtype=np.int64)
        if arr.shape != (len(labels), len(labels)) or (arr < 0).any():
            raise ValueError("cells must be a non-negative square matrix matching labels")
        return cls(tuple(labels), arr)


def _gold_mapping(gold):
    if hasattr(gold, "label_space"):
        return gold.gold(), tuple(gold.label_space.labels)
    return dict(gold), None


def _pred_mapping(pred):
    if isinstance(pred, PredictionSet):
        return pred.labels()
    return dict(pred)


def check_ids(gold: Mapping, pred: Mapping):
    missing = set(gold) - set(pred)
    extra = set(pred) - set(gold)
    if missing or extra:
        raise IdMismatch(missing, extra)


def confusion(gold, pred, labels=None) -> ConfusionMatrix:
    gold_map, space = _gold_mapping(gold)
    pred_map = _pred_mapping(pred)
    check_ids(gold_map, pred_map)
    if labels is None:
        labels = space or tuple(sorted(set(gold_map.values()) | set(pred_map.values())))
    labels = tuple(labels)
    pos = {label: i for i, label in enumerate(labels)}
    cells = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for sid, g in gold_map.items():
        p = pred_map[sid]
        if g not in pos or p not in pos:
            raise DataError(f"sample {sid!r}: label pair ({g}, {p}) outside label space {list(labels)}")
        cells[pos[g], pos[p]] += 1
    return ConfusionMatrix(labels, cells)


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def f1_score(p: float, r: float) -> float:
    return _ratio(2 * p * r, p + r)


def f_beta_score(p: float, r: float, beta: float = DEFAULT_BETA) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    b2 = beta * beta
    return _ratio((1 + b2) * p * r, b2 * p + r)


def precision(cm: ConfusionMatrix, c) -> float:
    return _ratio(cm.tp(c), cm.tp(c) + cm.fp(c))


def recall(cm: ConfusionMatrix, c) -> float:
    return _ratio(cm.tp(c), cm.tp(c) + cm.fn(c))


def f1(cm: ConfusionMatrix, c) -> float:
    return f1_score(precision(cm, c), recall(cm, c))


def f_beta(cm: ConfusionMatrix, c, beta: float = DEFAULT_BETA) -> float:
    return f_beta_score(precision(cm, c), recall(cm, c), beta)


def macro_f1(cm: ConfusionMatrix) -> float:
    if not cm.labels:
        return 0.0
    return sum(f1(cm, c) for c in cm.labels) / len(cm.labels)


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else 0.0


# Reports --------------------------------------------------------------------

@dataclass
class MetricReport:
    name: str
    labels: tuple
    per_class: dict
    support: dict
    macro_precision: float
    macro_recall: float
    macro_f1: float
    class1_f1: Optional[float]
    f_beta: float
    beta: float
    confusion: list
    n: int

    @property
    def binary(self) -> bool:
        return self.class1_f1 is not None

    def headline(self) -> dict:
        """F1/P/R as the tables report them: class 1 for binary tasks, macro otherwise."""
        if self.binary:
            pc = self.per_class[1]
            return {"F1": pc["f1"], "P": pc["precision"], "R": pc["recall"]}
        return {"F1": self.macro_f1, "P": self.macro_precision, "R": self.macro_recall}

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "labels": list(self.labels),
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "support": {str(k): v for k, v in self.support.items()},
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "class1_f1": self.class1_f1,
            "f_beta": self.f_beta,
            "beta": self.beta,
            "confusion": self.confusion,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        header = ["Class", "Precision", "Recall", "F1", f"F{_fmt_beta(self.beta)}", "Support"]
        rows = [[str(c), _r(m["precision"]), _r(m["recall"]), _r(m["f1"]), _r(m["f_beta"]),
                 str(self.support[c])] for c, m in self.per_class.items()]
        lines = [f"### {self.name}", "", _md_table(header, rows), ""]
        lines.append(f"Macro-F1: {_r(self.macro_f1)}  ")
        if self.binary:
            lines.append(f"Class1-F1: {_r(self.class1_f1)}  ")
        lines.append(f"F{_fmt_beta(self.beta)}: {_r(self.f_beta)}  ")
        lines.append(f"Samples: {self.n}")
        lines += ["", "Confusion matrix (rows gold, columns predicted):", ""]
        cm_rows = [[str(g)] + [str(v) for v in row] for g, row in zip(self.labels, self.confusion)]
        lines.append(_md_table(["gold \\ pred"] + [str(l) for l in self.labels], cm_rows))
        return "\n".join(lines) + "\n"


def metric_report(cm: ConfusionMatrix, beta: float = DEFAULT_BETA, name: str = "") -> MetricReport:
    per_class = {}
    for c in cm.labels:
        per_class[c] = {
            "precision": precision(cm, c),
            "recall": recall(cm, c),
            "f1": f1(cm, c),
            "f_beta": f_beta(cm, c, beta),
        }
    binary = tuple(cm.labels) == (0, 1)
    if binary:
        fb = per_class[1]["f_beta"]
    else:
        fb = _mean(m["f_beta"] for m in per_class.values())
    return MetricReport(
        name=name,
        labels=tuple(cm.labels),
        per_class=per_class,
        support={c: cm.support(c) for c in cm.labels},
        macro_precision=_mean(m["precision"] for m in per_class.values()),
        macro_recall=_mean(m["recall"] for m in per_class.values()),
        macro_f1=macro_f1(cm),
        class1_f1=per_class[1]["f1"] if binary else None,
        f_beta=fb,
        beta=float(beta),
        confusion=cm.to_list(),
        n=cm.total,
    )


def evaluate(gold, pred, beta: float = DEFAULT_BETA, name: str = "", labels=None) -> MetricReport:
    if not name and isinstance(pred, PredictionSet):
        name = pred.pipeline_name
    return metric_report(confusion(gold, pred, labels), beta, name)


# Comparison tables ----------------------------------------------------------

@dataclass
class ComparisonTable:
    columns: list
    rows: list  # [(name, [values...])]
    mean: list = field(default_factory=list)
    median: list = field(default_factory=list)
    best: list = field(default_factory=list)  # per column, names of rows holding the max

    def to_dict(self) -> dict:
        return {
            "columns": self.columns,
            "rows": [{"name": n, **dict(zip(self.columns, v))} for n, v in self.rows],
            "mean": dict(zip(self.columns, self.mean)),
            "median": dict(zip(self.columns, self.median)),
            "best": dict(zip(self.columns, self.best)),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        body = []
        for name, values in self.rows:
            cells = []
            for col, v in enumerate(values):
                text = _r(v)
                cells.append(f"**{text}**" if name in self.best[col] else text)
            body.append([name] + cells)
        footer = [["Mean"] + [_r(v) for v in self.mean], ["Median"] + [_r(v) for v in self.median]]
        return _md_table(["System"] + self.columns, body, footer) + "\n"


def table_from_rows(columns, rows) -> ComparisonTable:
    if not rows:
        raise ValueError("compare_systems needs at least one system")
    columns = list(columns)
    rows = [(name, [float(v) for v in values]) for name, values in rows]
    cols = list(zip(*(values for _, values in rows)))
    mean = [statistics.fmean(c) for c in cols]
    median = [float(statistics.median(c)) for c in cols]
    best = []
    for j, c in enumerate(cols):
        top = max(c)
        best.append([name for name, values in rows if values[j] == top])
    return ComparisonTable(columns, rows, mean, median, best)


def compare_systems(reports) -> ComparisonTable:
    """Per-system rows plus mean/median footers; ``reports`` holds MetricReports
    or ``(name, MetricReport)`` pairs."""
    pairs = [(r.name, r) if isinstance(r, MetricReport) else tuple(r) for r in reports]
    if not pairs:
        raise ValueError("compare_systems needs at least one report")
    binary = all(r.binary for _, r in pairs)
    beta = pairs[0][1].beta
    fb = f"F{_fmt_beta(beta)}"
    if binary:
        columns = ["Class1-F1", "P", "R", "Macro-F1", fb]
        rows = [(n, [r.class1_f1, r.per_class[1]["precision"], r.per_class[1]["recall"],
                     r.macro_f1, r.f_beta]) for n, r in pairs]
    else:
        columns = ["Macro-F1", "P", "R", fb]
        rows = [(n, [r.macro_f1, r.macro_precision, r.macro_recall, r.f_beta]) for n, r in pairs]
    return table_from_rows(columns, rows)


# Error analysis -------------------------------------------------------------

@dataclass
class DisagreementReport:
    names: tuple
    positive: int
    both_correct: list
    only_a: list
    only_b: list
    both_wrong: list
    errors: dict  # system -> label -> {"false_positives": [...], "false_negatives": [...]}
    recall_a: float
    recall_b: float
    union_recall: float

    def to_dict(self) -> dict:
        return {
            "systems": list(self.names),
            "positive_label": self.positive,
            "partition": {
                "both_correct": self.both_correct,
                "only_" + self.names[0]: self.only_a,
                "only_" + self.names[1]: self.only_b,
                "both_wrong": self.both_wrong,
            },
            "counts": {
                "both_correct": len(self.both_correct),
                "only_" + self.names[0]: len(self.only_a),
                "only_" + self.names[1]: len(self.only_b),
                "both_wrong": len(self.both_wrong),
            },
            "recall": {self.names[0]: self.recall_a, self.names[1]: self.recall_b,
                       "or_union": self.union_recall},
            "errors": {sys: {str(l): v for l, v in per.items()} for sys, per in self.errors.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        a, b = self.names
        lines = [f"### {a} vs {b}", ""]
        lines.append(_md_table(["Partition", "Samples"], [
            ["both correct", str(len(self.both_correct))],
            [f"only {a}", str(len(self.only_a))],
            [f"only {b}", str(len(self.only_b))],
            ["both wrong", str(len(self.both_wrong))],
        ]))
        lines += ["", _md_table(["Recall (class %d)" % self.positive, "Value"], [
            [a, _r(self.recall_a)], [b, _r(self.recall_b)], ["or-union", _r(self.union_recall)],
        ])]
        for sys, per in self.errors.items():
            for label, kinds in per.items():
                for kind in ("false_positives", "false_negatives"):
                    items = kinds[kind]
                    if not items:
                        continue
                    lines += ["", f"#### {sys}: class {label} {kind.replace('_', ' ')} ({len(items)})", ""]
                    for item in items:
                        lines.append(f"- `{item['id']}` gold={item['gold']} pred={item['pred']}: "
                                     f"{item['excerpt']}")
        return "\n".join(lines) + "\n"


def _excerpt(text, limit):
    if text is None:
        return ""
    text = " ".join(text.split())
    return text if len(text) <= limit else text[: limit - 3] + "..."


def error_analysis(gold, preds_a, preds_b, texts=None, positive: int = 1, names=None,
                   excerpt_len: int = 80) -> DisagreementReport:
    if hasattr(gold, "label_space"):
        texts = texts or {s.id: s.text for s in gold}
        labels = tuple(gold.label_space.labels)
    else:
        labels = None
    gold_map, _ = _gold_mapping(gold)
    a, b = _pred_mapping(preds_a), _pred_mapping(preds_b)
    check_ids(gold_map, a)
    check_ids(gold_map, b)
    if names is None:
        names = (getattr(preds_a, "pipeline_name", "") or "A", getattr(preds_b, "pipeline_name", "") or "B")
        if names[0] == names[1]:
            names = (names[0] + "_a", names[1] + "_b")
    texts = texts or {}
    labels = labels or tuple(sorted(set(gold_map.values()) | set(a.values()) | set(b.values())))

    parts = {"both": [], "a": [], "b": [], "none": []}
    for sid, g in gold_map.items():
        ok_a, ok_b = a[sid] == g, b[sid] == g
        key = "both" if ok_a and ok_b else "a" if ok_a else "b" if ok_b else "none"
        parts[key].append(sid)

    errors = {}
    for sys_name, pred in zip(names, (a, b)):
        per = {}
        for label in labels:
            fps, fns = [], []
            for sid, g in gold_map.items():
                p = pred[sid]
                if p == g:
                    continue
                item = {"id": sid, "gold": g, "pred": p, "excerpt": _excerpt(texts.get(sid), excerpt_len)}
                if p == label:
                    fps.append(item)
                if g == label:
                    fns.append(item)
            per[label] = {"false_positives": fps, "false_negatives": fns}
        errors[sys_name] = per

    gold_pos = [sid for sid, g in gold_map.items() if g == positive]
    rec_a = _ratio(sum(a[s] == positive for s in gold_pos), len(gold_pos))
    rec_b = _ratio(sum(b[s] == positive for s in gold_pos), len(gold_pos))
    rec_u = _ratio(sum(a[s] == positive or b[s] == positive for s in gold_pos), len(gold_pos))
    return DisagreementReport(tuple(names), positive, parts["both"], parts["a"], parts["b"],
                              parts["none"], errors, rec_a, rec_b, rec_u)


# Formatting -----------------------------------------------------------------

def _r(v) -> str:
    return "-" if v is None else f"{v:.3f}"


def _fmt_beta(beta) -> str:
    return str(int(beta)) if float(beta).is_integer() else f"{beta:g}"


def _md_table(header, rows, footer=None) -> str:
    all_rows = [header] + rows + (footer or [])
    widths = [max(len(r[i]) for r in all_rows) for i in range(len(header))]

    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    out = [line(header), sep] + [line(r) for r in rows + (footer or [])]
    return "\n".join(out)
