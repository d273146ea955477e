"""Prediction records and the ``id,label`` CSV format that connects runs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import DataError, MalformedRow


@dataclass(frozen=True)
class Prediction:
    sample_id: str
    label: int
    provenance: str
    raw_response: Optional[str] = None

    @property
    def abstained(self) -> bool:
        return "abstain" in self.provenance


@dataclass
class PredictionSet:
    task_id: str
    predictions: dict = field(default_factory=dict)
    pipeline_name: str = ""

    @classmethod
    def from_list(cls, task_id, preds, pipeline_name=""):
        out = cls(task_id, {}, pipeline_name)
        for p in preds:
            if p.sample_id in out.predictions:
                raise DataError(f"duplicate prediction for sample {p.sample_id!r}")
            out.predictions[p.sample_id] = p
        return out

    def __len__(self):
        return len(self.predictions)

    def __iter__(self):
        return iter(self.predictions.values())

    def __getitem__(self, sample_id) -> Prediction:
        return self.predictions[sample_id]

    def labels(self) -> dict:
        return {sid: p.label for sid, p in self.predictions.items()}

    def ids(self) -> list:
        return list(self.predictions)

    def positives(self, positive=1) -> set:
        return {sid for sid, p in self.predictions.items() if p.label == positive}


def write_predictions(ps: PredictionSet, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"])
        for p in ps:
            writer.writerow([p.sample_id, p.label])
    return path


def read_prediction_file(path) -> dict:
    """Return an ordered ``{id: label}`` mapping from an ``id,label`` CSV."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if "id" not in header or "label" not in header:
            raise MalformedRow(0, f"{path}: header must contain 'id' and 'label'")
        i_id, i_label = header.index("id"), header.index("label")
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise MalformedRow(rownum, f"{path}: expected {len(header)} columns, got {len(row)}")
            sid = row[i_id].strip()
            if sid in out:
                raise MalformedRow(rownum, f"{path}: duplicate id {sid!r}")
            try:
                out[sid] = int(row[i_label])
            except ValueError:
                raise MalformedRow(rownum, f"{path}: label {row[i_label]!r} is not an integer") from None
    return out


def load_predictions(path, task_id="", name=None) -> PredictionSet:
    path = Path(path)
    name = name or path.stem
    labels = read_prediction_file(path)
    return PredictionSet.from_list(
        task_id, [Prediction(sid, label, f"file:{name}") for sid, label in labels.items()], name
    )
