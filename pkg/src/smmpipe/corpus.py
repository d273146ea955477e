"""Loading, validating and summarising task datasets.

Files are CSV or TSV with a header row naming at least ``id`` and ``text``;
``label`` and ``platform`` columns are optional.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import DuplicateId, LabelOutOfSpace, MalformedRow, UnlabeledSample

TASK_LABELS = {
    "task3": (0, 1, 2, 3),
    "task5": (0, 1),
    "task6": (0, 1),
}

SPLITS = ("train", "dev", "test")


class Platform(str, enum.Enum):
    TWITTER = "twitter"
    REDDIT = "reddit"
    UNKNOWN = "unknown"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class LabelSpace:
    task_id: str
    labels: tuple

    def __post_init__(self):
        if self.task_id not in TASK_LABELS:
            raise ValueError(f"unknown task {self.task_id!r}")
        if tuple(self.labels) != TASK_LABELS[self.task_id]:
            raise ValueError(
                f"{self.task_id} requires labels {TASK_LABELS[self.task_id]}, got {self.labels}"
            )

    @classmethod
    def for_task(cls, task_id: str) -> "LabelSpace":
        if task_id not in TASK_LABELS:
            raise ValueError(f"unknown task {task_id!r}; expected one of {sorted(TASK_LABELS)}")
        return cls(task_id, TASK_LABELS[task_id])

    @property
    def is_binary(self) -> bool:
        return len(self.labels) == 2

    def __contains__(self, label) -> bool:
        return label in self.labels


@dataclass(frozen=True)
class TextSample:
    id: str
    text: str
    platform: Platform = Platform.UNKNOWN
    gold_label: Optional[int] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("sample id must be non-empty")
        if not self.text.strip():
            raise ValueError(f"sample {self.id!r} has empty text")
        if not isinstance(self.platform, Platform):
            object.__setattr__(self, "platform", Platform(self.platform))


@dataclass(frozen=True)
class LabeledDataset:
    label_space: LabelSpace
    samples: tuple
    split: str = "dev"
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        object.__setattr__(self, "samples", tuple(self.samples))
        index = {}
        for i, s in enumerate(self.samples):
            if s.id in index:
                raise DuplicateId(i + 1, s.id)
            if s.gold_label is not None and s.gold_label not in self.label_space:
                raise LabelOutOfSpace(i + 1, s.gold_label, self.label_space.labels)
            index[s.id] = s
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, sample_id: str) -> TextSample:
        return self._index[sample_id]

    @property
    def ids(self) -> list:
        return [s.id for s in self.samples]

    def gold(self) -> dict:
        """Map of id -> gold label; raises if any sample is unlabeled."""
        out = {}
        for s in self.samples:
            if s.gold_label is None:
                raise UnlabeledSample(s.id)
            out[s.id] = s.gold_label
        return out

    def platforms(self) -> set:
        return {s.platform for s in self.samples}


@dataclass(frozen=True)
class ClassDistribution:
    counts: dict
    total: int

    def as_dict(self) -> dict:
        return {"counts": {str(k): v for k, v in self.counts.items()}, "total": self.total}


def _sniff_format(path: Path) -> str:
    return "tsv" if path.suffix.lower() in (".tsv", ".tab") else "csv"


def load_dataset(path, format: Optional[str] = None, label_space: LabelSpace = None,
                 split: str = "dev") -> LabeledDataset:
    """Read a CSV/TSV file into a :class:`LabeledDataset`.

    Row numbers in error messages count data rows from 1 (the header is row 0).
    """
    path = Path(path)
    if label_space is None:
        raise TypeError("label_space is required")
    fmt = format or _sniff_format(path)
    if fmt not in ("csv", "tsv"):
        raise ValueError(f"unsupported format {fmt!r}")
    delimiter = "\t" if fmt == "tsv" else ","

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedRow(0, "missing header row") from None
        for required in ("id", "text"):
            if required not in header:
                raise MalformedRow(0, f"header lacks required column {required!r}")
        col = {name: i for i, name in enumerate(header)}

        samples = []
        seen = set()
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise MalformedRow(rownum, f"expected {len(header)} columns, got {len(row)}")
            sample_id = row[col["id"]].strip()
            if not sample_id:
                raise MalformedRow(rownum, "empty id")
            if sample_id in seen:
                raise DuplicateId(rownum, sample_id)
            seen.add(sample_id)

            text = row[col["text"]].rstrip("\r\n")
            if not text.strip():
                raise MalformedRow(rownum, "empty text")

            gold = None
            if "label" in col:
                raw = row[col["label"]].strip()
                if raw:
                    try:
                        gold = int(raw)
                    except ValueError:
                        raise MalformedRow(rownum, f"label {raw!r} is not an integer") from None
                    if gold not in label_space:
                        raise LabelOutOfSpace(rownum, gold, label_space.labels)

            platform = Platform.UNKNOWN
            if "platform" in col:
                raw = row[col["platform"]].strip().lower()
                if raw:
                    try:
                        platform = Platform(raw)
                    except ValueError:
                        raise MalformedRow(rownum, f"unknown platform {raw!r}") from None

            samples.append(TextSample(sample_id, text, platform, gold))

    return LabeledDataset(label_space, tuple(samples), split)


def write_dataset(ds: LabeledDataset, path, format: Optional[str] = None) -> Path:
    path = Path(path)
    fmt = format or _sniff_format(path)
    delimiter = "\t" if fmt == "tsv" else ","
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["id", "text", "label", "platform"])
        for s in ds:
            writer.writerow([s.id, s.text, "" if s.gold_label is None else s.gold_label,
                             s.platform.value])
    return path


def file_checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def class_distribution(ds: LabeledDataset) -> ClassDistribution:
    counts = {label: 0 for label in ds.label_space.labels}
    for s in ds:
        if s.gold_label is None:
            raise UnlabeledSample(s.id)
        counts[s.gold_label] += 1
    return ClassDistribution(counts, len(ds))


def filter_by_platform(ds: LabeledDataset, platform) -> LabeledDataset:
    platform = Platform(platform)
    kept = tuple(s for s in ds if s.platform == platform)
    return LabeledDataset(ds.label_space, kept, ds.split)


# Synthetic corpora ----------------------------------------------------------

_SNIPPETS = {
    "task3": {
        0: ["I keep rehearsing what to say before every phone call.",
            "Does anyone else freeze up when the teacher calls on them?"],
        1: ["Went hiking this morning and my anxiety was so much lighter after.",
            "Sitting by the lake calmed me down more than anything else this week."],
        2: ["Walked to the park today, didn't really change how I felt.",
            "Tried jogging outside, felt about the same as before."],
        3: ["Going to the beach with crowds everywhere made me panic.",
            "The hike turned into a nightmare, I felt watched the whole time."],
    },
    "task5": {
        0: ["My nephew might have asthma, they are still testing.",
            "Autism awareness month starts next week, wear blue!"],
        1: ["My son was diagnosed with ADHD last year and school is finally easier.",
            "Our daughter got her autism diagnosis today, feeling all the things."],
    },
    "task6": {
        0: ["My brother turned 30 last week and we threw a party.",
            "Is it normal for a 5 year old to sleep this much?"],
        1: ["I'm 24 and have had this rash for two weeks.",
            "27f, sudden chest pain when breathing in, should I worry?"],
    },
}


def synthetic_dataset(task_id: str, counts: Mapping[int, int], split: str = "dev",
                      seed: int = 0, platforms: Iterable[str] = ("unknown",),
                      id_prefix: str = "s") -> LabeledDataset:
    """Build a shuffled dataset with exactly ``counts[label]`` samples per label.

    Texts are template snippets suffixed with the sample index so every row is
    distinct; platforms cycle through ``platforms``.
    """
    space = LabelSpace.for_task(task_id)
    labels = [label for label in space.labels for _ in range(counts.get(label, 0))]
    rng = random.Random(seed)
    rng.shuffle(labels)
    platforms = [Platform(p) for p in platforms]
    snippets = _SNIPPETS[task_id]
    samples = []
    for i, label in enumerate(labels):
        options = snippets[label]
        text = f"{options[i % len(options)]} (post {i})"
        samples.append(TextSample(f"{id_prefix}{i:05d}", text, platforms[i % len(platforms)], label))
    return LabeledDataset(space, tuple(samples), split)

