"""Classifier backends: prompted remote models, prediction-file replay, seeded mocks.

Every backend exposes ``name``, ``labels`` (its output label set) and
``predict(sample) -> Prediction``. Backends are immutable after construction
apart from their call counters and may be shared across worker threads.
"""

from __future__ import annotations

import hashlib
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..errors import (BackendError, BatchFailed, MalformedResponse, MissingPrediction,
                      RemoteFailure, SmmpipeError)
from ..predictions import Prediction, PredictionSet, read_prediction_file
from .cache import CacheEntry, CompletionRequest, ResponseCache, cache_get, cache_put, cache_stats
from .remote import HttpTransport, ProviderAdapter, RateLimiter, RemoteClient, SimulatedTransport
from .templates import (BUILTIN_TEMPLATES, PromptTemplate, get_template, parse_response,
                        render_prompt)

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 3
# majority class of the training split for every task
DEFAULT_FALLBACK_LABEL = 0


class Backend:
    name = "backend"
    labels = frozenset()

    def predict(self, sample) -> Prediction:
        raise NotImplementedError

    def counters(self) -> dict:
        return {}


class PromptedBackend(Backend):
    """Zero-shot classifier behind a remote completion endpoint.

    Cached responses are reused as-is, including unparseable ones, so a warm
    rerun issues no remote calls. Fresh responses are retried up to
    ``max_retries`` times; afterwards the sample resolves to ``fallback_label``
    (default: the template's fallback, else class 0) and the provenance is
    marked as an abstention.
    """

    def __init__(self, name, template: PromptTemplate, model_id, client: RemoteClient,
                 cache: ResponseCache = None, max_retries=DEFAULT_RETRIES,
                 fallback_label=None, retry_backoff=0.0,
                 max_output_length=4, temperature=0.0):
        self.name = name
        self.template = template
        self.model_id = model_id
        self.client = client
        self.cache = cache
        self.max_retries = int(max_retries)
        if fallback_label is None:
            fallback_label = template.fallback_label
        if fallback_label is None:
            fallback_label = DEFAULT_FALLBACK_LABEL
        if fallback_label not in template.labels:
            raise ValueError(f"backend {name!r}: fallback label {fallback_label} is not one of "
                             f"template outputs {sorted(template.labels)}")
        self.fallback_label = fallback_label
        self.retry_backoff = retry_backoff
        self.max_output_length = max_output_length
        self.temperature = temperature
        self.labels = template.labels
        self._lock = threading.Lock()
        self.remote_calls = 0
        self.cache_hits = 0
        self.abstentions = 0

    def request_for(self, sample) -> CompletionRequest:
        return CompletionRequest(self.model_id, self.template.instruction, sample.text,
                                 self.max_output_length, self.temperature)

    def _count(self, attr):
        with self._lock:
            setattr(self, attr, getattr(self, attr) + 1)

    def _abstain(self, sample, reason, raw):
        self._count("abstentions")
        logger.warning("%s: sample %s abstained (%s)", self.name, sample.id, reason)
        return Prediction(sample.id, self.fallback_label, f"{self.name}:abstain:{reason}", raw)

    def predict(self, sample) -> Prediction:
        request = self.request_for(sample)
        if self.cache is not None:
            entry = self.cache.lookup(request)
            if entry is not None:
                self._count("cache_hits")
                try:
                    label = parse_response(entry.response, self.template)
                except MalformedResponse:
                    return self._abstain(sample, "malformed", entry.response)
                return Prediction(sample.id, label, f"{self.name}:cache", entry.response)

        raw, reason = None, "remote"
        for attempt in range(self.max_retries + 1):
            if attempt and self.retry_backoff:
                time.sleep(self.retry_backoff * 2 ** (attempt - 1))
            self._count("remote_calls")
            try:
                raw = self.client.complete(request)
            except RemoteFailure as exc:
                reason = "remote"
                logger.info("%s: attempt %d for %s failed: %s", self.name, attempt + 1, sample.id, exc)
                continue
            try:
                label = parse_response(raw, self.template)
            except MalformedResponse:
                reason = "malformed"
                continue
            if self.cache is not None:
                self.cache.store(request, raw)
            return Prediction(sample.id, label, f"{self.name}:remote", raw)

        if reason == "malformed" and self.cache is not None:
            self.cache.store(request, raw)
        return self._abstain(sample, reason, raw)

    def counters(self) -> dict:
        return {"remote_calls": self.remote_calls, "cache_hits": self.cache_hits,
                "abstentions": self.abstentions}


class FileBackend(Backend):
    """Replays an exported ``id,label`` file from an externally trained model."""

    def __init__(self, name, source, labels=None):
        self.name = name
        if isinstance(source, (str, Path)):
            self.path = Path(source)
            self.table = read_prediction_file(self.path)
        else:
            self.path = None
            self.table = dict(source)
        self.labels = frozenset(labels) if labels is not None else frozenset(self.table.values())
        stray = set(self.table.values()) - self.labels
        if stray:
            raise BackendError(f"backend {name!r}: labels {sorted(stray)} outside {sorted(self.labels)}")

    def predict(self, sample) -> Prediction:
        try:
            label = self.table[sample.id]
        except KeyError:
            raise MissingPrediction(self.name, sample.id) from None
        return Prediction(sample.id, label, f"{self.name}:file")


@dataclass(frozen=True)
class MockSpec:
    confusion: dict
    seed: int = 0

    def __post_init__(self):
        rows = {}
        for gold, row in dict(self.confusion).items():
            row = {int(k): float(v) for k, v in dict(row).items()}
            if any(v < 0 for v in row.values()):
                raise ValueError(f"mock confusion row {gold}: negative probability")
            if abs(math.fsum(row.values()) - 1.0) > 1e-9:
                raise ValueError(f"mock confusion row {gold}: probabilities sum to "
                                 f"{math.fsum(row.values())}, not 1")
            rows[int(gold)] = dict(sorted(row.items()))
        object.__setattr__(self, "confusion", rows)

    @classmethod
    def identity(cls, labels, seed=0):
        return cls({l: {l: 1.0} for l in labels}, seed)

    @classmethod
    def binary(cls, recall, specificity=1.0, seed=0):
        return cls({1: {1: recall, 0: 1.0 - recall}, 0: {0: specificity, 1: 1.0 - specificity}}, seed)

    @property
    def labels(self) -> frozenset:
        return frozenset(l for row in self.confusion.values() for l, p in row.items() if p > 0)


def uniform_draw(seed, sample_id) -> float:
    """Counter-based uniform in [0, 1) keyed on (seed, sample id)."""
    digest = hashlib.sha256(f"{seed}\x1f{sample_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0 ** 64


class MockBackend(Backend):
    """Draws each prediction from the confusion row of the sample's gold label."""

    def __init__(self, name, spec: MockSpec, labels=None):
        self.name = name
        self.spec = spec
        self.labels = frozenset(labels) if labels is not None else spec.labels

    def predict(self, sample) -> Prediction:
        if sample.gold_label is None:
            raise BackendError(f"mock backend {self.name!r} needs a gold label for {sample.id!r}")
        try:
            row = self.spec.confusion[sample.gold_label]
        except KeyError:
            raise BackendError(
                f"mock backend {self.name!r} has no confusion row for gold {sample.gold_label}"
            ) from None
        u = uniform_draw(self.spec.seed, sample.id)
        acc = 0.0
        label = None
        for label, p in row.items():
            if p <= 0:
                continue
            acc += p
            if u < acc:
                break
        return Prediction(sample.id, label, f"{self.name}:mock")


class FunctionBackend(Backend):
    """Wraps a plain ``sample -> label`` callable; counts invocations."""

    def __init__(self, name, fn, labels):
        self.name = name
        self.fn = fn
        self.labels = frozenset(labels)
        self.calls = 0
        self._lock = threading.Lock()

    def predict(self, sample) -> Prediction:
        with self._lock:
            self.calls += 1
        return Prediction(sample.id, self.fn(sample), f"{self.name}:fn")

    def counters(self) -> dict:
        return {"calls": self.calls}


def predict(backend: Backend, sample) -> Prediction:
    return backend.predict(sample)


def map_samples(fn, samples, parallelism=1):
    """Apply ``fn`` to each sample, returning results (or the raised
    :class:`SmmpipeError`) in input order regardless of completion order."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def guarded(sample):
        try:
            return fn(sample)
        except SmmpipeError as exc:
            return exc

    samples = list(samples)
    if parallelism == 1 or len(samples) <= 1:
        return [guarded(s) for s in samples]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(guarded, samples))


def resolve_failures(name, samples, results, failure_ceiling=0.0,
                     fallback_label=DEFAULT_FALLBACK_LABEL):
    """Turn per-sample results into predictions, enforcing the failure ceiling.

    Failures within the ceiling resolve to ``fallback_label`` and are flagged.
    """
    failures = {s.id: r for s, r in zip(samples, results) if isinstance(r, Exception)}
    if failures:
        if len(failures) / len(results) > failure_ceiling:
            first = next(iter(failures.values()))
            err = BatchFailed(name, failures, len(results))
            err.exit_code = getattr(first, "exit_code", err.exit_code)
            raise err
    out = []
    for s, r in zip(samples, results):
        if isinstance(r, Exception):
            r = Prediction(s.id, fallback_label, f"{name}:abstain:error", str(r))
        out.append(r)
    return out


def predict_batch(backend: Backend, ds, parallelism=1, failure_ceiling=0.0) -> PredictionSet:
    samples = list(ds)
    results = map_samples(backend.predict, samples, parallelism)
    preds = resolve_failures(backend.name, samples, results, failure_ceiling)
    task_id = ds.label_space.task_id if hasattr(ds, "label_space") else ""
    return PredictionSet.from_list(task_id, preds, backend.name)


__all__ = [
    "Backend", "PromptedBackend", "FileBackend", "MockBackend", "MockSpec", "FunctionBackend",
    "PromptTemplate", "BUILTIN_TEMPLATES", "get_template", "render_prompt", "parse_response",
    "CompletionRequest", "CacheEntry", "ResponseCache", "cache_get", "cache_put", "cache_stats",
    "RemoteClient", "ProviderAdapter", "HttpTransport", "SimulatedTransport", "RateLimiter",
    "predict", "predict_batch", "map_samples", "resolve_failures", "uniform_draw",
]
