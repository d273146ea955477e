"""Persistent response cache for prompted backends.

Entries live in an append-only JSON-lines file inside the cache directory; each
line stores the request tuple, the raw response and a checksum. Hit/miss counters
are cumulative across processes and kept in a sidecar ``stats.json``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from ..errors import CorruptCacheFile

logger = logging.getLogger(__name__)

ENTRIES_FILE = "responses.jsonl"
STATS_FILE = "stats.json"


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    instruction: str
    input_text: str
    max_output_length: int = 4
    temperature: float = 0.0

    def __post_init__(self):
        if self.max_output_length < 1:
            raise ValueError("max_output_length must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        # 0 and 0.0 must serialize identically
        object.__setattr__(self, "temperature", float(self.temperature))
        object.__setattr__(self, "max_output_length", int(self.max_output_length))

    def key_tuple(self) -> list:
        return [self.model_id, self.instruction, self.input_text,
                self.max_output_length, self.temperature]

    def cache_key(self) -> str:
        blob = json.dumps(self.key_tuple(), ensure_ascii=False, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    response: str
    created_at: float


def _checksum(key, request, response) -> str:
    blob = json.dumps([key, request, response], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """Keyed store of raw completion responses.

    Reads are lock-free dictionary lookups; writes and counter updates are
    serialized by a lock. A corrupt entries file is moved aside and the cache
    starts empty.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self._lock = threading.Lock()
        self._entries = {}
        self.hits = 0
        self.misses = 0
        self._base_hits = 0
        self._base_misses = 0
        self.warnings = []
        self._load()

    @property
    def entries_path(self) -> Path:
        return self.directory / ENTRIES_FILE

    @property
    def stats_path(self) -> Path:
        return self.directory / STATS_FILE

    def _load(self):
        if self.stats_path.exists():
            try:
                stats = json.loads(self.stats_path.read_text(encoding="utf-8"))
                self._base_hits = int(stats.get("hits", 0))
                self._base_misses = int(stats.get("misses", 0))
            except (ValueError, TypeError):
                self._warn(CorruptCacheFile(f"unreadable stats file {self.stats_path}; counters reset"))
        if not self.entries_path.exists():
            return
        entries = {}
        with open(self.entries_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    key, request, response = rec["key"], rec["request"], rec["response"]
                    ok = rec["checksum"] == _checksum(key, request, response)
                except (ValueError, KeyError, TypeError):
                    ok = False
                if not ok:
                    aside = self.entries_path.with_suffix(".corrupt")
                    self.entries_path.replace(aside)
                    self._warn(CorruptCacheFile(
                        f"{self.entries_path} line {lineno}: checksum mismatch; "
                        f"moved to {aside.name} and treating cache as empty"))
                    return
                entries[key] = CacheEntry(response, float(rec.get("created_at", 0.0)))
        self._entries = entries

    def _warn(self, err):
        self.warnings.append(str(err))
        logger.warning("%s", err)

    def get(self, key: str):
        entry = self._entries.get(key)
        with self._lock:
            if entry is None:
                self.misses += 1
            else:
                self.hits += 1
        return entry

    def put(self, key: str, entry: CacheEntry, request=None):
        request = list(request) if request is not None else None
        rec = {
            "key": key,
            "request": request,
            "response": entry.response,
            "created_at": entry.created_at,
            "checksum": _checksum(key, request, entry.response),
        }
        line = json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n"
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            with open(self.entries_path, "a", encoding="utf-8") as fh:
                fh.write(line)
            self._entries[key] = entry

    def lookup(self, request: CompletionRequest):
        return self.get(request.cache_key())

    def store(self, request: CompletionRequest, response: str):
        self.put(request.cache_key(), CacheEntry(response, time.time()), request.key_tuple())

    def stats(self) -> dict:
        return {
            "entries": len(self._entries),
            "hits": self._base_hits + self.hits,
            "misses": self._base_misses + self.misses,
        }

    def flush(self):
        """Persist cumulative counters."""
        with self._lock:
            if not self._entries and not (self.hits or self.misses) and not self.directory.exists():
                return
            self.directory.mkdir(parents=True, exist_ok=True)
            stats = self.stats()
            self.stats_path.write_text(json.dumps({"hits": stats["hits"], "misses": stats["misses"]}),
                                       encoding="utf-8")

    def purge(self):
        with self._lock:
            for p in (self.entries_path, self.stats_path):
                if p.exists():
                    p.unlink()
            self._entries = {}
            self.hits = self.misses = self._base_hits = self._base_misses = 0

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries


def cache_get(cache: ResponseCache, key):
    return cache.get(key)


def cache_put(cache: ResponseCache, key, entry):
    cache.put(key, entry)


def cache_stats(cache: ResponseCache) -> dict:
    return cache.stats()
