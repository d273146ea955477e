"""Provider-agnostic completion client.

Requests travel as a thin envelope ``{model, instruction, input, max_tokens,
temperature}``; a :class:`ProviderAdapter` renames envelope fields, adds static
fields and locates the response text, so new providers are configuration only.
"""

from __future__ import annotations

import collections
import hashlib
import logging
import os
import threading
import time
from dataclasses import dataclass, field

from ..errors import MissingCredentials, RemoteFailure
from .cache import CompletionRequest
from .templates import DELIMITER

logger = logging.getLogger(__name__)


class RateLimiter:
    """Sliding one-minute window plus a cap on concurrent requests."""

    def __init__(self, requests_per_minute=None, max_in_flight=4, clock=time.monotonic,
                 sleep=time.sleep):
        self.requests_per_minute = requests_per_minute
        self._slots = threading.BoundedSemaphore(max(1, int(max_in_flight)))
        self._sent = collections.deque()
        self._lock = threading.Lock()
        self._clock = clock
        self._sleep = sleep

    def _wait_budget(self):
        if not self.requests_per_minute:
            return
        while True:
            with self._lock:
                now = self._clock()
                while self._sent and now - self._sent[0] >= 60.0:
                    self._sent.popleft()
                if len(self._sent) < self.requests_per_minute:
                    self._sent.append(now)
                    return
                delay = 60.0 - (now - self._sent[0])
            self._sleep(max(delay, 0.0))

    def __enter__(self):
        self._slots.acquire()
        try:
            self._wait_budget()
        except BaseException:
            self._slots.release()
            raise
        return self

    def __exit__(self, *exc):
        self._slots.release()
        return False


def _dig(obj, path):
    for part in path.split(".") if path else []:
        if isinstance(obj, list):
            obj = obj[int(part)]
        else:
            obj = obj[part]
    return obj


@dataclass
class ProviderAdapter:
    request_fields: dict = field(default_factory=dict)
    static_fields: dict = field(default_factory=dict)
    response_field: str = "text"
    token_env: str = "SMMPIPE_API_TOKEN"
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"

    # "prompt" (instruction and input pre-joined) is sent only when mapped
    ENVELOPE = ("model", "instruction", "input", "max_tokens", "temperature", "prompt")

    def __post_init__(self):
        unknown = set(self.request_fields) - set(self.ENVELOPE)
        if unknown:
            raise ValueError(f"request_fields names unknown envelope keys {sorted(unknown)}")

    def build_body(self, request: CompletionRequest) -> dict:
        envelope = {
            "model": request.model_id,
            "instruction": request.instruction,
            "input": request.input_text,
            "max_tokens": request.max_output_length,
            "temperature": request.temperature,
        }
        if "prompt" in self.request_fields:
            envelope["prompt"] = request.instruction + DELIMITER + request.input_text
        body = dict(self.static_fields)
        for key, value in envelope.items():
            body[self.request_fields.get(key, key)] = value
        return body

    def headers(self) -> dict:
        token = os.environ.get(self.token_env)
        if not token:
            raise MissingCredentials(f"environment variable {self.token_env} is not set")
        value = f"{self.auth_scheme} {token}" if self.auth_scheme else token
        return {self.auth_header: value, "Content-Type": "application/json"}

    def extract_text(self, payload) -> str:
        try:
            text = _dig(payload, self.response_field)
        except (KeyError, IndexError, TypeError, ValueError):
            raise RemoteFailure(f"response lacks field {self.response_field!r}") from None
        if not isinstance(text, str):
            raise RemoteFailure(f"response field {self.response_field!r} is not text")
        return text


class HttpTransport:
    def __init__(self, timeout=30.0):
        import httpx

        self._client = httpx.Client(timeout=timeout)
        self._httpx = httpx

    def __call__(self, url, headers, body):
        try:
            resp = self._client.post(url, headers=headers, json=body)
            resp.raise_for_status()
            return resp.json()
        except self._httpx.HTTPError as exc:
            raise RemoteFailure(f"POST {url} failed: {exc}") from exc
        except ValueError as exc:
            raise RemoteFailure(f"POST {url} returned non-JSON body") from exc


class SimulatedTransport:
    """Offline stand-in that answers with a digit chosen by hashing the request.

    Deterministic in ``(seed, body)``; useful for dry runs and cache checks.
    """

    needs_credentials = False

    def __init__(self, outputs="01", seed=0):
        self.outputs = str(outputs)
        self.seed = seed
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, url, headers, body):
        with self._lock:
            self.calls += 1
        blob = repr((self.seed, sorted(body.items()))).encode("utf-8")
        h = int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")
        return {"text": self.outputs[h % len(self.outputs)]}


class RemoteClient:
    def __init__(self, endpoint, adapter=None, transport=None, requests_per_minute=None,
                 max_in_flight=4):
        self.endpoint = endpoint
        self.adapter = adapter or ProviderAdapter()
        self.transport = transport if transport is not None else HttpTransport()
        self.limiter = RateLimiter(requests_per_minute, max_in_flight)
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        if getattr(self.transport, "needs_credentials", True):
            headers = self.adapter.headers()
        else:
            headers = {}
        body = self.adapter.build_body(request)
        with self.limiter:
            with self._lock:
                self.calls += 1
            try:
                payload = self.transport(self.endpoint, headers, body)
            except RemoteFailure:
                raise
            except Exception as exc:
                raise RemoteFailure(f"transport error: {exc}") from exc
        return self.adapter.extract_text(payload)
