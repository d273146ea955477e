"""Experiment configuration: one YAML document per experiment.

Relative paths resolve against the config file's directory. Secrets never
appear here; prompted providers name the environment variable holding the token.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Optional

import yaml

from .backends import (BUILTIN_TEMPLATES, DEFAULT_FALLBACK_LABEL, DEFAULT_RETRIES, FileBackend,
                       MockBackend, MockSpec, PromptedBackend, PromptTemplate, ProviderAdapter,
                       RemoteClient, ResponseCache, SimulatedTransport)
from .corpus import SPLITS, TASK_LABELS, LabelSpace
from .errors import ConfigInvalid, InvalidPipelineSpec, SmmpipeError
from .evaluation import DEFAULT_BETA
from .pipelines import VARIANTS, PipelineSpec

BACKEND_KINDS = ("prompted", "file", "mock")
FORMATS = ("json", "md")


def _require(mapping, key, where):
    if not isinstance(mapping, dict):
        raise ConfigInvalid(where, "expected a mapping")
    if key not in mapping:
        raise ConfigInvalid(f"{where}.{key}" if where else key, "is required")
    return mapping[key]


def _number(value, where, kind=float, minimum=None):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigInvalid(where, f"expected a {kind.__name__}, got {value!r}") from None
    if minimum is not None and out < minimum:
        raise ConfigInvalid(where, f"must be >= {minimum}")
    return out


@dataclass
class ExperimentConfig:
    path: Path
    raw: dict
    checksum: str
    task_id: str
    data: dict
    parallelism: int = 1
    retries: int = DEFAULT_RETRIES
    failure_ceiling: float = 0.0
    fallback_label: int = DEFAULT_FALLBACK_LABEL
    cache_dir: Optional[Path] = None
    output_dir: Optional[Path] = None
    beta: float = DEFAULT_BETA
    formats: tuple = FORMATS
    figures: bool = True
    pairs: list = field(default_factory=list)

    @property
    def base(self) -> Path:
        return self.path.parent

    @property
    def label_space(self) -> LabelSpace:
        return LabelSpace.for_task(self.task_id)

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    def dataset_path(self, split) -> Path:
        if split not in self.data:
            raise ConfigInvalid(f"data.{split}", f"no dataset configured for split {split!r}")
        return self.resolve(self.data[split])

    # building ---------------------------------------------------------------

    def templates(self) -> dict:
        out = dict(BUILTIN_TEMPLATES)
        for name, body in (self.raw.get("templates") or {}).items():
            out[name] = _template(name, body, f"templates.{name}")
        return out

    def build_backends(self, cache: Optional[ResponseCache] = None, transports=None) -> dict:
        """Instantiate every configured backend.

        ``transports`` optionally maps provider name -> transport callable,
        overriding the configured one (used to instrument tests).
        """
        transports = transports or {}
        templates = self.templates()
        providers = self.raw.get("providers") or {}
        clients = {}
        out = {}
        backends = self.raw.get("backends")
        if not isinstance(backends, dict) or not backends:
            raise ConfigInvalid("backends", "at least one backend must be defined")
        for name, body in backends.items():
            where = f"backends.{name}"
            kind = _require(body, "kind", where)
            if kind not in BACKEND_KINDS:
                raise ConfigInvalid(f"{where}.kind", f"unknown kind {kind!r}; expected one of {BACKEND_KINDS}")
            labels = body.get("labels")
            try:
                if kind == "file":
                    out[name] = FileBackend(name, self.resolve(_require(body, "path", where)), labels)
                elif kind == "mock":
                    spec = MockSpec(_require(body, "confusion", where), int(body.get("seed", 0)))
                    out[name] = MockBackend(name, spec, labels)
                else:
                    tref = _require(body, "template", where)
                    if isinstance(tref, dict):
                        template = _template(f"{name}.template", tref, f"{where}.template")
                    elif tref in templates:
                        template = templates[tref]
                    else:
                        raise ConfigInvalid(f"{where}.template", f"unknown prompt template {tref!r}")
                    pname = body.get("provider", "default")
                    if pname not in clients:
                        if pname not in providers:
                            raise ConfigInvalid(f"{where}.provider", f"undefined provider {pname!r}")
                        clients[pname] = _client(pname, providers[pname], transports.get(pname))
                    fallback = body.get("fallback_label")
                    if fallback is None and self.fallback_label in template.labels:
                        fallback = self.fallback_label
                    out[name] = PromptedBackend(
                        name, template, str(_require(body, "model", where)), clients[pname],
                        cache=cache, max_retries=self.retries,
                        fallback_label=None if fallback is None else int(fallback),
                        retry_backoff=_number(body.get("retry_backoff", 0.0), f"{where}.retry_backoff", minimum=0),
                        max_output_length=_number(body.get("max_output_length", 4),
                                                  f"{where}.max_output_length", int, 1),
                        temperature=_number(body.get("temperature", 0.0), f"{where}.temperature", minimum=0),
                    )
            except ConfigInvalid:
                raise
            except OSError as exc:
                raise ConfigInvalid(where, f"cannot read {exc.filename}: {exc.strerror}") from None
            except (ValueError, TypeError) as exc:
                raise ConfigInvalid(where, str(exc)) from None
            except SmmpipeError as exc:
                raise ConfigInvalid(where, str(exc)) from None
        return out

    def build_pipelines(self, backends: dict) -> list:
        raw = self.raw.get("pipelines")
        if not isinstance(raw, list) or not raw:
            raise ConfigInvalid("pipelines", "expected a non-empty list")
        built = {}
        out = []
        for i, body in enumerate(raw):
            where = f"pipelines[{i}]"
            spec = _pipeline(body, where, backends, built)
            # a direct wrapper may borrow its backend's name; anything else would be ambiguous
            wraps_self = (spec.variant == "direct" and spec.router is None
                          and spec.members[0] is backends.get(spec.name))
            if spec.name in built or (spec.name in backends and not wraps_self):
                raise ConfigInvalid(f"{where}.name", f"name {spec.name!r} is already used")
            stray = spec.labels - set(self.label_space.labels)
            if stray:
                raise ConfigInvalid(where, f"pipeline {spec.name!r} can emit labels {sorted(stray)} "
                                           f"outside the {self.task_id} label space")
            built[spec.name] = spec
            out.append(spec)
        return out


def _template(name, body, where) -> PromptTemplate:
    instruction = _require(body, "instruction", where)
    outputs = _require(body, "outputs", where)
    fallback = body.get("fallback_label")
    try:
        if isinstance(outputs, dict):
            mapping = {str(k): int(v) for k, v in outputs.items()}
        else:
            mapping = {str(o): int(o) for o in outputs}
        return PromptTemplate(name, instruction, frozenset(mapping), MappingProxyType(mapping),
                              None if fallback is None else int(fallback))
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(where, str(exc)) from None


def _client(name, body, transport=None) -> RemoteClient:
    where = f"providers.{name}"
    if not isinstance(body, dict):
        raise ConfigInvalid(where, "expected a mapping")
    kind = body.get("transport", "http")
    if transport is None:
        if kind == "simulated":
            transport = SimulatedTransport(str(body.get("outputs", "01")), body.get("seed", 0))
        elif kind != "http":
            raise ConfigInvalid(f"{where}.transport", f"unknown transport {kind!r}")
    if "token" in body or "api_key" in body:
        raise ConfigInvalid(where, "secrets are not allowed in config; use token_env")
    try:
        adapter = ProviderAdapter(
            request_fields=dict(body.get("request_fields") or {}),
            static_fields=dict(body.get("static_fields") or {}),
            response_field=body.get("response_field", "text"),
            token_env=body.get("token_env", "SMMPIPE_API_TOKEN"),
            auth_header=body.get("auth_header", "Authorization"),
            auth_scheme=body.get("auth_scheme", "Bearer"),
        )
    except ValueError as exc:
        raise ConfigInvalid(f"{where}.request_fields", str(exc)) from None
    endpoint = body.get("endpoint")
    if kind == "http" and not endpoint:
        raise ConfigInvalid(f"{where}.endpoint", "is required for http transport")
    rpm = body.get("requests_per_minute")
    return RemoteClient(
        endpoint or "simulated://", adapter, transport,
        requests_per_minute=_number(rpm, f"{where}.requests_per_minute", int, 1) if rpm else None,
        max_in_flight=_number(body.get("max_in_flight", 4), f"{where}.max_in_flight", int, 1),
    )


def _member(ref, where, backends, built):
    if isinstance(ref, dict):
        return _pipeline(ref, where, backends, built)
    if not isinstance(ref, str):
        raise ConfigInvalid(where, f"expected a backend name or nested pipeline, got {ref!r}")
    if ref in backends:
        return backends[ref]
    if ref in built:
        return built[ref]
    raise ConfigInvalid(where, f"undefined backend or pipeline {ref!r}")


def _pipeline(body, where, backends, built) -> PipelineSpec:
    if not isinstance(body, dict):
        raise ConfigInvalid(where, "expected a mapping")
    variant = _require(body, "variant", where)
    if variant not in VARIANTS:
        raise ConfigInvalid(f"{where}.variant", f"unknown variant {variant!r}; expected one of {VARIANTS}")
    name = str(body.get("name") or f"{variant}")
    members = body.get("members") or []
    if not isinstance(members, list):
        raise ConfigInvalid(f"{where}.members", "expected a list")
    resolved = [_member(m, f"{where}.members[{j}]", backends, built) for j, m in enumerate(members)]
    router = None
    if body.get("router") is not None:
        if not isinstance(body["router"], dict):
            raise ConfigInvalid(f"{where}.router", "expected a platform -> member mapping")
        router = {p: _member(m, f"{where}.router.{p}", backends, built) for p, m in body["router"].items()}
    try:
        return PipelineSpec(name, variant, resolved, body.get("tie_break"), router)
    except InvalidPipelineSpec as exc:
        raise ConfigInvalid(where, str(exc).split("] ", 1)[-1]) from None
    except ValueError as exc:
        raise ConfigInvalid(f"{where}.router", str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ConfigInvalid(str(path), f"cannot read config: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(blob.decode("utf-8"))
    except (yaml.YAMLError, UnicodeDecodeError) as exc:
        raise ConfigInvalid(str(path), f"not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigInvalid(str(path), "top level must be a mapping")

    task = _require(raw, "task", "")
    if task not in TASK_LABELS:
        raise ConfigInvalid("task", f"unknown task {task!r}; expected one of {sorted(TASK_LABELS)}")
    data = _require(raw, "data", "")
    if not isinstance(data, dict) or not data:
        raise ConfigInvalid("data", "expected a split -> path mapping")
    for split in data:
        if split not in SPLITS:
            raise ConfigInvalid(f"data.{split}", f"unknown split; expected one of {SPLITS}")

    ev = raw.get("evaluation") or {}
    formats = ev.get("formats", list(FORMATS))
    for f in formats:
        if f not in FORMATS:
            raise ConfigInvalid("evaluation.formats", f"unknown format {f!r}")
    beta = _number(ev.get("beta", DEFAULT_BETA), "evaluation.beta")
    if beta <= 0:
        raise ConfigInvalid("evaluation.beta", "must be positive")
    pairs = ev.get("pairs") or []
    for i, pair in enumerate(pairs):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigInvalid(f"evaluation.pairs[{i}]", "expected [pipeline_a, pipeline_b]")
    ceiling = _number(raw.get("failure_ceiling", 0.0), "failure_ceiling", minimum=0)
    if ceiling > 1:
        raise ConfigInvalid("failure_ceiling", "must be a fraction in [0, 1]")
    fallback = _number(raw.get("fallback_label", DEFAULT_FALLBACK_LABEL), "fallback_label", int)
    if fallback not in TASK_LABELS[task]:
        raise ConfigInvalid("fallback_label", f"{fallback} is outside the {task} label space")

    cfg = ExperimentConfig(
        path=path.resolve(),
        raw=raw,
        checksum=hashlib.sha256(blob).hexdigest(),
        task_id=task,
        data=dict(data),
        parallelism=_number(raw.get("parallelism", 1), "parallelism", int, 1),
        retries=_number(raw.get("retries", DEFAULT_RETRIES), "retries", int, 0),
        failure_ceiling=ceiling,
        fallback_label=fallback,
        beta=beta,
        formats=tuple(formats),
        figures=bool(ev.get("figures", True)),
        pairs=[tuple(p) for p in pairs],
    )
    cfg.cache_dir = cfg.resolve(raw.get("cache_dir", ".smmpipe-cache"))
    cfg.output_dir = cfg.resolve(raw.get("output_dir", "runs"))
    # validate references eagerly so errors surface before any data is touched
    backends = cfg.build_backends(cache=None, transports=_NULL_TRANSPORTS)
    names = {p.name for p in cfg.build_pipelines(backends)}
    for i, (a, b) in enumerate(cfg.pairs):
        for ref in (a, b):
            if ref not in names:
                raise ConfigInvalid(f"evaluation.pairs[{i}]", f"undefined pipeline {ref!r}")
    return cfg


class _NullTransports(dict):
    """Validation-time stand-in so building never opens network clients."""

    def get(self, key, default=None):
        return _null_transport


def _null_transport(url, headers, body):
    raise AssertionError("validation transport must never be called")


_NULL_TRANSPORTS = _NullTransports()
