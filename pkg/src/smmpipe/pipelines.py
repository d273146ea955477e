"""Composition of backends into direct, cascade, rule and vote topologies.

A :class:`PipelineSpec` is a tree: members are backends or nested specs. Each
sample is evaluated independently, so samples may run concurrently; inside one
sample the cascade stages run strictly in order.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .backends import map_samples, resolve_failures
from .corpus import Platform
from .errors import EmptyMemberList, IdMismatch, InvalidPipelineSpec, RouterGap
from .predictions import Prediction, PredictionSet

VARIANTS = ("direct", "two_stage", "and_rule", "or_rule", "majority_vote")

GATE_LABELS = frozenset({0, 1})
STAGE2_LABELS = frozenset({1, 2, 3})
BINARY = frozenset({0, 1})


# Label combinators ----------------------------------------------------------

def classify_two_stage(gate_label: int, stage2: Callable[[], int]) -> int:
    """Gate 0 short-circuits to 0; otherwise the deferred second stage decides."""
    if gate_label == 0:
        return 0
    return stage2()


def and_rule(labels: Sequence[int]) -> int:
    if not labels:
        raise EmptyMemberList("and_rule")
    return int(all(label == 1 for label in labels))


def or_rule(labels: Sequence[int]) -> int:
    if not labels:
        raise EmptyMemberList("or_rule")
    return int(any(label == 1 for label in labels))


def majority_vote(labels: Sequence[int], tie_break: Optional[Sequence[int]] = None) -> int:
    """Plurality label; ties go to the highest-priority member voting for a tied label.

    ``tie_break`` lists member indices from highest to lowest priority and
    defaults to listing order.
    """
    if not labels:
        raise EmptyMemberList("majority_vote")
    order = list(range(len(labels))) if tie_break is None else list(tie_break)
    if sorted(order) != list(range(len(labels))):
        raise InvalidPipelineSpec(f"tie_break {order} must be a permutation of member indices")
    counts = collections.Counter(labels)
    top = max(counts.values())
    tied = {label for label, n in counts.items() if n == top}
    if len(tied) == 1:
        return next(iter(tied))
    for i in order:
        if labels[i] in tied:
            return labels[i]
    raise AssertionError("unreachable")


# Specs ----------------------------------------------------------------------

def node_name(node) -> str:
    return node.name


def output_labels(node) -> frozenset:
    if isinstance(node, PipelineSpec):
        return node.labels
    return frozenset(node.labels)


@dataclass
class PipelineSpec:
    name: str
    variant: str
    members: list = field(default_factory=list)
    tie_break: Optional[list] = None
    router: Optional[dict] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidPipelineSpec(f"{self.name}: unknown variant {self.variant!r}")
        self.members = list(self.members)
        if self.router is not None:
            if self.variant != "direct":
                raise InvalidPipelineSpec(f"{self.name}: router is only valid for direct pipelines")
            self.router = {Platform(p): m for p, m in dict(self.router).items()}
            if not self.router:
                raise InvalidPipelineSpec(f"{self.name}: router is empty")
        n = len(self.members)
        if self.variant == "direct":
            allowed = (0, 1) if self.router else (1,)
            if n not in allowed:
                raise InvalidPipelineSpec(f"{self.name}: direct takes exactly one member, got {n}")
        elif self.variant == "two_stage":
            if n != 2:
                raise InvalidPipelineSpec(f"{self.name}: two_stage takes gate and stage2, got {n} members")
            gate, stage2 = self.members
            if not output_labels(gate) <= GATE_LABELS:
                raise InvalidPipelineSpec(
                    f"{self.name}: gate {node_name(gate)!r} outputs {sorted(output_labels(gate))}, "
                    f"must be within {{0, 1}}")
            if not output_labels(stage2) <= STAGE2_LABELS:
                raise InvalidPipelineSpec(
                    f"{self.name}: stage2 {node_name(stage2)!r} outputs {sorted(output_labels(stage2))}, "
                    f"must be within {{1, 2, 3}}")
        else:
            if n < 2:
                raise InvalidPipelineSpec(f"{self.name}: {self.variant} needs at least two members")
            if self.variant in ("and_rule", "or_rule"):
                for m in self.members:
                    if not output_labels(m) <= BINARY:
                        raise InvalidPipelineSpec(
                            f"{self.name}: member {node_name(m)!r} outputs "
                            f"{sorted(output_labels(m))}, rules need binary members")
            else:
                sets = {output_labels(m) for m in self.members}
                if len(sets) != 1:
                    raise InvalidPipelineSpec(
                        f"{self.name}: majority_vote members disagree on label sets "
                        f"{[sorted(s) for s in sets]}")
        if self.tie_break is not None:
            if self.variant != "majority_vote":
                raise InvalidPipelineSpec(f"{self.name}: tie_break only applies to majority_vote")
            names = [node_name(m) for m in self.members]
            order = []
            for ref in self.tie_break:
                idx = names.index(ref) if isinstance(ref, str) and ref in names else ref
                if not isinstance(idx, int) or not 0 <= idx < n:
                    raise InvalidPipelineSpec(f"{self.name}: tie_break entry {ref!r} is not a member")
                order.append(idx)
            if sorted(order) != list(range(n)):
                raise InvalidPipelineSpec(f"{self.name}: tie_break must rank every member exactly once")
            self.tie_break = order

    @property
    def labels(self) -> frozenset:
        if self.variant == "direct":
            nodes = list(self.router.values()) if self.router else []
            nodes += self.members
            return frozenset().union(*(output_labels(m) for m in nodes))
        if self.variant == "two_stage":
            return frozenset({0}) | output_labels(self.members[1])
        if self.variant in ("and_rule", "or_rule"):
            return BINARY
        return output_labels(self.members[0])

    def backends(self) -> list:
        """Every leaf backend in the tree, each listed once."""
        out = []
        nodes = list(self.members) + (list(self.router.values()) if self.router else [])
        for m in nodes:
            leaves = m.backends() if isinstance(m, PipelineSpec) else [m]
            for leaf in leaves:
                if all(leaf is not seen for seen in out):
                    out.append(leaf)
        return out

    def route(self, sample):
        if self.router:
            member = self.router.get(sample.platform)
            if member is not None:
                return member
            if self.members:
                return self.members[0]
            raise RouterGap(self.name, sample.id, str(sample.platform))
        return self.members[0]

    def check_routes(self, ds):
        """Fail fast on samples whose platform no router in the tree covers."""
        for s in ds:
            self._check_sample(s)

    def _check_sample(self, sample):
        nodes = [self.route(sample)] if self.variant == "direct" else self.members
        for m in nodes:
            if isinstance(m, PipelineSpec):
                m._check_sample(sample)


def _evaluate(node, sample) -> Prediction:
    if not isinstance(node, PipelineSpec):
        return node.predict(sample)
    spec = node

    if spec.variant == "direct":
        p = _evaluate(spec.route(sample), sample)
        return Prediction(sample.id, p.label, f"{spec.name}:direct[{p.provenance}]", p.raw_response)

    if spec.variant == "two_stage":
        gate, stage2 = spec.members
        g = _evaluate(gate, sample)
        second = []

        def run_stage2():
            p2 = _evaluate(stage2, sample)
            second.append(p2)
            return p2.label

        label = classify_two_stage(g.label, run_stage2)
        stage = f"{node_name(stage2)}={second[0].label}" if second else f"{node_name(stage2)}=skipped"
        detail = f"{node_name(gate)}={g.label};{stage}"
        return Prediction(sample.id, label, f"{spec.name}:two_stage[{detail}]")

    preds = [_evaluate(m, sample) for m in spec.members]
    labels = [p.label for p in preds]
    if spec.variant == "and_rule":
        label = and_rule(labels)
    elif spec.variant == "or_rule":
        label = or_rule(labels)
    else:
        label = majority_vote(labels, spec.tie_break)
    detail = ",".join(
        f"{node_name(m)}={p.label}" + ("!abstain" if p.abstained else "")
        for m, p in zip(spec.members, preds)
    )
    return Prediction(sample.id, label, f"{spec.name}:{spec.variant}[{detail}]")


def run_pipeline(spec, ds, parallelism: int = 1, failure_ceiling: float = 0.0) -> PredictionSet:
    if not isinstance(spec, PipelineSpec):
        spec = PipelineSpec(node_name(spec), "direct", [spec])
    spec.check_routes(ds)
    samples = list(ds)
    results = map_samples(lambda s: _evaluate(spec, s), samples, parallelism)
    preds = resolve_failures(spec.name, samples, results, failure_ceiling)
    return PredictionSet.from_list(ds.label_space.task_id, preds, spec.name)


def or_union(*sets: PredictionSet, positive: int = 1, name: str = "or_union") -> PredictionSet:
    """Sample-wise OR over saved binary prediction sets with identical ids."""
    if not sets:
        raise EmptyMemberList("or_union")
    ids = sets[0].ids()
    for ps in sets[1:]:
        if set(ps.ids()) != set(ids):
            raise IdMismatch(set(ids) - set(ps.ids()), set(ps.ids()) - set(ids))
    preds = []
    for sid in ids:
        votes = [int(ps[sid].label == positive) for ps in sets]
        preds.append(Prediction(sid, positive if or_rule(votes) else 0,
                                f"{name}:or_rule[" + ",".join(map(str, votes)) + "]"))
    return PredictionSet.from_list(sets[0].task_id, preds, name)


__all__ = ["PipelineSpec", "VARIANTS", "classify_two_stage", "and_rule", "or_rule",
           "majority_vote", "run_pipeline", "or_union", "output_labels"]
