"""Deterministic cost/error scoring for information pipelines.

Everything in this module is a pure function of its (immutable) inputs:
component error rates compose multiplicatively into a total error, a
hyperbolic efficiency factor discounts expected cost against a reference
time scale, and their product scores a pipeline in [0, 1]. Organisation-level
scores take the best pipeline available, a thresholded predicate turns the
score into a yes/no knowledge call, and a weighted capacity index aggregates
those calls over a docket of propositions. The cost-error Pareto frontier of
a pipeline set is exposed for audit output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence


class PipelineKind(str, Enum):
    RETRIEVAL_ONLY = "retrieval_only"
    RETRIEVAL_GENERATION = "retrieval_generation"
    FULL = "full"


class UnsupportedCompositionError(ValueError):
    """Raised when two pipeline stages cannot be merged slot-wise."""


def _require_unit(name: str, value: float, *, open_interval: bool = False) -> float:
    value = float(value)
    if math.isnan(value):
        raise ValueError(f"{name} must not be NaN")
    if open_interval:
        if not (0.0 < value < 1.0):
            raise ValueError(f"{name} must lie in (0, 1), got {value}")
    elif not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def _require_non_negative(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or value < 0.0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class Proposition:
    """A weighted, thresholded fact a firm may be asked about.

    ``salience_weight`` sets the proposition's share of the capacity index;
    ``threshold`` is the per-proposition score level that counts as knowing.
    """

    id: str
    description: str = ""
    salience_weight: float = 1.0
    threshold: float = 0.7

    def __post_init__(self) -> None:
        _require_non_negative("salience_weight", self.salience_weight)
        _require_unit("threshold", self.threshold, open_interval=True)


@dataclass(frozen=True)
class ComponentErrors:
    """Per-stage error rates: retrieval miss, generation, verification."""

    retrieval: float = 0.0
    generation: float = 0.0
    verification: float = 0.0

    def __post_init__(self) -> None:
        _require_unit("retrieval", self.retrieval)
        _require_unit("generation", self.generation)
        _require_unit("verification", self.verification)


@dataclass(frozen=True)
class PipelineSpec:
    """One admissible information pipeline: stages, error rates, expected cost.

    ``joint_error`` overrides the independence composition with an
    empirically measured end-to-end error; when set, total-error queries use
    it verbatim.
    """

    id: str
    kind: PipelineKind
    expected_cost: float
    errors: ComponentErrors = field(default_factory=ComponentErrors)
    joint_error: float | None = None

    def __post_init__(self) -> None:
        _require_non_negative("expected_cost", self.expected_cost)
        if self.joint_error is not None:
            _require_unit("joint_error", self.joint_error)
        if self.kind is PipelineKind.RETRIEVAL_ONLY and self.errors.generation != 0.0:
            raise ValueError(
                "generation must be 0 for a retrieval_only pipeline, "
                f"got {self.errors.generation}"
            )

    @property
    def dependence(self) -> str:
        return "independent" if self.joint_error is None else "empirical_joint"

    def total_error(self) -> float:
        return total_error(self.errors, self.joint_error)


@dataclass(frozen=True)
class PolicyParams:
    """Reference time scale, confidence level, and decision thresholds."""

    tau_star: float = 10.0
    theta_c: float = 0.7
    delta: float = 0.05
    theta_ak: float = 0.7
    theta_ck: float = 0.7
    theta_r: float = 0.7
    theta_neg: float = 0.7

    def __post_init__(self) -> None:
        if not self.tau_star > 0.0:
            raise ValueError(f"tau_star must be > 0, got {self.tau_star}")
        for name in ("theta_c", "delta", "theta_ak", "theta_ck", "theta_r", "theta_neg"):
            _require_unit(name, getattr(self, name), open_interval=True)


@dataclass(frozen=True)
class StackDescriptor:
    """Inventory of a firm's cognition stack plus its policy parameters."""

    data_stores: tuple[str, ...] = ()
    indices: tuple[str, ...] = ()
    retrievers: tuple[str, ...] = ()
    generators: tuple[str, ...] = ()
    verifiers: tuple[str, ...] = ()
    pipelines: tuple[PipelineSpec, ...] = ()
    policy: PolicyParams = field(default_factory=PolicyParams)

    def org_score(self) -> float:
        return org_score(self.pipelines, self.policy)


@dataclass(frozen=True)
class FrontierPoint:
    cost: float
    total_error: float
    pipeline_id: str

    def dominates(self, other: "FrontierPoint") -> bool:
        """Weakly better on both axes and strictly better on at least one."""
        if self.cost > other.cost or self.total_error > other.total_error:
            return False
        return self.cost < other.cost or self.total_error < other.total_error


@dataclass(frozen=True)
class Docket:
    """Propositions under audit, each with the pipelines available for it.

    A docket used for capacity computations must carry positive total weight;
    that is checked where the index is computed so the zero-weight case
    surfaces as a domain error there.
    """

    propositions: tuple[Proposition, ...]
    pipeline_sets: Mapping[str, tuple[PipelineSpec, ...]]

    def total_weight(self) -> float:
        return sum(p.salience_weight for p in self.propositions)


def total_error(errors: ComponentErrors, joint_error: float | None = None) -> float:
    """End-to-end failure probability of a pipeline.

    Under independence the stages compose multiplicatively:
    1 - (1-ret)(1-gen)(1-ver). A supplied empirical joint error is returned
    verbatim instead.
    """
    if joint_error is not None:
        return _require_unit("joint_error", joint_error)
    ok = (1.0 - errors.retrieval) * (1.0 - errors.generation) * (1.0 - errors.verification)
    return min(1.0, max(0.0, 1.0 - ok))


def efficiency(cost: float, tau_star: float) -> float:
    """Hyperbolic cost discount 1 / (1 + cost / tau_star), in (0, 1]."""
    if not tau_star > 0.0:
        raise ValueError(f"tau_star must be > 0, got {tau_star}")
    if cost < 0.0 or math.isnan(cost):
        raise ValueError(f"cost must be >= 0, got {cost}")
    return 1.0 / (1.0 + cost / tau_star)


def pipeline_score(pipeline: PipelineSpec, policy: PolicyParams) -> float:
    """Efficiency-discounted reliability of a single pipeline, in [0, 1]."""
    return efficiency(pipeline.expected_cost, policy.tau_star) * (1.0 - pipeline.total_error())


def best_pipeline(
    pipelines: Sequence[PipelineSpec], policy: PolicyParams
) -> tuple[PipelineSpec, float]:
    """The pipeline attaining the organisational score, with that score.

    Ties are broken toward the lexicographically smallest pipeline id so the
    attaining pipeline is deterministic.
    """
    if not pipelines:
        raise ValueError("org_score is undefined for an empty pipeline set")
    scored = [(pipeline_score(p, policy), p) for p in pipelines]
    best_score = max(s for s, _ in scored)
    winner = min((p for s, p in scored if s == best_score), key=lambda p: p.id)
    return winner, best_score


def org_score(pipelines: Sequence[PipelineSpec], policy: PolicyParams) -> float:
    """Best achievable pipeline score over a finite, non-empty pipeline set."""
    return best_pipeline(pipelines, policy)[1]


def knowledge_predicate(score: float, theta_c: float) -> bool:
    """True when the organisational score meets the context threshold (>=)."""
    _require_unit("score", score)
    _require_unit("theta_c", theta_c, open_interval=True)
    return score >= theta_c


def capacity_index(docket: Docket, policy: PolicyParams) -> float:
    """Weighted fraction of propositions whose org score meets its threshold.

    Propositions with an empty (or missing) pipeline set contribute an
    indicator of 0 rather than erroring: the index must be total over the
    docket.
    """
    total_w = docket.total_weight()
    if total_w <= 0.0:
        raise ValueError("capacity_index requires positive total salience weight")
    hit = 0.0
    for prop in docket.propositions:
        pipes = docket.pipeline_sets.get(prop.id, ())
        if pipes and org_score(pipes, policy) >= prop.threshold:
            hit += prop.salience_weight
    return hit / total_w


def _engages_generation(p: PipelineSpec) -> bool:
    return p.kind in (PipelineKind.RETRIEVAL_GENERATION, PipelineKind.FULL) or (
        p.errors.generation > 0.0
    )


def _engages_verification(p: PipelineSpec) -> bool:
    return p.kind is PipelineKind.FULL or p.errors.verification > 0.0


def compose(first: PipelineSpec, second: PipelineSpec) -> PipelineSpec:
    """Run ``first`` then ``second`` as one pipeline.

    Costs add; a slot filled by both stages composes as 1-(1-a)(1-b). Two
    generation-claiming stages cannot be merged when either carries an
    empirical joint error, because the joint measurement cannot be split
    back into slots.
    """
    both_generate = _engages_generation(first) and _engages_generation(second)
    any_joint = first.joint_error is not None or second.joint_error is not None
    if both_generate and any_joint:
        raise UnsupportedCompositionError(
            "cannot compose two generation stages when either declares an "
            "empirical joint error"
        )

    def merge(a: float, b: float) -> float:
        return 1.0 - (1.0 - a) * (1.0 - b)

    errors = ComponentErrors(
        retrieval=merge(first.errors.retrieval, second.errors.retrieval),
        generation=merge(first.errors.generation, second.errors.generation),
        verification=merge(first.errors.verification, second.errors.verification),
    )
    joint: float | None = None
    if any_joint:
        joint = merge(first.total_error(), second.total_error())
    # The kind enum has no verifier-only member, so verification engagement
    # promotes the composition to `full`.
    if _engages_verification(first) or _engages_verification(second):
        kind = PipelineKind.FULL
    elif _engages_generation(first) or _engages_generation(second):
        kind = PipelineKind.RETRIEVAL_GENERATION
    else:
        kind = PipelineKind.RETRIEVAL_ONLY
    return PipelineSpec(
        id=f"{first.id}>{second.id}",
        kind=kind,
        expected_cost=first.expected_cost + second.expected_cost,
        errors=errors,
        joint_error=joint,
    )


def epistemic_frontier(pipelines: Sequence[PipelineSpec]) -> list[FrontierPoint]:
    """Pareto-minimal (cost, total error) set, sorted by ascending cost.

    Exact ties on both coordinates keep the lexicographically smallest
    pipeline id; dominated points are dropped.
    """
    if not pipelines:
        raise ValueError("epistemic_frontier requires a non-empty pipeline set")
    points = sorted(
        (FrontierPoint(p.expected_cost, p.total_error(), p.id) for p in pipelines),
        key=lambda fp: (fp.cost, fp.total_error, fp.pipeline_id),
    )
    frontier: list[FrontierPoint] = []
    best_error = math.inf
    for point in points:
        if point.total_error < best_error:
            frontier.append(point)
            best_error = point.total_error
    return frontier
