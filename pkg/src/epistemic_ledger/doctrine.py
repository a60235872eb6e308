"""Doctrine-style classification of epistemic states.

Maps scores, certificates, and execution records onto five classifications:
actual knowledge (executed, certified, reliable), constructive knowledge
(achievable but not obtained), wilful blindness (a cheap near-certain test
deliberately avoided), recklessness (execution on poor or absent
certification), and negligence (low firm-wide capacity). Outputs are model
classifications of the epistemic process, not legal findings.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .metrics import PipelineSpec, PolicyParams, Proposition, org_score
from .validation import ValidationCertificate, lower_bound_score

MODEL_CLASSIFICATION_LABEL = "model classification"


class Verdict(str, Enum):
    ESTABLISHED = "established"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


class AvoidanceEvidence(str, Enum):
    NONE = "none"
    SUPPRESSED_QUERY = "suppressed_query"
    DISABLED_INDEX = "disabled_index"
    FILTERED_ALERTS = "filtered_alerts"
    SKIPPED_VALIDATION = "skipped_validation"


class Doctrine(str, Enum):
    ACTUAL_KNOWLEDGE = "actual_knowledge"
    CONSTRUCTIVE_KNOWLEDGE = "constructive_knowledge"
    WILFUL_BLINDNESS = "wilful_blindness"
    RECKLESSNESS = "recklessness"
    NEGLIGENCE = "negligence"


# Most culpable first among fault states, with actual knowledge leading
# because it is a state rather than a fault.
PRECEDENCE = (
    Doctrine.ACTUAL_KNOWLEDGE,
    Doctrine.WILFUL_BLINDNESS,
    Doctrine.RECKLESSNESS,
    Doctrine.CONSTRUCTIVE_KNOWLEDGE,
    Doctrine.NEGLIGENCE,
)


@dataclass(frozen=True)
class ExecutionRecord:
    """What a firm actually did about one proposition with one pipeline."""

    pipeline_id: str
    proposition_id: str
    executed: bool
    certificate: ValidationCertificate | None = None
    outcome: Verdict | None = None
    avoidance_evidence: AvoidanceEvidence = AvoidanceEvidence.NONE
    timestamp: str = ""

    def __post_init__(self) -> None:
        if not self.executed and self.outcome is not None:
            raise ValueError("an unexecuted record cannot carry an outcome")


@dataclass(frozen=True)
class WilfulBlindnessParams:
    """Operationalisation of "trivially cheap" and "near certain".

    A pipeline is a candidate for deliberate avoidance when its cost is at
    most cheapness_factor * tau_star and its total error at most max_error.
    """

    cheapness_factor: float = 0.1
    max_error: float = 0.05

    def __post_init__(self) -> None:
        if not (0.0 < self.cheapness_factor <= 1.0):
            raise ValueError(
                f"cheapness_factor must lie in (0, 1], got {self.cheapness_factor}"
            )
        if not (0.0 < self.max_error < 1.0):
            raise ValueError(f"max_error must lie in (0, 1), got {self.max_error}")


@dataclass(frozen=True)
class DoctrineFinding:
    proposition_id: str
    applicable: frozenset[Doctrine]
    primary: Doctrine | None
    rationale: tuple[tuple[Doctrine, Mapping[str, object]], ...]
    label: str = MODEL_CLASSIFICATION_LABEL

    def __post_init__(self) -> None:
        if self.applicable and self.primary not in self.applicable:
            raise ValueError("primary must be drawn from the applicable set")


def actual_knowledge_test(
    record: ExecutionRecord, theta_ak: float, tau_star: float
) -> bool:
    """Executed, certified, conclusive, and certified-reliable at theta_ak.

    An executed record without a certificate fails here; the certification
    gap is what the recklessness test picks up.
    """
    if not record.executed:
        return False
    if record.certificate is None:
        return False
    if record.outcome is Verdict.INCONCLUSIVE:
        return False
    return lower_bound_score(record.certificate, tau_star) >= theta_ak


def constructive_knowledge_test(
    available: Sequence[PipelineSpec],
    executions: Sequence[ExecutionRecord],
    theta_ck: float,
    policy: PolicyParams,
) -> bool:
    """Knowledge was achievable (best available score >= theta_ck) but not obtained."""
    if not available:
        return False
    if org_score(available, policy) < theta_ck:
        return False
    return not any(
        actual_knowledge_test(r, policy.theta_ak, policy.tau_star) for r in executions
    )


def wilful_blindness_test(
    available: Sequence[PipelineSpec],
    executions: Sequence[ExecutionRecord],
    params: WilfulBlindnessParams,
    policy: PolicyParams,
) -> bool:
    """A cheap, near-certain pipeline went unexecuted amid avoidance evidence.

    Both conditions are required: capability (such a pipeline exists and was
    not run) and deliberateness (some record carries an avoidance flag).
    Mere non-execution without avoidance evidence is at most constructive
    knowledge.
    """
    executed_ids = {r.pipeline_id for r in executions if r.executed}
    cheap_unexecuted = [
        p
        for p in available
        if p.expected_cost <= params.cheapness_factor * policy.tau_star
        and p.total_error() <= params.max_error
        and p.id not in executed_ids
    ]
    deliberate = any(
        r.avoidance_evidence is not AvoidanceEvidence.NONE for r in executions
    )
    return bool(cheap_unexecuted) and deliberate


def recklessness_test(
    record: ExecutionRecord, theta_r: float, margin: float, tau_star: float
) -> bool:
    """Executed despite a grossly poor certificate, or with none at all."""
    if not record.executed:
        raise ValueError("recklessness_test applies only to executed records")
    if record.certificate is None:
        return True
    return lower_bound_score(record.certificate, tau_star) < theta_r - margin


def negligence_test(capacity: float, theta_neg: float) -> bool:
    """Firm-wide capacity strictly below the reasonable-care threshold."""
    if not (0.0 <= capacity <= 1.0):
        raise ValueError(f"capacity must lie in [0, 1], got {capacity}")
    return capacity < theta_neg


def classify(
    proposition: Proposition,
    available: Sequence[PipelineSpec],
    executions: Sequence[ExecutionRecord],
    policy: PolicyParams,
    wb_params: WilfulBlindnessParams | None = None,
    margin: float = 0.2,
    capacity: float | None = None,
) -> DoctrineFinding:
    """Run all five doctrine tests for one proposition.

    ``capacity`` is the firm-wide capacity index feeding the negligence
    test; when omitted, the proposition's own indicator (best available
    score against its threshold) stands in, so negligence is then judged
    per proposition.
    """
    if wb_params is None:
        wb_params = WilfulBlindnessParams()
    records = [r for r in executions if r.proposition_id == proposition.id]
    best = org_score(available, policy) if available else 0.0
    if capacity is None:
        capacity = 1.0 if available and best >= proposition.threshold else 0.0

    applicable: set[Doctrine] = set()
    rationale: list[tuple[Doctrine, Mapping[str, object]]] = []

    actual_hits = [
        r for r in records if actual_knowledge_test(r, policy.theta_ak, policy.tau_star)
    ]
    if actual_hits:
        applicable.add(Doctrine.ACTUAL_KNOWLEDGE)
        hit = actual_hits[0]
        rationale.append(
            (
                Doctrine.ACTUAL_KNOWLEDGE,
                {
                    "pipeline_id": hit.pipeline_id,
                    "lower_bound_score": lower_bound_score(
                        hit.certificate, policy.tau_star  # type: ignore[arg-type]
                    ),
                    "theta_ak": policy.theta_ak,
                },
            )
        )

    if wilful_blindness_test(available, records, wb_params, policy):
        applicable.add(Doctrine.WILFUL_BLINDNESS)
        executed_ids = {r.pipeline_id for r in records if r.executed}
        cheap = min(
            (
                p
                for p in available
                if p.expected_cost <= wb_params.cheapness_factor * policy.tau_star
                and p.total_error() <= wb_params.max_error
                and p.id not in executed_ids
            ),
            key=lambda p: p.id,
        )
        flags = sorted(
            {
                r.avoidance_evidence.value
                for r in records
                if r.avoidance_evidence is not AvoidanceEvidence.NONE
            }
        )
        rationale.append(
            (
                Doctrine.WILFUL_BLINDNESS,
                {
                    "pipeline_id": cheap.id,
                    "expected_cost": cheap.expected_cost,
                    "cost_ceiling": wb_params.cheapness_factor * policy.tau_star,
                    "total_error": cheap.total_error(),
                    "max_error": wb_params.max_error,
                    "avoidance_evidence": ",".join(flags),
                },
            )
        )

    reckless_hits = [
        r
        for r in records
        if r.executed and recklessness_test(r, policy.theta_r, margin, policy.tau_star)
    ]
    if reckless_hits:
        applicable.add(Doctrine.RECKLESSNESS)
        hit = reckless_hits[0]
        detail: dict[str, object] = {
            "pipeline_id": hit.pipeline_id,
            "theta_r": policy.theta_r,
            "margin": margin,
        }
        if hit.certificate is None:
            detail["certificate"] = "absent"
        else:
            detail["lower_bound_score"] = lower_bound_score(
                hit.certificate, policy.tau_star
            )
        rationale.append((Doctrine.RECKLESSNESS, detail))

    if constructive_knowledge_test(available, records, policy.theta_ck, policy):
        applicable.add(Doctrine.CONSTRUCTIVE_KNOWLEDGE)
        rationale.append(
            (
                Doctrine.CONSTRUCTIVE_KNOWLEDGE,
                {"org_score": best, "theta_ck": policy.theta_ck},
            )
        )

    if negligence_test(capacity, policy.theta_neg):
        applicable.add(Doctrine.NEGLIGENCE)
        rationale.append(
            (
                Doctrine.NEGLIGENCE,
                {"capacity": capacity, "theta_neg": policy.theta_neg},
            )
        )

    primary = next((d for d in PRECEDENCE if d in applicable), None)
    order = {d: i for i, d in enumerate(PRECEDENCE)}
    rationale.sort(key=lambda item: order[item[0]])
    return DoctrineFinding(
        proposition_id=proposition.id,
        applicable=frozenset(applicable),
        primary=primary,
        rationale=tuple(rationale),
    )
