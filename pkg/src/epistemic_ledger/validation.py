"""Statistical validation layer: bounds, calibration, folds, certificates.

Observed error rates on held-out data are converted into conservative,
high-confidence upper bounds (Hoeffding or one-sided Wilson), collected per
pipeline component into a validation certificate, and combined into a
certified lower bound on the pipeline score. Calibration error, fold-aware
cross-validation, and complexity-penalized model selection provide the
supporting evidence trail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Mapping, Sequence

from .metrics import Docket, PipelineKind, PipelineSpec, PolicyParams, efficiency


class BoundMethod(str, Enum):
    HOEFFDING = "hoeffding"
    WILSON = "wilson"


class Criterion(str, Enum):
    AIC = "aic"
    BIC = "bic"
    MDL = "mdl"
    SUPPLIED = "supplied"


class CertificationRefusedError(ValueError):
    """Raised when a pipeline component lacks evaluation data.

    An unvalidated component must never default to zero error; refusing the
    certificate is the only conservative option.
    """


@dataclass(frozen=True)
class LossRecord:
    """One held-out evaluation outcome with a bounded loss in [0, 1]."""

    predicted: object
    actual: object
    loss: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.loss <= 1.0):
            raise ValueError(f"loss must lie in [0, 1], got {self.loss}")


def zero_one(predicted: object, actual: object) -> float:
    return 0.0 if predicted == actual else 1.0


def record_zero_one(predicted: object, actual: object) -> LossRecord:
    return LossRecord(predicted, actual, zero_one(predicted, actual))


@dataclass(frozen=True)
class ConfidenceBound:
    """Point estimate plus a conservative one-sided upper bound.

    ``synthetic`` marks bounds manufactured for components a pipeline does
    not have (upper 0, no samples); only those may carry sample_size 0.
    """

    point_estimate: float
    upper: float
    method: BoundMethod
    delta: float
    sample_size: int
    synthetic: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.point_estimate <= 1.0):
            raise ValueError(f"point_estimate must lie in [0, 1], got {self.point_estimate}")
        if self.upper < self.point_estimate - 1e-12 or self.upper > 1.0:
            raise ValueError(f"upper must lie in [point_estimate, 1], got {self.upper}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.sample_size < 1 and not self.synthetic:
            raise ValueError("sample_size must be >= 1 for a non-synthetic bound")


@dataclass(frozen=True)
class CertProvenance:
    fold_strategy: str
    sample_sizes: tuple[int, int, int]
    timestamp: str
    union_delta: float


@dataclass(frozen=True)
class ValidationCertificate:
    """Measured cost plus per-component conservative error upper bounds.

    The total upper bound is the multiplicative composition of the component
    uppers; with each component bound holding at confidence 1-delta, the
    joint statement holds at confidence >= 1 - union_delta.
    """

    pipeline_id: str
    measured_cost: float
    ret_bound: ConfidenceBound
    gen_bound: ConfidenceBound
    ver_bound: ConfidenceBound
    total_upper: float
    delta: float
    provenance: CertProvenance

    def __post_init__(self) -> None:
        if self.measured_cost < 0.0:
            raise ValueError(f"measured_cost must be >= 0, got {self.measured_cost}")
        expected = 1.0 - (
            (1.0 - self.ret_bound.upper)
            * (1.0 - self.gen_bound.upper)
            * (1.0 - self.ver_bound.upper)
        )
        if abs(self.total_upper - expected) > 1e-9:
            raise ValueError(
                f"total_upper {self.total_upper} inconsistent with component "
                f"uppers (expected {expected})"
            )


# Rational approximation to the standard normal quantile (Acklam's
# coefficients) followed by one Halley refinement through math.erfc; the
# refined result is accurate to well below the 1e-7 requirement.
_QA = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_QB = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_QC = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_QD = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)
_Q_SPLIT = 0.02425


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF on (0, 1)."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"quantile argument must lie in (0, 1), got {p}")
    if p < _Q_SPLIT:
        q = math.sqrt(-2.0 * math.log(p))
        x = (
            ((((_QC[0] * q + _QC[1]) * q + _QC[2]) * q + _QC[3]) * q + _QC[4]) * q + _QC[5]
        ) / ((((_QD[0] * q + _QD[1]) * q + _QD[2]) * q + _QD[3]) * q + 1.0)
    elif p <= 1.0 - _Q_SPLIT:
        q = p - 0.5
        r = q * q
        x = (
            ((((_QA[0] * r + _QA[1]) * r + _QA[2]) * r + _QA[3]) * r + _QA[4]) * r + _QA[5]
        ) * q / (((((_QB[0] * r + _QB[1]) * r + _QB[2]) * r + _QB[3]) * r + _QB[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(
            ((((_QC[0] * q + _QC[1]) * q + _QC[2]) * q + _QC[3]) * q + _QC[4]) * q + _QC[5]
        ) / ((((_QD[0] * q + _QD[1]) * q + _QD[2]) * q + _QD[3]) * q + 1.0)
    err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def empirical_risk(records: Sequence[LossRecord]) -> float:
    """Arithmetic mean of the recorded losses."""
    if not records:
        raise ValueError("empirical_risk requires at least one record")
    return sum(r.loss for r in records) / len(records)


def hoeffding_upper(risk: float, n: int, delta: float) -> ConfidenceBound:
    """Concentration upper bound: risk + sqrt(ln(1/delta) / (2n)), clamped to 1."""
    if not (0.0 <= risk <= 1.0):
        raise ValueError(f"risk must lie in [0, 1], got {risk}")
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    upper = min(1.0, risk + math.sqrt(math.log(1.0 / delta) / (2.0 * n)))
    return ConfidenceBound(risk, upper, BoundMethod.HOEFFDING, delta, n)


def wilson_upper(successes: int, n: int, delta: float) -> ConfidenceBound:
    """One-sided Wilson score upper limit at confidence 1 - delta.

    Tighter than the concentration bound at small observed rates; the
    "successes" here are the error events being bounded.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if not 0 <= successes <= n:
        raise ValueError(f"successes must lie in [0, n], got {successes} with n={n}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    z = normal_quantile(1.0 - delta)
    p_hat = successes / n
    denom = 1.0 + z * z / n
    center = (p_hat + z * z / (2.0 * n)) / denom
    half = (z / denom) * math.sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n))
    upper = min(1.0, max(p_hat, center + half))
    return ConfidenceBound(p_hat, upper, BoundMethod.WILSON, delta, n)


@dataclass(frozen=True)
class EqualWidth:
    bins: int = 10

    def __post_init__(self) -> None:
        if self.bins < 1:
            raise ValueError("bin count must be >= 1")

    def describe(self) -> str:
        return f"equal_width({self.bins})"


@dataclass(frozen=True)
class EqualMass:
    bins: int = 10

    def __post_init__(self) -> None:
        if self.bins < 1:
            raise ValueError("bin count must be >= 1")

    def describe(self) -> str:
        return f"equal_mass({self.bins})"


@dataclass(frozen=True)
class CalibrationBin:
    lower_conf: float
    upper_conf: float
    count: int
    mean_confidence: float
    mean_accuracy: float


@dataclass(frozen=True)
class CalibrationReport:
    bins: tuple[CalibrationBin, ...]
    ece: float
    binning: str

    @property
    def total(self) -> int:
        return sum(b.count for b in self.bins)


def ece(
    predictions: Sequence[tuple[float, bool]],
    binning: EqualWidth | EqualMass = EqualWidth(10),
) -> CalibrationReport:
    """Expected calibration error: count-weighted mean |accuracy - confidence|.

    Predictions are (confidence, correct) pairs; empty bins contribute
    nothing. Equal-mass binning sorts by confidence and splits into chunks
    whose sizes differ by at most one.
    """
    if not predictions:
        raise ValueError("ece requires at least one prediction")
    for conf, _ in predictions:
        if not (0.0 <= conf <= 1.0):
            raise ValueError(f"confidence must lie in [0, 1], got {conf}")

    m = binning.bins
    groups: list[list[tuple[float, bool]]] = [[] for _ in range(m)]
    if isinstance(binning, EqualWidth):
        edges = [(k / m, (k + 1) / m) for k in range(m)]
        for conf, correct in predictions:
            k = min(int(conf * m), m - 1)
            groups[k].append((conf, correct))
        # Fixed summation order inside each bin keeps the result bitwise
        # invariant under permutation of the input.
        for chunk in groups:
            chunk.sort()
    else:
        ordered = sorted(predictions)
        n = len(ordered)
        base, extra = divmod(n, m)
        edges = []
        start = 0
        for k in range(m):
            size = base + (1 if k < extra else 0)
            chunk = ordered[start : start + size]
            groups[k] = chunk
            if chunk:
                edges.append((chunk[0][0], chunk[-1][0]))
            else:
                edges.append((1.0, 1.0))
            start += size

    n = len(predictions)
    bins: list[CalibrationBin] = []
    total_gap = 0.0
    for k in range(m):
        chunk = groups[k]
        if chunk:
            mean_conf = sum(c for c, _ in chunk) / len(chunk)
            mean_acc = sum(1.0 for _, ok in chunk if ok) / len(chunk)
            total_gap += (len(chunk) / n) * abs(mean_acc - mean_conf)
        else:
            mean_conf = 0.0
            mean_acc = 0.0
        bins.append(
            CalibrationBin(edges[k][0], edges[k][1], len(chunk), mean_conf, mean_acc)
        )
    return CalibrationReport(tuple(bins), total_gap, binning.describe())


@dataclass(frozen=True)
class KFold:
    k: int
    shuffle_seed: int | None = None

    def describe(self) -> str:
        return f"kfold({self.k})"


@dataclass(frozen=True)
class RollingWindow:
    train_size: int
    test_size: int
    step: int

    def describe(self) -> str:
        return f"rolling_window({self.train_size},{self.test_size},{self.step})"


@dataclass(frozen=True)
class Grouped:
    k: int

    def describe(self) -> str:
        return f"grouped({self.k})"


@dataclass(frozen=True)
class Fold:
    fold_id: int
    train: tuple[int, ...]
    test: tuple[int, ...]


@dataclass(frozen=True)
class FoldPlan:
    strategy: str
    folds: tuple[Fold, ...]

    @property
    def assignments(self) -> dict[int, int]:
        """Test-fold membership per record index."""
        out: dict[int, int] = {}
        for fold in self.folds:
            for i in fold.test:
                out[i] = fold.fold_id
        return out


def make_folds(
    n: int,
    strategy: KFold | RollingWindow | Grouped,
    keys: Sequence[object] | None = None,
) -> FoldPlan:
    """Build a deterministic fold plan over record indices 0..n-1.

    ``keys`` supplies group labels for the grouped strategy and, optionally,
    time keys (checked monotone) for rolling windows.
    """
    if n < 1:
        raise ValueError(f"dataset size must be >= 1, got {n}")

    if isinstance(strategy, KFold):
        if strategy.k < 2:
            raise ValueError("kfold requires k >= 2")
        if strategy.k > n:
            raise ValueError(f"kfold requires n >= k, got n={n}, k={strategy.k}")
        indices = list(range(n))
        if strategy.shuffle_seed is not None:
            import random

            random.Random(strategy.shuffle_seed).shuffle(indices)
        base, extra = divmod(n, strategy.k)
        folds = []
        start = 0
        for j in range(strategy.k):
            size = base + (1 if j < extra else 0)
            test = tuple(indices[start : start + size])
            train = tuple(i for i in indices if i not in set(test))
            folds.append(Fold(j, train, test))
            start += size
        return FoldPlan(strategy.describe(), tuple(folds))

    if isinstance(strategy, RollingWindow):
        if min(strategy.train_size, strategy.test_size, strategy.step) < 1:
            raise ValueError("rolling window sizes and step must all be >= 1")
        if keys is not None:
            if len(keys) != n:
                raise ValueError(f"expected {n} time keys, got {len(keys)}")
            for a, b in zip(keys, keys[1:]):
                if b < a:  # type: ignore[operator]
                    raise ValueError("time keys must be monotone non-decreasing")
        folds = []
        j = 0
        start = 0
        while start + strategy.train_size + strategy.test_size <= n:
            split = start + strategy.train_size
            folds.append(
                Fold(j, tuple(range(start, split)), tuple(range(split, split + strategy.test_size)))
            )
            j += 1
            start += strategy.step
        if not folds:
            raise ValueError(
                f"no rolling window fits: n={n} < train+test="
                f"{strategy.train_size + strategy.test_size}"
            )
        return FoldPlan(strategy.describe(), tuple(folds))

    if isinstance(strategy, Grouped):
        if keys is None or len(keys) != n:
            raise ValueError("grouped folds require one group key per record")
        if strategy.k < 2:
            raise ValueError("grouped requires k >= 2")
        members: dict[str, list[int]] = {}
        for i, key in enumerate(keys):
            members.setdefault(str(key), []).append(i)
        if len(members) < strategy.k:
            raise ValueError(
                f"grouped requires at least k groups, got {len(members)} < {strategy.k}"
            )
        # Largest groups first, each into the currently smallest fold.
        fold_indices: list[list[int]] = [[] for _ in range(strategy.k)]
        for label in sorted(members, key=lambda g: (-len(members[g]), g)):
            target = min(range(strategy.k), key=lambda j: (len(fold_indices[j]), j))
            fold_indices[target].extend(members[label])
        all_indices = set(range(n))
        folds = []
        for j in range(strategy.k):
            test = tuple(sorted(fold_indices[j]))
            train = tuple(sorted(all_indices - set(test)))
            folds.append(Fold(j, train, test))
        return FoldPlan(strategy.describe(), tuple(folds))

    raise TypeError(f"unknown fold strategy: {strategy!r}")


Trainer = Callable[[Sequence[tuple[object, object]]], Callable[[object], object]]


@dataclass(frozen=True)
class ModelCandidate:
    """A trainable predictor plus its complexity accounting.

    ``trainer`` maps a training subset to a predict callable. Complexity is
    either supplied directly or derived from the parameter count for the
    aic / bic criteria.
    """

    id: str
    trainer: Trainer
    complexity: float | None = None
    criterion: Criterion = Criterion.SUPPLIED
    param_count: int | None = None

    def __post_init__(self) -> None:
        if self.complexity is not None and self.complexity < 0.0:
            raise ValueError(f"complexity must be >= 0, got {self.complexity}")

    def complexity_value(self, n_observations: int) -> float:
        criterion = Criterion(self.criterion)
        if criterion is Criterion.AIC:
            if self.param_count is None:
                raise ValueError(f"candidate {self.id}: aic needs param_count")
            return 2.0 * self.param_count
        if criterion is Criterion.BIC:
            if self.param_count is None:
                raise ValueError(f"candidate {self.id}: bic needs param_count")
            return self.param_count * math.log(n_observations)
        if self.complexity is None:
            raise ValueError(f"candidate {self.id}: complexity not supplied")
        return self.complexity


def cv_risk(
    dataset: Sequence[tuple[object, object]],
    plan: FoldPlan,
    candidate: ModelCandidate,
    loss: Callable[[object, object], float] = zero_one,
) -> float:
    """Cross-validated risk with equal per-fold weight.

    Each fold's model is trained on that fold's train indices and evaluated
    on its test indices; the fold means are then averaged with weight 1/K
    regardless of fold size. Folds are evaluated in fold-id order so results
    are bitwise reproducible.
    """
    if not plan.folds:
        raise ValueError("fold plan has no folds")
    fold_risks = []
    for fold in sorted(plan.folds, key=lambda f: f.fold_id):
        train = [dataset[i] for i in fold.train]
        try:
            predict = candidate.trainer(train)
        except Exception as exc:
            raise RuntimeError(
                f"trainer for candidate {candidate.id} failed on fold {fold.fold_id}"
            ) from exc
        losses = [loss(predict(x), y) for x, y in (dataset[i] for i in fold.test)]
        fold_risks.append(sum(losses) / len(losses))
    return sum(fold_risks) / len(fold_risks)


def penalized_select(
    candidates: Sequence[ModelCandidate],
    dataset: Sequence[tuple[object, object]],
    plan: FoldPlan,
    lam: float,
    loss: Callable[[object, object], float] = zero_one,
) -> ModelCandidate:
    """Pick the candidate minimising cv_risk + lam * complexity.

    Ties go to the smaller complexity, then the lexicographically smaller id.
    """
    if not candidates:
        raise ValueError("penalized_select requires at least one candidate")
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    n = len(dataset)
    ranked = sorted(
        candidates,
        key=lambda c: (
            cv_risk(dataset, plan, c, loss) + lam * c.complexity_value(n),
            c.complexity_value(n),
            c.id,
        ),
    )
    return ranked[0]


_SLOTS = ("retrieval", "generation", "verification")


def components_for(kind: PipelineKind) -> tuple[str, ...]:
    if kind is PipelineKind.RETRIEVAL_ONLY:
        return ("retrieval",)
    if kind is PipelineKind.RETRIEVAL_GENERATION:
        return ("retrieval", "generation")
    return _SLOTS


def certify(
    pipeline: PipelineSpec,
    eval_sets: Mapping[str, Sequence[LossRecord]],
    measured_cost: float,
    delta: float,
    method: BoundMethod = BoundMethod.WILSON,
    fold_strategy: str = "holdout",
    timestamp: str | None = None,
) -> ValidationCertificate:
    """Issue a validation certificate from per-component evaluation records.

    Every component the pipeline kind includes must come with at least one
    record; otherwise certification is refused. Components the kind excludes
    get a synthetic zero bound. The total upper bound composes the component
    uppers multiplicatively.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    present = components_for(pipeline.kind)
    bounds: dict[str, ConfidenceBound] = {}
    for slot in _SLOTS:
        if slot not in present:
            bounds[slot] = ConfidenceBound(0.0, 0.0, method, delta, 0, synthetic=True)
            continue
        records = eval_sets.get(slot)
        if not records:
            raise CertificationRefusedError(
                f"pipeline {pipeline.id}: no evaluation records for component "
                f"'{slot}'; an unvalidated component cannot be certified"
            )
        risk = empirical_risk(records)
        n = len(records)
        if method is BoundMethod.WILSON:
            if any(r.loss not in (0.0, 1.0) for r in records):
                raise ValueError(
                    f"component '{slot}' has non-binary losses; the Wilson "
                    "bound needs 0/1 losses (use hoeffding instead)"
                )
            k = int(sum(r.loss for r in records))
            bounds[slot] = wilson_upper(k, n, delta)
        else:
            bounds[slot] = hoeffding_upper(risk, n, delta)
    total_upper = 1.0 - (
        (1.0 - bounds["retrieval"].upper)
        * (1.0 - bounds["generation"].upper)
        * (1.0 - bounds["verification"].upper)
    )
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    provenance = CertProvenance(
        fold_strategy=fold_strategy,
        sample_sizes=tuple(bounds[s].sample_size for s in _SLOTS),  # type: ignore[arg-type]
        timestamp=timestamp,
        union_delta=min(1.0, 3.0 * delta),
    )
    return ValidationCertificate(
        pipeline_id=pipeline.id,
        measured_cost=measured_cost,
        ret_bound=bounds["retrieval"],
        gen_bound=bounds["generation"],
        ver_bound=bounds["verification"],
        total_upper=total_upper,
        delta=delta,
        provenance=provenance,
    )


def lower_bound_score(cert: ValidationCertificate, tau_star: float) -> float:
    """Certified lower bound on the pipeline score at confidence 1 - delta."""
    return efficiency(cert.measured_cost, tau_star) * (1.0 - cert.total_upper)


def plug_in_test(cert: ValidationCertificate, theta_c: float, tau_star: float) -> bool:
    """High-confidence knowledge test: certified lower-bound score >= theta."""
    if not (0.0 < theta_c < 1.0):
        raise ValueError(f"theta_c must lie in (0, 1), got {theta_c}")
    return lower_bound_score(cert, tau_star) >= theta_c


def lower_bound_capacity(
    docket: Docket,
    certs: Mapping[str, Sequence[ValidationCertificate]],
    policy: PolicyParams,
) -> float:
    """Capacity index with certified lower-bound scores as the indicator input.

    Propositions with no certificates contribute 0.
    """
    total_w = docket.total_weight()
    if total_w <= 0.0:
        raise ValueError("lower_bound_capacity requires positive total salience weight")
    hit = 0.0
    for prop in docket.propositions:
        prop_certs = certs.get(prop.id, ())
        if not prop_certs:
            continue
        best = max(lower_bound_score(c, policy.tau_star) for c in prop_certs)
        if best >= prop.threshold:
            hit += prop.salience_weight
    return hit / total_w
