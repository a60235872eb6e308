"""Seeded experiment runners for the two-firm scenario.

Every runner is a pure function of (scenario, seed): sub-streams are spawned
per run index from the master seed, so parallel and serial execution of
Monte Carlo cells would be bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..doctrine import Verdict
from ..metrics import (
    ComponentErrors,
    Docket,
    PipelineKind,
    PipelineSpec,
    capacity_index,
    efficiency,
    pipeline_score,
)
from .corpus import Corpus, generate_corpus
from .scenario import SimScenario, TaskSpec
from .search import keyword_search, semantic_search, simulated_verifier

LEGACY = "legacy"
MODERN = "modern"

_STREAM_VERIFIER = 211
_STREAM_JITTER = 223
_STREAM_SWEEP = 227


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


@dataclass(frozen=True)
class RunResult:
    """One company/task row: simulated time, component errors, score."""

    company: str
    task_id: str
    doctrine: str
    simulated_time: float
    eps_ret: float
    eps_ver: float
    eps_tot: float
    score: float
    verdict: Verdict

    def pipeline_spec(self) -> PipelineSpec:
        kind = PipelineKind.RETRIEVAL_ONLY if self.company == LEGACY else PipelineKind.FULL
        return PipelineSpec(
            id=f"{self.company}_{self.task_id}",
            kind=kind,
            expected_cost=self.simulated_time,
            errors=ComponentErrors(retrieval=self.eps_ret, verification=self.eps_ver),
        )


def _run_task(
    scenario: SimScenario,
    corpus: Corpus,
    synonyms: dict[str, tuple[str, ...]],
    task: TaskSpec,
    company: str,
    verifier_rng: np.random.Generator,
    jitter_rng: np.random.Generator | None,
    jitter_sigma: float,
) -> RunResult:
    ground_truth = corpus.ground_truth_ids(task.id)
    if company == LEGACY:
        hits, cost = keyword_search(
            corpus,
            task.keywords,
            scenario.c_per_doc,
            time_scale=task.legacy_time_scale,
            rng=jitter_rng,
            jitter_sigma=jitter_sigma,
        )
        # The keyword pipeline has no verifier stage: a complete retrieval is
        # read off directly, anything less is inconclusive.
        complete = ground_truth <= set(hits)
        verdict = task.truth if complete else Verdict.INCONCLUSIVE
        eps_ver = 0.0
    else:
        hits, cost = semantic_search(
            corpus,
            task.concept_query,
            scenario.retrieval_k,
            scenario.modern_a,
            scenario.modern_b,
            synonyms,
            time_scale=task.modern_time_scale,
            rng=jitter_rng,
            jitter_sigma=jitter_sigma,
        )
        complete = ground_truth <= set(hits)
        verdict = simulated_verifier(
            hits, ground_truth, task.truth, scenario.verifier_error, verifier_rng
        )
        eps_ver = (
            0.0
            if verdict is Verdict.INCONCLUSIVE or verdict is task.truth
            else 1.0
        )
    eps_ret = 0.0 if complete else 1.0
    kind = PipelineKind.RETRIEVAL_ONLY if company == LEGACY else PipelineKind.FULL
    spec = PipelineSpec(
        id=f"{company}_{task.id}",
        kind=kind,
        expected_cost=cost,
        errors=ComponentErrors(retrieval=eps_ret, verification=eps_ver),
    )
    return RunResult(
        company=company,
        task_id=task.id,
        doctrine=task.doctrine,
        simulated_time=cost,
        eps_ret=eps_ret,
        eps_ver=eps_ver,
        eps_tot=spec.total_error(),
        score=pipeline_score(spec, scenario.policy),
        verdict=verdict,
    )


def _run_docket_once(
    scenario: SimScenario,
    corpus: Corpus,
    seed: int,
    run_index: int,
    jitter_sigma: float,
) -> list[RunResult]:
    synonyms = scenario.synonym_table()
    verifier_rng = _rng(seed, _STREAM_VERIFIER, run_index)
    jitter_rng = _rng(seed, _STREAM_JITTER, run_index) if jitter_sigma > 0.0 else None
    results = []
    for task in scenario.tasks:
        for company in (LEGACY, MODERN):
            results.append(
                _run_task(
                    scenario,
                    corpus,
                    synonyms,
                    task,
                    company,
                    verifier_rng,
                    jitter_rng,
                    jitter_sigma,
                )
            )
    return results


def run_docket(scenario: SimScenario, seed: int | None = None) -> list[RunResult]:
    """Execute both companies on every docket task, without time jitter.

    Emits two rows per task (legacy first), with errors in the deterministic
    0/1 regime and scores delegated to the pipeline scorer.
    """
    seed = scenario.seed if seed is None else seed
    corpus = generate_corpus(scenario, seed)
    return _run_docket_once(scenario, corpus, seed, run_index=0, jitter_sigma=0.0)


def company_docket(scenario: SimScenario, results: Sequence[RunResult], company: str) -> Docket:
    """Docket holding, per task, the single pipeline this company ran."""
    propositions = tuple(task.proposition_spec() for task in scenario.tasks)
    sets = {
        r.task_id: (r.pipeline_spec(),) for r in results if r.company == company
    }
    return Docket(propositions=propositions, pipeline_sets=sets)


def company_capacity(
    scenario: SimScenario, results: Sequence[RunResult], company: str
) -> float:
    return capacity_index(company_docket(scenario, results, company), scenario.policy)


@dataclass(frozen=True)
class MonteCarloCell:
    company: str
    task_id: str
    doctrine: str
    scores: tuple[float, ...]

    @property
    def minimum(self) -> float:
        return min(self.scores)

    @property
    def maximum(self) -> float:
        return max(self.scores)

    def quartiles(self) -> tuple[float, float, float]:
        q1, q2, q3 = np.percentile(np.array(self.scores), [25.0, 50.0, 75.0])
        return float(q1), float(q2), float(q3)


@dataclass(frozen=True)
class MonteCarloResult:
    cells: tuple[MonteCarloCell, ...]
    runs: int
    jitter_sigma: float
    seed: int


def monte_carlo(
    scenario: SimScenario,
    runs: int,
    jitter_sigma: float | None = None,
    seed: int | None = None,
) -> MonteCarloResult:
    """Repeat the whole docket ``runs`` times with jittered execution times.

    Jitter moves times only; the deterministic 0/1 error pattern never
    flips. Each run draws from its own sub-stream of the master seed.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    seed = scenario.seed if seed is None else seed
    sigma = scenario.jitter_sigma if jitter_sigma is None else jitter_sigma
    if sigma < 0.0:
        raise ValueError(f"jitter_sigma must be >= 0, got {sigma}")
    corpus = generate_corpus(scenario, seed)
    per_cell: dict[tuple[str, str], list[float]] = {}
    doctrines: dict[str, str] = {t.id: t.doctrine for t in scenario.tasks}
    for i in range(runs):
        for row in _run_docket_once(scenario, corpus, seed, run_index=i, jitter_sigma=sigma):
            per_cell.setdefault((row.company, row.task_id), []).append(row.score)
    cells = tuple(
        MonteCarloCell(company, task_id, doctrines[task_id], tuple(scores))
        for (company, task_id), scores in sorted(per_cell.items())
    )
    return MonteCarloResult(cells=cells, runs=runs, jitter_sigma=sigma, seed=seed)


@dataclass(frozen=True)
class ScalePoint:
    corpus_size: int
    legacy_cost: float
    modern_cost: float


def scalability_sweep(
    scenario: SimScenario,
    sizes: Sequence[int],
    seed: int | None = None,
) -> list[ScalePoint]:
    """Simulated cost of both cost models on freshly generated corpora.

    Sizes must be ascending and no smaller than the scenario's ground-truth
    requirement. The raw cost models are reported (per-task query scale
    factors do not apply to the sweep).
    """
    if not sizes:
        raise ValueError("scalability_sweep requires at least one size")
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    seed = scenario.seed if seed is None else seed
    points = []
    for size in sizes:
        corpus = generate_corpus(scenario, seed, size=size)
        rng = _rng(seed, _STREAM_SWEEP, size)
        legacy = scenario.legacy_cost(len(corpus)) * _jitter(rng, scenario.jitter_sigma)
        modern = scenario.modern_cost(len(corpus)) * _jitter(rng, scenario.jitter_sigma)
        points.append(ScalePoint(size, legacy, modern))
    return points


def _jitter(rng: np.random.Generator, sigma: float) -> float:
    if sigma <= 0.0:
        return 1.0
    return max(0.01, 1.0 + sigma * float(rng.standard_normal()))


@dataclass(frozen=True)
class SensitivityPoint:
    eps_ver: float
    score: float
    meets_threshold: bool


@dataclass(frozen=True)
class SensitivityCurve:
    points: tuple[SensitivityPoint, ...]
    theta_c: float
    modern_time: float
    first_crossing: float | None


def sensitivity_sweep(
    scenario: SimScenario, eps_values: Sequence[float]
) -> SensitivityCurve:
    """Score degradation as the verifier error rises, retrieval held fixed.

    The modern retrieval time of the first docket task anchors the
    efficiency factor; the curve reports the smallest grid value whose score
    falls below theta_c.
    """
    if not eps_values:
        raise ValueError("sensitivity_sweep requires a non-empty grid")
    for eps in eps_values:
        if not (0.0 <= eps <= 1.0):
            raise ValueError(f"eps grid values must lie in [0, 1], got {eps}")
    task = scenario.tasks[0]
    modern_time = scenario.modern_cost(scenario.corpus_size, task.modern_time_scale)
    eff = efficiency(modern_time, scenario.policy.tau_star)
    points = []
    first_crossing: float | None = None
    for eps in eps_values:
        score = eff * (1.0 - eps)
        meets = score >= scenario.policy.theta_c
        if not meets and first_crossing is None:
            first_crossing = eps
        points.append(SensitivityPoint(eps, score, meets))
    return SensitivityCurve(
        points=tuple(points),
        theta_c=scenario.policy.theta_c,
        modern_time=modern_time,
        first_crossing=first_crossing,
    )
