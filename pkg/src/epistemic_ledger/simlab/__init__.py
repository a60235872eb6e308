"""Seeded desk-scale simulation of two firms' information pipelines."""

from .corpus import (
    Corpus,
    Document,
    EMBED_DIM,
    SIMILARITY_FLOOR,
    cosine,
    embed,
    export_corpus,
    generate_corpus,
    tokenize,
)
from .runner import (
    LEGACY,
    MODERN,
    MonteCarloCell,
    MonteCarloResult,
    RunResult,
    ScalePoint,
    SensitivityCurve,
    SensitivityPoint,
    company_capacity,
    company_docket,
    monte_carlo,
    run_docket,
    scalability_sweep,
    sensitivity_sweep,
)
from .scenario import (
    DEFAULT_SCENARIO_NAME,
    ScenarioError,
    SimScenario,
    TaskSpec,
    default_scenario,
    load_scenario,
    parse_scenario,
)
from .search import keyword_search, semantic_search, simulated_verifier

__all__ = [
    "Corpus",
    "Document",
    "EMBED_DIM",
    "SIMILARITY_FLOOR",
    "DEFAULT_SCENARIO_NAME",
    "LEGACY",
    "MODERN",
    "MonteCarloCell",
    "MonteCarloResult",
    "RunResult",
    "ScalePoint",
    "ScenarioError",
    "SensitivityCurve",
    "SensitivityPoint",
    "SimScenario",
    "TaskSpec",
    "company_capacity",
    "company_docket",
    "cosine",
    "default_scenario",
    "embed",
    "export_corpus",
    "generate_corpus",
    "keyword_search",
    "load_scenario",
    "monte_carlo",
    "parse_scenario",
    "run_docket",
    "scalability_sweep",
    "semantic_search",
    "sensitivity_sweep",
    "simulated_verifier",
    "tokenize",
]
