"""Scoring, validation certificates, and doctrine classification for
information pipelines, with a seeded two-firm simulation lab."""

from . import doctrine, metrics, simlab, validation
from .metrics import (
    ComponentErrors,
    Docket,
    PipelineKind,
    PipelineSpec,
    PolicyParams,
    Proposition,
    capacity_index,
    efficiency,
    epistemic_frontier,
    knowledge_predicate,
    org_score,
    pipeline_score,
    total_error,
)
from .validation import (
    BoundMethod,
    ValidationCertificate,
    certify,
    lower_bound_capacity,
    lower_bound_score,
    plug_in_test,
)

__version__ = "0.1.0"

__all__ = [
    "BoundMethod",
    "ComponentErrors",
    "Docket",
    "PipelineKind",
    "PipelineSpec",
    "PolicyParams",
    "Proposition",
    "ValidationCertificate",
    "capacity_index",
    "certify",
    "doctrine",
    "efficiency",
    "epistemic_frontier",
    "knowledge_predicate",
    "lower_bound_capacity",
    "lower_bound_score",
    "metrics",
    "org_score",
    "pipeline_score",
    "plug_in_test",
    "simlab",
    "total_error",
    "validation",
    "__version__",
]
