"""The two firms' retrieval procedures and the simulated verifier.

Keyword search scans every document for literal phrase matches at linear
cost; semantic search ranks documents by cosine similarity of hashed
embeddings at logarithmic cost. Costs are simulated from the scenario's
cost models, optionally jittered; retrieval error for a task is 1 when any
ground-truth document is missed, else 0.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from ..doctrine import Verdict
from .corpus import Corpus, document_matches, embed


def _jitter_factor(rng: np.random.Generator | None, sigma: float) -> float:
    # Multiplicative Gaussian jitter, clamped away from zero.
    if rng is None or sigma <= 0.0:
        return 1.0
    return max(0.01, 1.0 + sigma * float(rng.standard_normal()))


def keyword_search(
    corpus: Corpus,
    keywords: Sequence[str],
    c_per_doc: float,
    *,
    time_scale: float = 1.0,
    rng: np.random.Generator | None = None,
    jitter_sigma: float = 0.0,
) -> tuple[tuple[str, ...], float]:
    """Linear scan for literal phrase matches: (hit ids, simulated seconds)."""
    if not keywords:
        raise ValueError("keyword_search requires a non-empty keyword list")
    hits = tuple(
        doc.id
        for doc in corpus.documents
        if any(document_matches(doc, kw) for kw in keywords)
    )
    cost = c_per_doc * len(corpus) * time_scale * _jitter_factor(rng, jitter_sigma)
    return hits, cost


def semantic_search(
    corpus: Corpus,
    concept_query: str,
    k: int,
    a: float,
    b: float,
    synonyms: Mapping[str, tuple[str, ...]] | None = None,
    *,
    time_scale: float = 1.0,
    rng: np.random.Generator | None = None,
    jitter_sigma: float = 0.0,
) -> tuple[tuple[str, ...], float]:
    """Exact top-k by cosine similarity (ties by id): (hit ids, seconds).

    Simulated cost is a + b * ln(corpus size); k is clamped to the corpus
    size.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    k = min(k, len(corpus))
    query_vec = embed(concept_query, synonyms)
    scored = [
        (-float(np.dot(query_vec, embed(doc.text, synonyms))), doc.id)
        for doc in corpus.documents
    ]
    scored.sort()
    hits = tuple(doc_id for _, doc_id in scored[:k])
    cost = (a + b * math.log(len(corpus))) * time_scale * _jitter_factor(rng, jitter_sigma)
    return hits, cost


def _flip(verdict: Verdict) -> Verdict:
    return Verdict.REFUTED if verdict is Verdict.ESTABLISHED else Verdict.ESTABLISHED


def simulated_verifier(
    hits: Sequence[str],
    ground_truth_ids: frozenset[str],
    truth: Verdict,
    eps_ver: float,
    rng: np.random.Generator,
) -> Verdict:
    """Deterministic stand-in for an LLM verifier.

    With no ground-truth document among the hits there is nothing to verify
    and the verdict is inconclusive. Otherwise the true verdict is returned
    with probability 1 - eps_ver and the wrong one with probability eps_ver,
    driven by the supplied seeded generator.
    """
    if not (0.0 <= eps_ver <= 1.0):
        raise ValueError(f"eps_ver must lie in [0, 1], got {eps_ver}")
    if not ground_truth_ids or not (ground_truth_ids & set(hits)):
        return Verdict.INCONCLUSIVE
    wrong = float(rng.random()) < eps_ver
    return _flip(truth) if wrong else truth
