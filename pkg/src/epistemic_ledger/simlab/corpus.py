"""Synthetic corporate corpus and the hashed bag-of-tokens embedding.

Documents are template-generated from the scenario's task specs: literal
ground-truth documents carry a task's keyword phrases verbatim, euphemistic
ground-truth documents carry only oblique phrasing, and distractors are
routine operations notes with vocabulary disjoint from every concept query.
The embedding hashes tokens into a fixed-dimension unit vector; an explicit
synonym table expands euphemism phrases into their concept tokens, which is
what lets a conceptual search find what a literal keyword scan misses.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .scenario import SimScenario

EMBED_DIM = 512
# Nominal floor used when judging whether two texts are conceptually linked.
SIMILARITY_FLOOR = 0.2

TAG_LITERAL = "literal_match"
TAG_EUPHEMISM = "euphemism"
TAG_DISTRACTOR = "distractor"

_STOPWORDS = frozenset(
    "a an and are as at be by for from has have in is it its no not of on or "
    "our the their this to was were with".split()
)
_TOKEN_RE = re.compile(r"[a-z0-9]+")

_LITERAL_TEMPLATE = (
    "internal memo {num}: quarterly review records that {phrase} findings "
    "were documented by the operations group and filed for follow up."
)
_EUPHEMISM_TEMPLATE = (
    "internal memo {num}: leadership summary notes {phrase} across regional "
    "teams this quarter. circulation restricted to senior staff."
)
_DISTRACTOR_TOPICS = (
    "facilities bulletin {num}: elevator maintenance scheduled over the weekend.",
    "cafeteria notice {num}: seasonal menu rotation begins monday morning.",
    "parking services {num}: permit renewal window opens friday afternoon.",
    "helpdesk update {num}: toner cartridges restocked near floor three.",
    "onboarding note {num}: welcome packet templates gained badge guidance.",
    "travel office {num}: reimbursement forms migrate onto the portal soon.",
    "mailroom memo {num}: courier pickup moves earlier during renovations.",
    "library circular {num}: periodical shelving reorganised along east wall.",
)
_GENERIC_EUPHEMISMS = (
    "headcount smoothing initiative",
    "synergy capture program",
    "resource cadence alignment",
)
_FILLER_WORDS = (
    "orchid", "granite", "maple", "willow", "copper",
    "slate", "fern", "cobalt", "amber", "pearl",
)


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in _STOPWORDS]


def _token_index(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def embed(
    text: str,
    synonyms: Mapping[str, tuple[str, ...]] | None = None,
    dim: int = EMBED_DIM,
) -> np.ndarray:
    """Hashed bag-of-tokens unit vector, with synonym-table expansion.

    Any synonym-table phrase found in the text contributes its mapped
    concept tokens alongside the text's own tokens. Identical text always
    embeds to the identical vector.
    """
    if not text or not text.strip():
        raise ValueError("cannot embed empty text")
    tokens = tokenize(text)
    normalized = " ".join(_TOKEN_RE.findall(text.lower()))
    if synonyms:
        for phrase, concept_tokens in synonyms.items():
            phrase_norm = " ".join(_TOKEN_RE.findall(phrase.lower()))
            if phrase_norm and phrase_norm in normalized:
                tokens.extend(concept_tokens)
    vector = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        vector[_token_index(token, dim)] += 1.0
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise ValueError(f"text has no indexable tokens: {text!r}")
    return vector / norm


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u, v))


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    tags: frozenset[str]
    ground_truth_for: frozenset[str]


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.documents)

    def ground_truth_ids(self, task_id: str) -> frozenset[str]:
        return frozenset(
            d.id for d in self.documents if task_id in d.ground_truth_for
        )


def _contains_phrase(tokens: Sequence[str], phrase: str) -> bool:
    """True when the phrase's tokens appear consecutively in the token list."""
    needle = _TOKEN_RE.findall(phrase.lower())
    if not needle:
        return False
    span = len(needle)
    return any(
        list(tokens[i : i + span]) == needle for i in range(len(tokens) - span + 1)
    )


def document_matches(doc: Document, phrase: str) -> bool:
    return _contains_phrase(_TOKEN_RE.findall(doc.text.lower()), phrase)


def generate_corpus(scenario: SimScenario, seed: int, size: int | None = None) -> Corpus:
    """Deterministically build a corpus of ``size`` documents for the scenario.

    Ground-truth documents come first (stable ids), then seeded distractors,
    a slice of which use generic corporate euphemisms per the scenario's
    euphemism ratio.
    """
    n = scenario.corpus_size if size is None else size
    required = scenario.min_corpus_size()
    if n < required:
        raise ValueError(
            f"corpus size {n} is below the {required} ground-truth documents required"
        )
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    docs: list[Document] = []

    for task in scenario.tasks:
        for j in range(scenario.ground_truth_per_task):
            doc_id = f"doc-{len(docs):04d}"
            if task.ground_truth == "literal":
                phrase = task.literal_phrases[j % len(task.literal_phrases)]
                text = _LITERAL_TEMPLATE.format(num=doc_id[-4:], phrase=phrase)
                tags = frozenset({TAG_LITERAL})
            else:
                phrase = task.euphemism_phrases[j % len(task.euphemism_phrases)]
                text = _EUPHEMISM_TEMPLATE.format(num=doc_id[-4:], phrase=phrase)
                tags = frozenset({TAG_EUPHEMISM})
            docs.append(Document(doc_id, text, tags, frozenset({task.id})))

    n_distractors = n - len(docs)
    n_euphemistic = int(round(scenario.euphemism_ratio * n_distractors))
    for j in range(n_distractors):
        doc_id = f"doc-{len(docs):04d}"
        topic = _DISTRACTOR_TOPICS[int(rng.integers(len(_DISTRACTOR_TOPICS)))]
        fillers = rng.choice(len(_FILLER_WORDS), size=2, replace=False)
        text = topic.format(num=doc_id[-4:]) + " reference tag {} {}.".format(
            _FILLER_WORDS[int(fillers[0])], _FILLER_WORDS[int(fillers[1])]
        )
        tags = {TAG_DISTRACTOR}
        if j < n_euphemistic:
            softener = _GENERIC_EUPHEMISMS[j % len(_GENERIC_EUPHEMISMS)]
            text += f" filed under the {softener}."
            tags.add(TAG_EUPHEMISM)
        docs.append(Document(doc_id, text, frozenset(tags), frozenset()))

    return Corpus(tuple(docs), seed)


def export_corpus(corpus: Corpus) -> str:
    """One record per line: id, text, tags, ground-truth task ids (tab-separated)."""
    lines = []
    for doc in corpus.documents:
        lines.append(
            "\t".join(
                (
                    doc.id,
                    doc.text,
                    ",".join(sorted(doc.tags)) or "-",
                    ",".join(sorted(doc.ground_truth_for)) or "-",
                )
            )
        )
    return "\n".join(lines) + "\n"
