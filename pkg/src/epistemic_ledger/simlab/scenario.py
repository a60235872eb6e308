"""Scenario files: the seeded description of a simulated two-firm experiment.

A scenario is structured text -- ``key = value`` lines grouped under
``[section]`` headers, with one ``[task.<id>]`` section per docket task. It
pins the corpus shape, both firms' cost models, retrieval and verification
settings, the scoring policy, and the master seed, so every simulation
output is a pure function of (scenario, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..doctrine import Verdict
from ..metrics import PolicyParams, Proposition

DEFAULT_SCENARIO_NAME = "appendix_a"


class ScenarioError(ValueError):
    """A scenario file problem, carrying file and line for diagnostics."""

    def __init__(self, message: str, path: str = "<scenario>", line: int = 0):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


@dataclass(frozen=True)
class TaskSpec:
    """One docket task: a proposition plus how each firm searches for it."""

    id: str
    doctrine: str
    proposition: str
    truth: Verdict
    keywords: tuple[str, ...]
    concept_query: str
    ground_truth: str  # "literal" or "euphemism"
    literal_phrases: tuple[str, ...]
    euphemism_phrases: tuple[str, ...]
    weight: float = 1.0
    threshold: float = 0.7
    legacy_time_scale: float = 1.0
    modern_time_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.ground_truth not in ("literal", "euphemism"):
            raise ValueError(
                f"task {self.id}: ground_truth must be literal or euphemism, "
                f"got {self.ground_truth!r}"
            )
        if self.truth is Verdict.INCONCLUSIVE:
            raise ValueError(f"task {self.id}: truth must be established or refuted")
        if self.ground_truth == "literal" and not self.literal_phrases:
            raise ValueError(f"task {self.id}: literal ground truth needs literal_phrases")
        if self.ground_truth == "euphemism" and not self.euphemism_phrases:
            raise ValueError(
                f"task {self.id}: euphemism ground truth needs euphemism_phrases"
            )
        if not self.keywords:
            raise ValueError(f"task {self.id}: keyword list must be non-empty")
        if min(self.legacy_time_scale, self.modern_time_scale) <= 0.0:
            raise ValueError(f"task {self.id}: time scales must be positive")

    def proposition_spec(self) -> Proposition:
        return Proposition(
            id=self.id,
            description=self.proposition,
            salience_weight=self.weight,
            threshold=self.threshold,
        )


@dataclass(frozen=True)
class SimScenario:
    tasks: tuple[TaskSpec, ...]
    corpus_size: int = 62
    euphemism_ratio: float = 0.1
    ground_truth_per_task: int = 2
    c_per_doc: float = 0.105
    modern_a: float = 0.41
    modern_b: float = 0.40
    jitter_sigma: float = 0.02
    verifier_error: float = 0.0
    retrieval_k: int = 5
    policy: PolicyParams = field(default_factory=PolicyParams)
    seed: int = 42

    def __post_init__(self) -> None:
        if not self.tasks:
            raise ValueError("a scenario needs at least one task")
        if min(self.c_per_doc, self.modern_a, self.modern_b) < 0.0:
            raise ValueError("cost model parameters must be non-negative")
        if self.jitter_sigma < 0.0:
            raise ValueError(f"jitter_sigma must be >= 0, got {self.jitter_sigma}")
        if not (0.0 <= self.verifier_error <= 1.0):
            raise ValueError(f"verifier_error must lie in [0, 1], got {self.verifier_error}")
        if self.retrieval_k < 1:
            raise ValueError(f"retrieval_k must be >= 1, got {self.retrieval_k}")
        if self.ground_truth_per_task < 1:
            raise ValueError("ground_truth_per_task must be >= 1")
        if not (0.0 <= self.euphemism_ratio <= 1.0):
            raise ValueError("euphemism_ratio must lie in [0, 1]")

    def min_corpus_size(self) -> int:
        return self.ground_truth_per_task * len(self.tasks)

    def synonym_table(self) -> dict[str, tuple[str, ...]]:
        """Map each task's euphemism phrases to its concept-query tokens."""
        from .corpus import tokenize

        table: dict[str, tuple[str, ...]] = {}
        for task in self.tasks:
            concept = tuple(tokenize(task.concept_query))
            for phrase in task.euphemism_phrases:
                table[phrase] = concept
        return table

    def legacy_cost(self, n_docs: int, time_scale: float = 1.0) -> float:
        return self.c_per_doc * n_docs * time_scale

    def modern_cost(self, n_docs: int, time_scale: float = 1.0) -> float:
        import math

        return (self.modern_a + self.modern_b * math.log(n_docs)) * time_scale


def _parse_sections(
    text: str, path: str
) -> dict[str, dict[str, tuple[str, int]]]:
    """Split scenario text into {section: {key: (value, line)}}."""
    sections: dict[str, dict[str, tuple[str, int]]] = {"": {}}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ScenarioError(f"malformed section header {line!r}", path, lineno)
            current = line[1:-1].strip()
            if current in sections:
                raise ScenarioError(f"duplicate section [{current}]", path, lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {line!r}", path, lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ScenarioError("empty key", path, lineno)
        if key in sections[current]:
            raise ScenarioError(f"duplicate key {key!r}", path, lineno)
        sections[current][key] = (value.strip(), lineno)
    return sections


class _Section:
    def __init__(self, name: str, values: dict[str, tuple[str, int]], path: str):
        self.name = name
        self.values = values
        self.path = path

    def _raw(self, key: str, default: str | None = None) -> tuple[str, int]:
        if key in self.values:
            return self.values[key]
        if default is None:
            label = f"[{self.name}]" if self.name else "top level"
            raise ScenarioError(f"missing key {key!r} in {label}", self.path, 0)
        return default, 0

    def text(self, key: str, default: str | None = None) -> str:
        return self._raw(key, default)[0]

    def number(self, key: str, default: str | None = None) -> float:
        value, line = self._raw(key, default)
        try:
            return float(value)
        except ValueError:
            raise ScenarioError(f"{key} must be a number, got {value!r}", self.path, line)

    def integer(self, key: str, default: str | None = None) -> int:
        value, line = self._raw(key, default)
        try:
            return int(value)
        except ValueError:
            raise ScenarioError(f"{key} must be an integer, got {value!r}", self.path, line)

    def phrases(self, key: str, default: str | None = None) -> tuple[str, ...]:
        value, _ = self._raw(key, default)
        return tuple(p.strip() for p in value.split(",") if p.strip())


def parse_scenario(text: str, path: str = "<scenario>") -> SimScenario:
    sections = _parse_sections(text, path)

    def section(name: str) -> _Section:
        return _Section(name, sections.get(name, {}), path)

    top = section("")
    corpus = section("corpus")
    costs = section("costs")
    verification = section("verification")
    policy_kv = section("policy")

    policy = PolicyParams(
        tau_star=policy_kv.number("tau_star", "10.0"),
        theta_c=policy_kv.number("theta_c", "0.7"),
        delta=policy_kv.number("delta", "0.05"),
        theta_ak=policy_kv.number("theta_ak", "0.7"),
        theta_ck=policy_kv.number("theta_ck", "0.7"),
        theta_r=policy_kv.number("theta_r", "0.7"),
        theta_neg=policy_kv.number("theta_neg", "0.7"),
    )

    tasks = []
    for name in sections:
        if not name.startswith("task."):
            continue
        task_id = name[len("task.") :]
        sec = section(name)
        truth_text = sec.text("truth")
        try:
            truth = Verdict(truth_text)
        except ValueError:
            raise ScenarioError(
                f"truth must be established or refuted, got {truth_text!r}",
                path,
                sec.values["truth"][1],
            )
        try:
            tasks.append(
                TaskSpec(
                    id=task_id,
                    doctrine=sec.text("doctrine", task_id),
                    proposition=sec.text("proposition"),
                    truth=truth,
                    keywords=sec.phrases("keywords"),
                    concept_query=sec.text("concept_query"),
                    ground_truth=sec.text("ground_truth"),
                    literal_phrases=sec.phrases("literal_phrases", ""),
                    euphemism_phrases=sec.phrases("euphemism_phrases", ""),
                    weight=sec.number("weight", "1.0"),
                    threshold=sec.number("threshold", "0.7"),
                    legacy_time_scale=sec.number("legacy_time_scale", "1.0"),
                    modern_time_scale=sec.number("modern_time_scale", "1.0"),
                )
            )
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(str(exc), path, 0)

    try:
        return SimScenario(
            tasks=tuple(tasks),
            corpus_size=corpus.integer("size", "62"),
            euphemism_ratio=corpus.number("euphemism_ratio", "0.1"),
            ground_truth_per_task=corpus.integer("ground_truth_per_task", "2"),
            c_per_doc=costs.number("legacy_seconds_per_doc", "0.105"),
            modern_a=costs.number("modern_base_seconds", "0.41"),
            modern_b=costs.number("modern_log_seconds", "0.40"),
            jitter_sigma=costs.number("jitter_sigma", "0.02"),
            verifier_error=verification.number("error_rate", "0.0"),
            retrieval_k=verification.integer("top_k", "5"),
            policy=policy,
            seed=top.integer("seed", "42"),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc), path, 0)


def load_scenario(source: str | Path) -> SimScenario:
    """Load a scenario from a file path or a packaged scenario name."""
    path = Path(source)
    if path.suffix == ".scenario" or path.exists():
        return parse_scenario(path.read_text(encoding="utf-8"), str(path))
    name = str(source)
    packaged = resources.files(__package__).joinpath("data", f"{name}.scenario")
    if packaged.is_file():
        return parse_scenario(packaged.read_text(encoding="utf-8"), f"{name}.scenario")
    raise ScenarioError(f"no such scenario file or packaged scenario: {source!r}", str(source), 0)


def default_scenario() -> SimScenario:
    return load_scenario(DEFAULT_SCENARIO_NAME)
