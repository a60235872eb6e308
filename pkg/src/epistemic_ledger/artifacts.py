"""File schemas and report rendering for the command-line front end.

Pipelines, propositions, executions, and evaluation records travel as CSV;
certificates as flat key=value text (full precision, so they round-trip);
audit reports as sectioned key=value text with every number at fixed
4-decimal precision so reports are diff-able and byte-reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import io
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .doctrine import (
    AvoidanceEvidence,
    DoctrineFinding,
    ExecutionRecord,
    Verdict,
)
from .metrics import (
    ComponentErrors,
    Docket,
    FrontierPoint,
    PipelineKind,
    PipelineSpec,
    PolicyParams,
    Proposition,
    best_pipeline,
    epistemic_frontier,
    knowledge_predicate,
    pipeline_score,
)
from .validation import (
    BoundMethod,
    CertProvenance,
    ConfidenceBound,
    LossRecord,
    ValidationCertificate,
    lower_bound_score,
)


class InputError(ValueError):
    """A malformed input file, pointing at the offending line."""

    def __init__(self, message: str, path: str, line: int):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def fmt(x: float) -> str:
    return f"{x:.4f}"


def _short_hash(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()[:12]


def policy_hash(policy: PolicyParams) -> str:
    canon = ",".join(
        f"{name}={getattr(policy, name)!r}"
        for name in (
            "tau_star",
            "theta_c",
            "delta",
            "theta_ak",
            "theta_ck",
            "theta_r",
            "theta_neg",
        )
    )
    return _short_hash(canon.encode("utf-8"))


def files_hash(paths: Iterable[str | Path]) -> str:
    digest = hashlib.sha256()
    for path in paths:
        digest.update(Path(path).read_bytes())
    return digest.hexdigest()[:12]


def _rows(path: str | Path, expected: Sequence[str]) -> Iterable[tuple[int, dict[str, str]]]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise InputError("empty file (missing header)", str(path), 1)
    missing = [c for c in expected if c not in reader.fieldnames]
    if missing:
        raise InputError(f"missing column(s): {', '.join(missing)}", str(path), 1)
    for row in reader:
        yield reader.line_num, row


def _number(value: str, column: str, path: str, line: int) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InputError(f"column {column!r} must be a number, got {value!r}", path, line)


def read_pipelines_csv(path: str | Path) -> list[PipelineSpec]:
    """Columns: id, kind, expected_cost, eps_ret, eps_gen, eps_ver[, joint_error]."""
    pipelines = []
    for line, row in _rows(path, ("id", "kind", "expected_cost", "eps_ret", "eps_gen", "eps_ver")):
        try:
            kind = PipelineKind(row["kind"].strip())
        except ValueError:
            raise InputError(f"unknown pipeline kind {row['kind']!r}", str(path), line)
        joint_raw = (row.get("joint_error") or "").strip()
        joint = _number(joint_raw, "joint_error", str(path), line) if joint_raw else None
        try:
            pipelines.append(
                PipelineSpec(
                    id=row["id"].strip(),
                    kind=kind,
                    expected_cost=_number(row["expected_cost"], "expected_cost", str(path), line),
                    errors=ComponentErrors(
                        retrieval=_number(row["eps_ret"], "eps_ret", str(path), line),
                        generation=_number(row["eps_gen"], "eps_gen", str(path), line),
                        verification=_number(row["eps_ver"], "eps_ver", str(path), line),
                    ),
                    joint_error=joint,
                )
            )
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(str(exc), str(path), line)
    return pipelines


def read_eval_records_csv(path: str | Path) -> dict[str, list[LossRecord]]:
    """Columns: component, loss[, predicted, actual]."""
    sets: dict[str, list[LossRecord]] = {}
    for line, row in _rows(path, ("component", "loss")):
        component = row["component"].strip()
        if component not in ("retrieval", "generation", "verification"):
            raise InputError(f"unknown component {component!r}", str(path), line)
        loss = _number(row["loss"], "loss", str(path), line)
        try:
            record = LossRecord(
                predicted=(row.get("predicted") or "").strip(),
                actual=(row.get("actual") or "").strip(),
                loss=loss,
            )
        except ValueError as exc:
            raise InputError(str(exc), str(path), line)
        sets.setdefault(component, []).append(record)
    return sets


def read_propositions_csv(
    path: str | Path, pipelines: Mapping[str, PipelineSpec]
) -> tuple[list[Proposition], dict[str, tuple[PipelineSpec, ...]]]:
    """Columns: id, description, weight, threshold, pipelines (semicolon ids)."""
    propositions = []
    sets: dict[str, tuple[PipelineSpec, ...]] = {}
    for line, row in _rows(path, ("id", "description", "weight", "threshold", "pipelines")):
        prop_id = row["id"].strip()
        try:
            propositions.append(
                Proposition(
                    id=prop_id,
                    description=row["description"].strip(),
                    salience_weight=_number(row["weight"], "weight", str(path), line),
                    threshold=_number(row["threshold"], "threshold", str(path), line),
                )
            )
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(str(exc), str(path), line)
        listed = [p.strip() for p in row["pipelines"].split(";") if p.strip()]
        unknown = [p for p in listed if p not in pipelines]
        if unknown:
            raise InputError(
                f"proposition {prop_id!r} references unknown pipeline(s): "
                f"{', '.join(unknown)}",
                str(path),
                line,
            )
        sets[prop_id] = tuple(pipelines[p] for p in listed)
    return propositions, sets


def read_executions_csv(
    path: str | Path, known_propositions: set[str]
) -> list[ExecutionRecord]:
    """Columns: proposition_id, pipeline_id, executed, outcome, avoidance_evidence, certificate, timestamp."""
    records = []
    base = Path(path).parent
    for line, row in _rows(
        path,
        ("proposition_id", "pipeline_id", "executed", "outcome", "avoidance_evidence", "certificate"),
    ):
        prop_id = row["proposition_id"].strip()
        if known_propositions and prop_id not in known_propositions:
            raise InputError(
                f"execution references unknown proposition {prop_id!r}", str(path), line
            )
        executed_raw = row["executed"].strip().lower()
        if executed_raw not in ("true", "false"):
            raise InputError(
                f"column 'executed' must be true or false, got {row['executed']!r}",
                str(path),
                line,
            )
        outcome_raw = (row.get("outcome") or "").strip()
        try:
            outcome = Verdict(outcome_raw) if outcome_raw else None
        except ValueError:
            raise InputError(f"unknown outcome {outcome_raw!r}", str(path), line)
        evidence_raw = (row.get("avoidance_evidence") or "none").strip() or "none"
        try:
            evidence = AvoidanceEvidence(evidence_raw)
        except ValueError:
            raise InputError(f"unknown avoidance evidence {evidence_raw!r}", str(path), line)
        cert_raw = (row.get("certificate") or "").strip()
        certificate = None
        if cert_raw:
            cert_path = Path(cert_raw)
            if not cert_path.is_absolute():
                cert_path = base / cert_path
            if not cert_path.exists():
                raise InputError(f"certificate file not found: {cert_raw}", str(path), line)
            certificate = read_certificate(cert_path)
        try:
            records.append(
                ExecutionRecord(
                    pipeline_id=row["pipeline_id"].strip(),
                    proposition_id=prop_id,
                    executed=executed_raw == "true",
                    certificate=certificate,
                    outcome=outcome,
                    avoidance_evidence=evidence,
                    timestamp=(row.get("timestamp") or "").strip(),
                )
            )
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(str(exc), str(path), line)
    return records


_CERT_BOUND_KEYS = ("point", "upper", "method", "delta", "n", "synthetic")


def certificate_to_text(cert: ValidationCertificate) -> str:
    """Flat key=value serialization, full precision for exact round-trips."""
    lines = [
        "# validation certificate",
        f"pipeline_id = {cert.pipeline_id}",
        f"measured_cost = {cert.measured_cost!r}",
        f"delta = {cert.delta!r}",
        f"total_upper = {cert.total_upper!r}",
    ]
    for prefix, bound in (
        ("ret", cert.ret_bound),
        ("gen", cert.gen_bound),
        ("ver", cert.ver_bound),
    ):
        lines.extend(
            [
                f"{prefix}_point = {bound.point_estimate!r}",
                f"{prefix}_upper = {bound.upper!r}",
                f"{prefix}_method = {bound.method.value}",
                f"{prefix}_delta = {bound.delta!r}",
                f"{prefix}_n = {bound.sample_size}",
                f"{prefix}_synthetic = {str(bound.synthetic).lower()}",
            ]
        )
    prov = cert.provenance
    lines.extend(
        [
            f"fold_strategy = {prov.fold_strategy}",
            f"sample_sizes = {','.join(str(n) for n in prov.sample_sizes)}",
            f"timestamp = {prov.timestamp}",
            f"union_delta = {prov.union_delta!r}",
        ]
    )
    return "\n".join(lines) + "\n"


def _parse_kv(text: str, path: str) -> dict[str, tuple[str, int]]:
    values: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"expected 'key = value', got {line!r}", path, lineno)
        key, _, value = line.partition("=")
        values[key.strip()] = (value.strip(), lineno)
    return values


def read_certificate(path: str | Path) -> ValidationCertificate:
    text = Path(path).read_text(encoding="utf-8")
    values = _parse_kv(text, str(path))

    def need(key: str) -> tuple[str, int]:
        if key not in values:
            raise InputError(f"certificate missing key {key!r}", str(path), 1)
        return values[key]

    def number(key: str) -> float:
        value, line = need(key)
        return _number(value, key, str(path), line)

    def bound(prefix: str) -> ConfidenceBound:
        method_raw, line = need(f"{prefix}_method")
        try:
            method = BoundMethod(method_raw)
        except ValueError:
            raise InputError(f"unknown bound method {method_raw!r}", str(path), line)
        try:
            return ConfidenceBound(
                point_estimate=number(f"{prefix}_point"),
                upper=number(f"{prefix}_upper"),
                method=method,
                delta=number(f"{prefix}_delta"),
                sample_size=int(number(f"{prefix}_n")),
                synthetic=need(f"{prefix}_synthetic")[0] == "true",
            )
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(str(exc), str(path), line)

    sizes = tuple(
        int(s) for s in need("sample_sizes")[0].split(",") if s.strip() != ""
    )
    if len(sizes) != 3:
        raise InputError("sample_sizes must have three entries", str(path), need("sample_sizes")[1])
    try:
        return ValidationCertificate(
            pipeline_id=need("pipeline_id")[0],
            measured_cost=number("measured_cost"),
            ret_bound=bound("ret"),
            gen_bound=bound("gen"),
            ver_bound=bound("ver"),
            total_upper=number("total_upper"),
            delta=number("delta"),
            provenance=CertProvenance(
                fold_strategy=need("fold_strategy")[0],
                sample_sizes=sizes,  # type: ignore[arg-type]
                timestamp=need("timestamp")[0],
                union_delta=number("union_delta"),
            ),
        )
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc), str(path), 1)


def score_table(pipelines: Sequence[PipelineSpec], policy: PolicyParams) -> str:
    """Two CSV sections: per-pipeline scores, then the organisational summary."""
    out = ["id,kind,expected_cost,eps_ret,eps_gen,eps_ver,eps_tot,score"]
    for p in pipelines:
        out.append(
            ",".join(
                (
                    p.id,
                    p.kind.value,
                    fmt(p.expected_cost),
                    fmt(p.errors.retrieval),
                    fmt(p.errors.generation),
                    fmt(p.errors.verification),
                    fmt(p.total_error()),
                    fmt(pipeline_score(p, policy)),
                )
            )
        )
    winner, best = best_pipeline(pipelines, policy)
    out.append("")
    out.append("org_score,best_pipeline,theta_c,predicate")
    out.append(
        ",".join(
            (
                fmt(best),
                winner.id,
                fmt(policy.theta_c),
                str(knowledge_predicate(best, policy.theta_c)).lower(),
            )
        )
    )
    return "\n".join(out) + "\n"


def frontier_field(points: Sequence[FrontierPoint]) -> str:
    return "; ".join(
        f"{p.pipeline_id}:{fmt(p.cost)}:{fmt(p.total_error)}" for p in points
    )


def audit_report(
    version: str,
    policy: PolicyParams,
    propositions: Sequence[Proposition],
    pipeline_sets: Mapping[str, tuple[PipelineSpec, ...]],
    findings: Mapping[str, DoctrineFinding],
    org_scores: Mapping[str, float],
    certificates: Mapping[str, Sequence[ValidationCertificate]],
    capacity_point: float | None,
    capacity_lower: float | None,
    inputs_hash: str,
    seed: str,
) -> str:
    """Render the sectioned audit report; byte-stable for identical inputs."""
    lines = [
        "# audit report (model classification, not legal advice)",
        f"version = {version}",
        f"policy_hash = {policy_hash(policy)}",
        f"inputs_hash = {inputs_hash}",
        f"seed = {seed}",
        f"tau_star = {fmt(policy.tau_star)}",
        f"theta_c = {fmt(policy.theta_c)}",
    ]
    for prop in propositions:
        pipes = pipeline_sets.get(prop.id, ())
        finding = findings[prop.id]
        lines.append("")
        lines.append(f"[proposition {prop.id}]")
        lines.append(f"description = {prop.description}")
        lines.append(f"weight = {fmt(prop.salience_weight)}")
        lines.append(f"threshold = {fmt(prop.threshold)}")
        score = org_scores.get(prop.id)
        lines.append(f"org_score = {fmt(score) if score is not None else 'none'}")
        lines.append(
            f"predicate = "
            f"{str(score is not None and score >= prop.threshold).lower()}"
        )
        lines.append(
            "frontier = " + (frontier_field(epistemic_frontier(pipes)) if pipes else "none")
        )
        certs = certificates.get(prop.id, ())
        if certs:
            rendered = "; ".join(
                f"{c.pipeline_id}:s_lb={fmt(lower_bound_score(c, policy.tau_star))}"
                for c in certs
            )
            lines.append(f"certificates = {rendered}")
        else:
            lines.append("certificates = none")
        applicable = ",".join(sorted(d.value for d in finding.applicable)) or "none"
        lines.append(f"applicable = {applicable}")
        lines.append(f"primary = {finding.primary.value if finding.primary else 'none'}")
        for doctrine, detail in finding.rationale:
            rendered = " ".join(
                f"{k}={fmt(v) if isinstance(v, float) else v}"
                for k, v in sorted(detail.items())
            )
            lines.append(f"rationale.{doctrine.value} = {rendered}")
    lines.append("")
    lines.append("[capacity]")
    lines.append(
        f"point = {fmt(capacity_point) if capacity_point is not None else 'none'}"
    )
    lines.append(
        f"lower_bound = {fmt(capacity_lower) if capacity_lower is not None else 'none'}"
    )
    lines.append(f"theta_neg = {fmt(policy.theta_neg)}")
    return "\n".join(lines) + "\n"
