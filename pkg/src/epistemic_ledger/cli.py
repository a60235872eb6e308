"""Command-line front end: score, certify, classify, simulate, sweep.

Exit codes: 0 success, 1 input/domain diagnostic (file and line named where
applicable), 2 usage error, 3 certification refused. Seed precedence:
--seed, then the EPISTEMIC_LEDGER_SEED environment variable, then the
scenario file's own seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .artifacts import (
    InputError,
    audit_report,
    certificate_to_text,
    files_hash,
    fmt,
    read_eval_records_csv,
    read_executions_csv,
    read_pipelines_csv,
    read_propositions_csv,
    score_table,
)
from .doctrine import classify
from .metrics import (
    Docket,
    PipelineKind,
    PipelineSpec,
    PolicyParams,
    capacity_index,
    org_score,
)
from .simlab import (
    ScenarioError,
    company_capacity,
    export_corpus,
    generate_corpus,
    load_scenario,
    monte_carlo,
    run_docket,
    scalability_sweep,
    sensitivity_sweep,
)
from .validation import (
    BoundMethod,
    CertificationRefusedError,
    certify,
    lower_bound_capacity,
    lower_bound_score,
    plug_in_test,
)

ENV_SEED = "EPISTEMIC_LEDGER_SEED"


def _unit_open(value: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {value!r}")
    if not (0.0 < parsed < 1.0):
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {value}")
    return parsed


def _positive(value: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {value!r}")
    if parsed <= 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return parsed


def _non_negative(value: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {value!r}")
    if parsed < 0.0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return parsed


def _eps_grid(value: str) -> list[float]:
    parts = value.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected START:STOP:STEP, e.g. 0:0.5:0.01")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric grid bound in {value!r}")
    if step <= 0.0 or not (0.0 <= start <= stop <= 1.0):
        raise argparse.ArgumentTypeError(f"bad grid {value!r}: need 0 <= start <= stop <= 1, step > 0")
    count = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(count + 1)]


def _sizes(value: str) -> list[int]:
    try:
        sizes = [int(p) for p in value.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")
    if not sizes or sizes != sorted(sizes):
        raise argparse.ArgumentTypeError("sizes must be non-empty and ascending")
    return sizes


def _policy_from_args(args: argparse.Namespace) -> PolicyParams:
    values = {
        "tau_star": 10.0,
        "theta_c": 0.7,
        "delta": 0.05,
        "theta_ak": 0.7,
        "theta_ck": 0.7,
        "theta_r": 0.7,
        "theta_neg": 0.7,
    }
    policy_path = getattr(args, "policy", None)
    if policy_path:
        from .artifacts import _parse_kv  # shared key=value parser

        for key, (raw, line) in _parse_kv(
            Path(policy_path).read_text(encoding="utf-8"), str(policy_path)
        ).items():
            if key not in values:
                raise InputError(f"unknown policy key {key!r}", str(policy_path), line)
            try:
                values[key] = float(raw)
            except ValueError:
                raise InputError(f"policy key {key!r} must be a number", str(policy_path), line)
    if getattr(args, "tau_star", None) is not None:
        values["tau_star"] = args.tau_star
    if getattr(args, "theta", None) is not None:
        values["theta_c"] = args.theta
    if getattr(args, "delta", None) is not None:
        values["delta"] = args.delta
    return PolicyParams(**values)


def _resolve_seed(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int | None:
    if getattr(args, "seed", None) is not None:
        return args.seed
    raw = os.environ.get(ENV_SEED)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        parser.error(f"{ENV_SEED} must be an integer, got {raw!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_score(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    policy = _policy_from_args(args)
    pipelines = read_pipelines_csv(args.pipelines)
    if not pipelines:
        raise InputError("pipelines file contains no pipelines", str(args.pipelines), 1)
    _emit(score_table(pipelines, policy), args.out)
    return 0


def _cmd_certify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    policy = _policy_from_args(args)
    eval_sets = read_eval_records_csv(args.records)
    pipeline = PipelineSpec(
        id=args.pipeline_id, kind=PipelineKind(args.kind), expected_cost=args.cost
    )
    cert = certify(
        pipeline,
        eval_sets,
        measured_cost=args.cost,
        delta=policy.delta,
        method=BoundMethod(args.method),
        fold_strategy=args.fold_strategy,
        timestamp=args.timestamp,
    )
    text = certificate_to_text(cert)
    summary = (
        f"s_lb = {fmt(lower_bound_score(cert, policy.tau_star))}\n"
        f"plug_in(theta={fmt(policy.theta_c)}) = "
        f"{str(plug_in_test(cert, policy.theta_c, policy.tau_star)).lower()}\n"
    )
    if args.out:
        _emit(text, args.out)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(text)
        sys.stderr.write(summary)
    return 0


def _cmd_classify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    policy = _policy_from_args(args)
    pipelines = {p.id: p for p in read_pipelines_csv(args.pipelines)}
    propositions, sets = read_propositions_csv(args.propositions, pipelines)
    executions = (
        read_executions_csv(args.executions, {p.id for p in propositions})
        if args.executions
        else []
    )
    org_scores = {
        p.id: (org_score(sets[p.id], policy) if sets.get(p.id) else None)
        for p in propositions
    }
    capacity_point = None
    capacity_lower = None
    if propositions and sum(p.salience_weight for p in propositions) > 0:
        docket = Docket(propositions=tuple(propositions), pipeline_sets=sets)
        capacity_point = capacity_index(docket, policy)
        certs = {
            p.id: tuple(
                r.certificate
                for r in executions
                if r.proposition_id == p.id and r.certificate is not None
            )
            for p in propositions
        }
        capacity_lower = lower_bound_capacity(docket, certs, policy)
    else:
        certs = {}
    findings = {
        p.id: classify(
            p,
            sets.get(p.id, ()),
            executions,
            policy,
            capacity=capacity_point,
        )
        for p in propositions
    }
    inputs = [args.pipelines, args.propositions]
    if args.executions:
        inputs.append(args.executions)
    report = audit_report(
        version=__version__,
        policy=policy,
        propositions=propositions,
        pipeline_sets=sets,
        findings=findings,
        org_scores=org_scores,
        certificates=certs,
        capacity_point=capacity_point,
        capacity_lower=capacity_lower,
        inputs_hash=files_hash(inputs),
        seed=str(args.seed) if args.seed is not None else "none",
    )
    _emit(report, args.out)
    return 0


def _simulate_csv(rows) -> str:
    out = ["company,task,doctrine,time_s,eps_ret,eps_ver,eps_tot,score"]
    for r in rows:
        out.append(
            ",".join(
                (
                    r.company,
                    r.task_id,
                    r.doctrine,
                    fmt(r.simulated_time),
                    fmt(r.eps_ret),
                    fmt(r.eps_ver),
                    fmt(r.eps_tot),
                    fmt(r.score),
                )
            )
        )
    return "\n".join(out) + "\n"


def _cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    scenario = load_scenario(args.scenario)
    seed = _resolve_seed(args, parser)
    rows = run_docket(scenario, seed=seed)
    text = _simulate_csv(rows)
    if args.summary:
        theta = scenario.policy.theta_c
        text += "\ncompany,capacity,theta\n"
        for company in ("legacy", "modern"):
            text += f"{company},{fmt(company_capacity(scenario, rows, company))},{fmt(theta)}\n"
    if args.export_corpus:
        corpus = generate_corpus(scenario, seed if seed is not None else scenario.seed)
        Path(args.export_corpus).write_text(export_corpus(corpus), encoding="utf-8")
    _emit(text, args.out)
    return 0


def _cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    scenario = load_scenario(args.scenario)
    seed = _resolve_seed(args, parser)
    if args.sweep_command == "sensitivity":
        curve = sensitivity_sweep(scenario, args.eps_grid)
        out = ["eps_ver,score,meets_theta,crossover"]
        for point in curve.points:
            crossover = curve.first_crossing is not None and point.eps_ver == curve.first_crossing
            out.append(
                f"{fmt(point.eps_ver)},{fmt(point.score)},"
                f"{str(point.meets_threshold).lower()},{str(crossover).lower()}"
            )
        _emit("\n".join(out) + "\n", args.out)
        return 0
    if args.sweep_command == "scalability":
        points = scalability_sweep(scenario, args.sizes, seed=seed)
        out = ["corpus_size,legacy_cost,modern_cost"]
        for p in points:
            out.append(f"{p.corpus_size},{fmt(p.legacy_cost)},{fmt(p.modern_cost)}")
        _emit("\n".join(out) + "\n", args.out)
        return 0
    if args.sweep_command == "montecarlo":
        result = monte_carlo(scenario, runs=args.runs, jitter_sigma=args.jitter, seed=seed)
        out = ["company,task,doctrine,runs,min,q1,median,q3,max"]
        for cell in result.cells:
            q1, q2, q3 = cell.quartiles()
            out.append(
                ",".join(
                    (
                        cell.company,
                        cell.task_id,
                        cell.doctrine,
                        str(result.runs),
                        fmt(cell.minimum),
                        fmt(q1),
                        fmt(q2),
                        fmt(q3),
                        fmt(cell.maximum),
                    )
                )
            )
        _emit("\n".join(out) + "\n", args.out)
        return 0
    parser.error("choose a sweep: sensitivity, scalability, or montecarlo")


def _add_policy_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--policy", help="policy file (key = value lines)")
    sub.add_argument("--theta", type=_unit_open, help="knowledge threshold theta_c")
    sub.add_argument("--tau-star", dest="tau_star", type=_positive, help="reference seconds")
    sub.add_argument("--delta", type=_unit_open, help="confidence parameter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epistemic-ledger",
        description=(
            "Score information pipelines, issue validation certificates, "
            "classify epistemic states, and run the seeded two-firm simulation."
        ),
        epilog=(
            f"Seed precedence: --seed, then ${ENV_SEED}, then the scenario's seed."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score pipelines from a CSV file")
    p_score.add_argument("pipelines", help="pipelines CSV")
    _add_policy_flags(p_score)
    p_score.add_argument("--out", help="write the table here instead of stdout")

    p_cert = sub.add_parser("certify", help="issue a validation certificate")
    p_cert.add_argument("records", help="evaluation records CSV (component,loss)")
    p_cert.add_argument("--pipeline-id", required=True)
    p_cert.add_argument(
        "--kind",
        choices=[k.value for k in PipelineKind],
        default=PipelineKind.FULL.value,
    )
    p_cert.add_argument("--cost", type=_non_negative, required=True, help="measured seconds")
    p_cert.add_argument(
        "--method", choices=[m.value for m in BoundMethod], default=BoundMethod.WILSON.value
    )
    p_cert.add_argument("--fold-strategy", dest="fold_strategy", default="holdout")
    p_cert.add_argument("--timestamp", help="ISO-8601 timestamp to embed (default: now)")
    _add_policy_flags(p_cert)
    p_cert.add_argument("--out", help="write the certificate here instead of stdout")

    p_classify = sub.add_parser("classify", help="emit an audit report with doctrine findings")
    p_classify.add_argument("--propositions", required=True, help="propositions CSV")
    p_classify.add_argument("--pipelines", required=True, help="pipelines CSV")
    p_classify.add_argument("--executions", help="executions CSV (optional)")
    p_classify.add_argument("--seed", type=int, help="seed echoed into the report header")
    _add_policy_flags(p_classify)
    p_classify.add_argument("--out", help="write the report here instead of stdout")

    p_sim = sub.add_parser("simulate", help="run the docket simulation")
    p_sim.add_argument("--scenario", default="appendix_a", help="scenario file or packaged name")
    p_sim.add_argument("--seed", type=int, help="override the scenario seed")
    p_sim.add_argument("--summary", action="store_true", help="append capacity rows")
    p_sim.add_argument("--export-corpus", dest="export_corpus", help="also write the corpus here")
    p_sim.add_argument("--out", help="write the CSV here instead of stdout")

    p_sweep = sub.add_parser("sweep", help="sensitivity, scalability, or Monte Carlo sweeps")
    sweep_sub = p_sweep.add_subparsers(dest="sweep_command", required=True)
    for name in ("sensitivity", "scalability", "montecarlo"):
        p = sweep_sub.add_parser(name)
        p.add_argument("--scenario", default="appendix_a")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if name == "sensitivity":
            p.add_argument("--eps-grid", dest="eps_grid", type=_eps_grid, default=_eps_grid("0:0.5:0.01"))
        if name == "scalability":
            p.add_argument(
                "--sizes",
                type=_sizes,
                default=_sizes("60,100,200,300,400,500,600,700,800,900,1000"),
            )
        if name == "montecarlo":
            p.add_argument("--runs", type=int, default=15)
            p.add_argument("--jitter", type=_non_negative, default=None)
    return parser


_HANDLERS = {
    "score": _cmd_score,
    "certify": _cmd_certify,
    "classify": _cmd_classify,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[args.command]
    try:
        return handler(args, parser)
    except CertificationRefusedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
