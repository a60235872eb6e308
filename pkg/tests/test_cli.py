"""End-to-end tests for the command-line interface and file schemas."""

import pytest

from epistemic_ledger.artifacts import (
    InputError,
    certificate_to_text,
    read_certificate,
    read_pipelines_csv,
)
from epistemic_ledger.cli import main
from epistemic_ledger.metrics import PipelineKind, PipelineSpec
from epistemic_ledger.validation import BoundMethod, certify

from test_validation import loss_records

PIPELINES_CSV = """id,kind,expected_cost,eps_ret,eps_gen,eps_ver
legacy_actual,retrieval_only,5.90,0.00,0.00,0.00
modern_actual,full,2.06,0.00,0.00,0.00
"""

PROPOSITIONS_CSV = """id,description,weight,threshold,pipelines
bid_independence,Bids set independently,1.0,0.7,legacy_actual;modern_actual
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def records_csv(tmp_path, n=1000, components=("retrieval", "generation", "verification")):
    rows = ["component,loss"]
    for component in components:
        rows += [f"{component},0"] * n
    return write(tmp_path, "records.csv", "\n".join(rows) + "\n")


class TestScore:
    def test_table_rows_match(self, tmp_path, capsys):
        path = write(tmp_path, "pipelines.csv", PIPELINES_CSV)
        assert main(["score", path, "--theta", "0.7"]) == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert lines[1].endswith("0.6289")
        assert lines[2].endswith("0.8292")
        assert lines[-1] == "0.8292,modern_actual,0.7000,true"

    def test_theta_echoes_into_predicate_column(self, tmp_path, capsys):
        path = write(tmp_path, "pipelines.csv", PIPELINES_CSV)
        assert main(["score", path, "--theta", "0.9"]) == 0
        out = capsys.readouterr().out
        assert out.strip().split("\n")[-1].endswith("0.9000,false")

    def test_empty_pipeline_list_fails(self, tmp_path, capsys):
        path = write(tmp_path, "empty.csv", "id,kind,expected_cost,eps_ret,eps_gen,eps_ver\n")
        assert main(["score", path]) == 1
        assert "no pipelines" in capsys.readouterr().err

    def test_malformed_file_names_line(self, tmp_path, capsys):
        bad = PIPELINES_CSV + "broken,full,not_a_number,0,0,0\n"
        path = write(tmp_path, "bad.csv", bad)
        assert main(["score", path]) == 1
        err = capsys.readouterr().err
        assert f"{path}:4" in err

    def test_out_file(self, tmp_path, capsys):
        path = write(tmp_path, "pipelines.csv", PIPELINES_CSV)
        out_path = tmp_path / "table.csv"
        assert main(["score", path, "--out", str(out_path)]) == 0
        assert out_path.read_text().startswith("id,kind")

    def test_policy_file_with_flag_override(self, tmp_path, capsys):
        pipelines = write(tmp_path, "pipelines.csv", PIPELINES_CSV)
        policy = write(tmp_path, "policy.txt", "tau_star = 5.0\ntheta_c = 0.9\n")
        assert main(["score", pipelines, "--policy", policy, "--theta", "0.6"]) == 0
        out = capsys.readouterr().out
        # tau* 5 shrinks the efficiency factor; the --theta flag wins over
        # the file's theta_c.
        assert out.strip().split("\n")[-1] == "0.7082,modern_actual,0.6000,true"

    def test_unknown_policy_key_names_line(self, tmp_path, capsys):
        pipelines = write(tmp_path, "pipelines.csv", PIPELINES_CSV)
        policy = write(tmp_path, "policy.txt", "tau_star = 5.0\nmystery = 1\n")
        assert main(["score", pipelines, "--policy", policy]) == 1
        assert f"{policy}:2" in capsys.readouterr().err


class TestCertify:
    def test_zero_error_hoeffding(self, tmp_path, capsys):
        records = records_csv(tmp_path)
        out_path = tmp_path / "cert.cert"
        code = main(
            [
                "certify",
                records,
                "--pipeline-id",
                "modern_actual",
                "--cost",
                "2.06",
                "--method",
                "hoeffding",
                "--timestamp",
                "2026-01-01T00:00:00+00:00",
                "--out",
                str(out_path),
            ]
        )
        assert code == 0
        cert = read_certificate(out_path)
        assert cert.total_upper == pytest.approx(0.1116712, abs=1e-6)
        summary = capsys.readouterr().out
        assert "s_lb = 0.7366" in summary
        assert "plug_in(theta=0.7000) = true" in summary

    def test_wilson_tighter_than_hoeffding_here(self, tmp_path):
        records = records_csv(tmp_path)
        a, b = tmp_path / "w.cert", tmp_path / "h.cert"
        base = ["certify", records, "--pipeline-id", "p", "--cost", "2.06",
                "--timestamp", "2026-01-01T00:00:00+00:00"]
        assert main(base + ["--method", "wilson", "--out", str(a)]) == 0
        assert main(base + ["--method", "hoeffding", "--out", str(b)]) == 0
        assert read_certificate(a).total_upper < read_certificate(b).total_upper

    def test_missing_component_refused(self, tmp_path, capsys):
        records = records_csv(tmp_path, components=("retrieval",))
        code = main(["certify", records, "--pipeline-id", "p", "--cost", "1.0"])
        assert code == 3
        assert "generation" in capsys.readouterr().err

    def test_delta_out_of_range_is_usage_error(self, tmp_path):
        records = records_csv(tmp_path)
        with pytest.raises(SystemExit) as exc:
            main(["certify", records, "--pipeline-id", "p", "--cost", "1", "--delta", "1.5"])
        assert exc.value.code == 2

    def test_certificate_round_trip(self, tmp_path):
        pipeline = PipelineSpec(id="pi", kind=PipelineKind.FULL, expected_cost=2.06)
        sets = {
            slot: loss_records([0.0, 1.0, 0.0, 0.0])
            for slot in ("retrieval", "generation", "verification")
        }
        cert = certify(
            pipeline, sets, measured_cost=2.06, delta=0.05,
            method=BoundMethod.WILSON, timestamp="2026-01-01T00:00:00+00:00",
        )
        path = tmp_path / "roundtrip.cert"
        path.write_text(certificate_to_text(cert))
        assert read_certificate(path) == cert


class TestClassify:
    def _inputs(self, tmp_path, executions=None):
        pipelines = write(tmp_path, "pipelines.csv", PIPELINES_CSV)
        props = write(tmp_path, "props.csv", PROPOSITIONS_CSV)
        argv = ["classify", "--propositions", props, "--pipelines", pipelines]
        if executions is not None:
            argv += ["--executions", write(tmp_path, "exec.csv", executions)]
        return argv

    def test_constructive_without_executions(self, tmp_path, capsys):
        assert main(self._inputs(tmp_path)) == 0
        out = capsys.readouterr().out
        assert "primary = constructive_knowledge" in out
        assert "point = 1.0000" in out
        assert "lower_bound = 0.0000" in out

    def test_actual_with_certified_execution(self, tmp_path, capsys):
        records = records_csv(tmp_path)
        cert_path = tmp_path / "m.cert"
        main(
            ["certify", records, "--pipeline-id", "modern_actual", "--cost", "2.06",
             "--timestamp", "2026-01-01T00:00:00+00:00", "--out", str(cert_path)]
        )
        capsys.readouterr()
        executions = (
            "proposition_id,pipeline_id,executed,outcome,avoidance_evidence,certificate,timestamp\n"
            f"bid_independence,modern_actual,true,established,none,{cert_path},2026-01-02T00:00:00+00:00\n"
        )
        assert main(self._inputs(tmp_path, executions)) == 0
        out = capsys.readouterr().out
        assert "primary = actual_knowledge" in out
        assert "lower_bound = 1.0000" in out

    def test_unknown_proposition_in_executions(self, tmp_path, capsys):
        executions = (
            "proposition_id,pipeline_id,executed,outcome,avoidance_evidence,certificate,timestamp\n"
            "mystery,modern_actual,true,established,none,,\n"
        )
        assert main(self._inputs(tmp_path, executions)) == 1
        assert "unknown proposition" in capsys.readouterr().err

    def test_empty_propositions_empty_report(self, tmp_path, capsys):
        pipelines = write(tmp_path, "pipelines.csv", PIPELINES_CSV)
        props = write(
            tmp_path, "props.csv", "id,description,weight,threshold,pipelines\n"
        )
        code = main(["classify", "--propositions", props, "--pipelines", pipelines])
        assert code == 0
        out = capsys.readouterr().out
        assert "[capacity]" in out
        assert "point = none" in out

    def test_report_reproducible(self, tmp_path, capsys):
        argv = self._inputs(tmp_path) + ["--seed", "7"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        assert capsys.readouterr().out == first

    def test_legacy_only_inputs_fall_to_negligence(self, tmp_path, capsys):
        # With only the weak pipeline available nothing reaches the
        # threshold, the capacity index is 0, and negligence is primary.
        pipelines = write(tmp_path, "pipelines.csv", PIPELINES_CSV)
        props = write(
            tmp_path,
            "props.csv",
            "id,description,weight,threshold,pipelines\n"
            "bid_independence,Bids set independently,1.0,0.7,legacy_actual\n",
        )
        assert main(["classify", "--propositions", props, "--pipelines", pipelines]) == 0
        out = capsys.readouterr().out
        assert "primary = negligence" in out
        assert "point = 0.0000" in out


class TestSimulate:
    def test_eight_rows(self, capsys):
        assert main(["simulate", "--scenario", "appendix_a"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert len(lines) == 9  # header + 2 companies x 4 tasks
        assert lines[0].startswith("company,task")

    def test_identical_bytes_for_fixed_seed(self, capsys):
        assert main(["simulate", "--seed", "7"]) == 0
        first = capsys.readouterr().out
        assert main(["simulate", "--seed", "7"]) == 0
        assert capsys.readouterr().out == first

    def test_summary_appends_capacity(self, capsys):
        assert main(["simulate", "--summary"]) == 0
        out = capsys.readouterr().out
        assert "legacy,0.0000,0.7000" in out
        assert "modern,1.0000,0.7000" in out

    def test_export_corpus(self, tmp_path, capsys):
        target = tmp_path / "corpus.tsv"
        assert main(["simulate", "--export-corpus", str(target)]) == 0
        capsys.readouterr()
        lines = target.read_text().strip().split("\n")
        assert len(lines) == 62

    def test_env_seed_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("EPISTEMIC_LEDGER_SEED", "123")
        assert main(["simulate"]) == 0
        with_env = capsys.readouterr().out
        monkeypatch.delenv("EPISTEMIC_LEDGER_SEED")
        assert main(["simulate", "--seed", "123"]) == 0
        assert capsys.readouterr().out == with_env

    def test_bad_scenario_diagnostic(self, tmp_path, capsys):
        path = write(tmp_path, "broken.scenario", "seed = 1\n???\n")
        assert main(["simulate", "--scenario", path]) == 1
        assert f"{path}:2" in capsys.readouterr().err


class TestSweep:
    def test_sensitivity_flags_crossover(self, capsys):
        assert main(["sweep", "sensitivity", "--eps-grid", "0:0.5:0.01"]) == 0
        out = capsys.readouterr().out
        crossed = [line for line in out.strip().split("\n") if line.endswith(",true")]
        assert len(crossed) == 1
        assert crossed[0].startswith("0.1600,")

    def test_scalability_columns(self, capsys):
        assert main(["sweep", "scalability", "--sizes", "60,500,1000"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "corpus_size,legacy_cost,modern_cost"
        assert len(lines) == 4

    def test_montecarlo_summary(self, capsys):
        assert main(["sweep", "montecarlo", "--runs", "5"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0].startswith("company,task,doctrine,runs,min")
        assert len(lines) == 9

    def test_bad_grid_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "sensitivity", "--eps-grid", "0:2:0.1"])
        assert exc.value.code == 2


class TestPipelinesCsv:
    def test_joint_error_column(self, tmp_path):
        text = (
            "id,kind,expected_cost,eps_ret,eps_gen,eps_ver,joint_error\n"
            "joint,full,1.0,0.5,0.5,0.5,0.123\n"
        )
        (pipeline,) = read_pipelines_csv(write(tmp_path, "joint.csv", text))
        assert pipeline.total_error() == 0.123

    def test_missing_column_rejected(self, tmp_path):
        text = "id,kind,expected_cost\nx,full,1.0\n"
        with pytest.raises(InputError, match="missing column"):
            read_pipelines_csv(write(tmp_path, "cols.csv", text))

    def test_unknown_kind_names_line(self, tmp_path):
        text = PIPELINES_CSV + "weird,quantum,1,0,0,0\n"
        with pytest.raises(InputError, match=":4"):
            read_pipelines_csv(write(tmp_path, "kind.csv", text))
