"""Tests for the corpus, searches, verifier, and experiment runners."""

import math

import numpy as np
import pytest

from epistemic_ledger.doctrine import Verdict
from epistemic_ledger.metrics import efficiency
from epistemic_ledger.simlab import (
    LEGACY,
    MODERN,
    ScenarioError,
    SimScenario,
    company_capacity,
    cosine,
    default_scenario,
    embed,
    export_corpus,
    generate_corpus,
    keyword_search,
    load_scenario,
    monte_carlo,
    parse_scenario,
    run_docket,
    scalability_sweep,
    semantic_search,
    sensitivity_sweep,
    simulated_verifier,
)
from epistemic_ledger.simlab.corpus import (
    SIMILARITY_FLOOR,
    TAG_EUPHEMISM,
    TAG_LITERAL,
)

SCENARIO = default_scenario()
SYNONYMS = SCENARIO.synonym_table()


class TestCorpus:
    def test_default_size(self):
        corpus = generate_corpus(SCENARIO, seed=42)
        assert len(corpus) == 62

    def test_every_task_has_ground_truth(self):
        corpus = generate_corpus(SCENARIO, seed=42)
        for task in SCENARIO.tasks:
            assert len(corpus.ground_truth_ids(task.id)) == 2

    def test_euphemism_task_ground_truth_tagged_euphemism_only(self):
        corpus = generate_corpus(SCENARIO, seed=42)
        for task in SCENARIO.tasks:
            for doc_id in corpus.ground_truth_ids(task.id):
                doc = next(d for d in corpus.documents if d.id == doc_id)
                if task.ground_truth == "euphemism":
                    assert TAG_EUPHEMISM in doc.tags and TAG_LITERAL not in doc.tags
                else:
                    assert TAG_LITERAL in doc.tags

    def test_deterministic(self):
        assert generate_corpus(SCENARIO, seed=42) == generate_corpus(SCENARIO, seed=42)
        assert generate_corpus(SCENARIO, seed=42) != generate_corpus(SCENARIO, seed=43)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError, match="ground-truth"):
            generate_corpus(SCENARIO, seed=42, size=5)

    def test_export_format(self):
        corpus = generate_corpus(SCENARIO, seed=42)
        lines = export_corpus(corpus).strip().split("\n")
        assert len(lines) == 62
        assert all(len(line.split("\t")) == 4 for line in lines)


class TestEmbed:
    def test_identical_text_identical_vector(self):
        a = embed("the quarterly report was filed", SYNONYMS)
        b = embed("the quarterly report was filed", SYNONYMS)
        assert cosine(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_euphemism_maps_to_concept(self):
        sim = cosine(embed("market harmony", SYNONYMS), embed("price fixing", SYNONYMS))
        assert sim > SIMILARITY_FLOOR

    def test_disjoint_vocabulary_is_orthogonal(self):
        sim = cosine(embed("granite willow copper"), embed("orchid maple fern"))
        assert sim == 0.0

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            embed("   ")


class TestKeywordSearch:
    CORPUS = generate_corpus(SCENARIO, seed=42)

    def test_literal_keywords_hit_ground_truth(self):
        task = SCENARIO.tasks[0]  # literal ground truth
        hits, cost = keyword_search(self.CORPUS, task.keywords, SCENARIO.c_per_doc)
        assert self.CORPUS.ground_truth_ids(task.id) <= set(hits)
        assert cost == pytest.approx(SCENARIO.c_per_doc * 62)

    def test_euphemistic_ground_truth_missed(self):
        task = SCENARIO.tasks[2]  # regional_pricing, euphemism ground truth
        hits, _ = keyword_search(self.CORPUS, task.keywords, SCENARIO.c_per_doc)
        assert not (self.CORPUS.ground_truth_ids(task.id) & set(hits))

    def test_empty_keywords_rejected(self):
        with pytest.raises(ValueError):
            keyword_search(self.CORPUS, [], SCENARIO.c_per_doc)

    def test_phrase_must_match_contiguously(self):
        # "rate failure" reverses the phrase tokens; nothing should match it
        # even though both words appear in the ground-truth documents.
        hits, _ = keyword_search(self.CORPUS, ["rate failure"], SCENARIO.c_per_doc)
        assert hits == ()


class TestSemanticSearch:
    CORPUS = generate_corpus(SCENARIO, seed=42)

    def test_finds_ground_truth_for_every_task(self):
        for task in SCENARIO.tasks:
            hits, cost = semantic_search(
                self.CORPUS,
                task.concept_query,
                SCENARIO.retrieval_k,
                SCENARIO.modern_a,
                SCENARIO.modern_b,
                SYNONYMS,
            )
            assert self.CORPUS.ground_truth_ids(task.id) <= set(hits)
            assert cost == pytest.approx(SCENARIO.modern_a + SCENARIO.modern_b * math.log(62))

    def test_k_equal_corpus_returns_all(self):
        hits, _ = semantic_search(
            self.CORPUS, "anything at all", 62, 0.41, 0.40, SYNONYMS
        )
        assert len(hits) == 62

    def test_k_above_corpus_clamped(self):
        hits, _ = semantic_search(
            self.CORPUS, "anything at all", 500, 0.41, 0.40, SYNONYMS
        )
        assert len(hits) == 62

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            semantic_search(self.CORPUS, "x", 0, 0.41, 0.40, SYNONYMS)


class TestSimulatedVerifier:
    GT = frozenset({"doc-0000"})

    def test_zero_error_returns_truth(self):
        rng = np.random.default_rng(1)
        verdict = simulated_verifier(["doc-0000"], self.GT, Verdict.REFUTED, 0.0, rng)
        assert verdict is Verdict.REFUTED

    def test_certain_error_always_wrong(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            verdict = simulated_verifier(
                ["doc-0000"], self.GT, Verdict.ESTABLISHED, 1.0, rng
            )
            assert verdict is Verdict.REFUTED

    def test_missing_ground_truth_is_inconclusive(self):
        rng = np.random.default_rng(1)
        verdict = simulated_verifier(["doc-0099"], self.GT, Verdict.ESTABLISHED, 0.0, rng)
        assert verdict is Verdict.INCONCLUSIVE

    def test_error_frequency(self):
        rng = np.random.default_rng(7)
        trials = 10_000
        wrong = sum(
            simulated_verifier(["doc-0000"], self.GT, Verdict.ESTABLISHED, 0.3, rng)
            is Verdict.REFUTED
            for _ in range(trials)
        )
        assert wrong / trials == pytest.approx(0.3, abs=0.01)


class TestRunDocket:
    ROWS = run_docket(SCENARIO)

    def test_eight_rows(self):
        assert len(self.ROWS) == 8

    def test_errors_are_binary(self):
        for row in self.ROWS:
            assert row.eps_ret in (0.0, 1.0)
            assert row.eps_ver in (0.0, 1.0)
            assert row.eps_tot in (0.0, 1.0)

    def test_modern_retrieves_everything(self):
        assert all(r.eps_ret == 0.0 for r in self.ROWS if r.company == MODERN)

    def test_legacy_misses_exactly_the_euphemism_tasks(self):
        euphemistic = {t.id for t in SCENARIO.tasks if t.ground_truth == "euphemism"}
        for row in self.ROWS:
            if row.company == LEGACY:
                assert row.eps_ret == (1.0 if row.task_id in euphemistic else 0.0)

    def test_scores_delegate_to_pipeline_scorer(self):
        for row in self.ROWS:
            expected = efficiency(row.simulated_time, SCENARIO.policy.tau_star) * (
                1.0 - row.eps_tot
            )
            assert row.score == pytest.approx(expected, abs=1e-12)

    def test_deterministic(self):
        assert run_docket(SCENARIO) == self.ROWS

    def test_capacities(self):
        assert company_capacity(SCENARIO, self.ROWS, MODERN) == 1.0
        assert company_capacity(SCENARIO, self.ROWS, LEGACY) == 0.0

    def test_retrieval_pattern_survives_a_larger_corpus(self):
        # Five times the distractors must not perturb what either search
        # finds; only the simulated times (and so the scores) move.
        import dataclasses

        big = dataclasses.replace(SCENARIO, corpus_size=300)
        rows = run_docket(big)
        euphemistic = {t.id for t in big.tasks if t.ground_truth == "euphemism"}
        for row in rows:
            if row.company == MODERN:
                assert row.eps_ret == 0.0 and row.eps_ver == 0.0
            else:
                assert row.eps_ret == (1.0 if row.task_id in euphemistic else 0.0)
        assert company_capacity(big, rows, MODERN) == 1.0
        assert company_capacity(big, rows, LEGACY) == 0.0


class TestMonteCarlo:
    def test_zero_jitter_collapses(self):
        result = monte_carlo(SCENARIO, runs=3, jitter_sigma=0.0)
        for cell in result.cells:
            assert len(set(cell.scores)) == 1

    def test_jitter_moves_times_but_never_flips_errors(self):
        result = monte_carlo(SCENARIO, runs=10)
        for cell in result.cells:
            if cell.company == MODERN:
                assert all(s > 0.8 for s in cell.scores)
            elif cell.task_id in ("screening_bias", "regional_pricing"):
                assert all(s == 0.0 for s in cell.scores)
            else:
                assert all(0.55 < s < 0.7 for s in cell.scores)

    def test_reproducible(self):
        assert monte_carlo(SCENARIO, runs=5) == monte_carlo(SCENARIO, runs=5)

    def test_runs_validated(self):
        with pytest.raises(ValueError):
            monte_carlo(SCENARIO, runs=0)


class TestScalability:
    def test_shape_of_curves(self):
        points = scalability_sweep(SCENARIO, [60, 200, 1000])
        legacy = [p.legacy_cost for p in points]
        modern = [p.modern_cost for p in points]
        assert legacy == sorted(legacy)
        assert modern == sorted(modern)
        # Legacy grows roughly 16x over this span, modern stays near flat.
        assert legacy[-1] / legacy[0] > 10
        assert modern[-1] / modern[0] < 2

    def test_sizes_must_ascend(self):
        with pytest.raises(ValueError):
            scalability_sweep(SCENARIO, [100, 60])

    def test_deterministic(self):
        assert scalability_sweep(SCENARIO, [60, 1000]) == scalability_sweep(
            SCENARIO, [60, 1000]
        )


class TestSensitivity:
    def test_zero_error_matches_docket_score(self):
        curve = sensitivity_sweep(SCENARIO, [0.0])
        assert curve.points[0].score == pytest.approx(0.83, abs=0.005)

    def test_half_error_halves_score(self):
        curve = sensitivity_sweep(SCENARIO, [0.0, 0.5])
        assert curve.points[1].score == pytest.approx(0.415, abs=0.01)

    def test_crossing_reported(self):
        grid = [round(0.01 * i, 10) for i in range(51)]
        curve = sensitivity_sweep(SCENARIO, grid)
        assert curve.first_crossing == pytest.approx(0.16)

    def test_grid_validated(self):
        with pytest.raises(ValueError):
            sensitivity_sweep(SCENARIO, [0.2, 1.5])


class TestScenarioParsing:
    def test_default_scenario_loads(self):
        assert SCENARIO.corpus_size == 62
        assert len(SCENARIO.tasks) == 4
        assert SCENARIO.policy.theta_c == 0.7

    def test_load_by_path(self, tmp_path):
        from importlib import resources

        text = (
            resources.files("epistemic_ledger.simlab")
            .joinpath("data", "appendix_a.scenario")
            .read_text()
        )
        path = tmp_path / "copy.scenario"
        path.write_text(text)
        assert load_scenario(path) == SCENARIO

    def test_unknown_scenario(self):
        with pytest.raises(ScenarioError):
            load_scenario("no_such_scenario")

    def test_malformed_line_reports_position(self):
        with pytest.raises(ScenarioError, match=r"bad\.scenario:2"):
            parse_scenario("seed = 1\nnot a kv line\n", "bad.scenario")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ScenarioError, match="duplicate"):
            parse_scenario("seed = 1\nseed = 2\n", "dup.scenario")

    def test_bad_number_reports_line(self):
        text = "seed = 1\n[corpus]\nsize = sixty\n"
        with pytest.raises(ScenarioError, match=r":3"):
            parse_scenario(text, "num.scenario")

    def test_missing_task_key_rejected(self):
        text = "[task.t1]\ndoctrine = x\n"
        with pytest.raises(ScenarioError, match="missing key"):
            parse_scenario(text, "short.scenario")

    def test_truth_vocabulary(self):
        text = (
            "[task.t1]\nproposition = p\ntruth = maybe\nkeywords = k\n"
            "concept_query = q\nground_truth = literal\nliteral_phrases = k\n"
        )
        with pytest.raises(ScenarioError, match="established or refuted"):
            parse_scenario(text, "verdict.scenario")
