"""Cross-validation harness: fold isolation, determinism, variants, reports."""

import dataclasses
import json

import pytest

from conftest import write_corpus
from reflectsum.corpus import load_corpus
from reflectsum.extractor import CrfConfig
from reflectsum.pipeline import (PipelineConfig, VARIANTS, crossval_extraction,
                                 crossval_pairs, crossval_purity, load_resources,
                                 parse_markdown, render_markdown, render_tsv,
                                 report, report_rows, run_crossval, score_summary,
                                 summarize, train_models)
from reflectsum.similarity import SimConfig
import reflectsum.pipeline as pipeline_module


FAST = dict(extractor=CrfConfig(max_iterations=40),
            similarity=SimConfig(epochs=30), community_trials=4, lsa_dim=20)


@pytest.fixture(scope="module")
def toy():
    from conftest import toy_corpus_paths
    return load_corpus(*toy_corpus_paths())


@pytest.fixture(scope="module")
def toy_result(toy):
    config = PipelineConfig(seed=3, **FAST)
    return run_crossval(toy, config,
                        variants=("lexrank_baseline", "phrasesum_np", "cdsum"))


class TestConfig:
    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            PipelineConfig(variant="nonsense")

    def test_seed_fans_out_per_stage(self):
        config = PipelineConfig(seed=100)
        seeds = {stage: config.stage_seed(stage)
                 for stage in ("extractor", "similarity", "lsa", "clustering",
                               "kmedoids")}
        assert len(set(seeds.values())) == 5
        assert seeds["extractor"] == 100

    def test_from_dict_round_trip(self, tmp_path):
        raw = {"variant": "simsum", "seed": 9,
               "extractor": {"l2_sigma": 2.0, "max_iterations": 50},
               "similarity": {"c": 0.5}, "paths": {"vectors": "v.txt"},
               "mystery": 1}
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw))
        config = PipelineConfig.from_json(path)
        assert config.variant == "simsum"
        assert config.extractor.l2_sigma == 2.0
        assert config.similarity.c == 0.5
        assert config.paths.vectors == "v.txt"


class TestSummarize:
    def _tiny(self, tmp_path):
        responses = [
            {"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
             "student_id": "s1", "text": "CLT was hard"},
            {"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
             "student_id": "s2", "text": "CLT again"},
            {"course_id": "C", "lecture_id": "L2", "prompt": "confusing",
             "student_id": "s1", "text": "CLT"},
        ]
        annotations = [
            {"lecture_id": "L1", "prompt": "confusing", "annotator_id": "a1",
             "summary": [{"text": "CLT", "color": "y", "supporters": 2}],
             "highlights": [{"student_id": "s1", "start": 0, "end": 1, "color": "y"},
                            {"student_id": "s2", "start": 0, "end": 1, "color": "y"}]},
            {"lecture_id": "L2", "prompt": "confusing", "annotator_id": "a1",
             "summary": [{"text": "CLT", "color": "y", "supporters": 1}],
             "highlights": [{"student_id": "s1", "start": 0, "end": 1, "color": "y"}]},
        ]
        return load_corpus(*write_corpus(tmp_path, responses, annotations))

    def test_single_response_singleton_bullet(self, tmp_path):
        corpus = self._tiny(tmp_path)
        config = PipelineConfig(seed=1, variant="cdsum", **FAST)
        resources = load_resources(config, corpus)
        models = train_models(corpus.without_lecture("L2"), config, resources,
                              ("cdsum",))
        summary = summarize(corpus, "L2", "confusing", models, config)
        assert len(summary.entries) == 1
        assert summary.entries[0].phrase.text == "CLT"
        assert summary.entries[0].supporters == 1

    def test_missing_cell_gives_empty_summary(self, tmp_path):
        corpus = self._tiny(tmp_path)
        config = PipelineConfig(seed=1, variant="lexrank_baseline", **FAST)
        models = train_models(corpus, config, load_resources(config, corpus),
                              ("lexrank_baseline",))
        summary = summarize(corpus, "L2", "interesting", models, config)
        assert summary.entries == ()


class TestCrossval:
    def test_two_lecture_minimum(self, tmp_path):
        corpus = load_corpus(*write_corpus(
            tmp_path,
            responses=[{"course_id": "C", "lecture_id": "L1",
                        "prompt": "confusing", "student_id": "s1",
                        "text": "only one lecture"}],
            annotations=[]))
        with pytest.raises(ValueError):
            run_crossval(corpus, PipelineConfig())

    def test_each_fold_trains_without_held_out_lecture(self, toy, monkeypatch):
        seen = {}
        original = pipeline_module.train_models

        def recording(corpus, config, resources, variants=()):
            seen[tuple(sorted(set(corpus.lectures())))] = {
                key[0] for key in corpus.annotations}
            return original(corpus, config, resources, variants)

        monkeypatch.setattr(pipeline_module, "train_models", recording)
        config = PipelineConfig(seed=0, **FAST)
        run_crossval(toy, config, variants=("sequencesum",))
        assert len(seen) == 3
        for lectures, annotation_lectures in seen.items():
            missing = set(toy.lectures()) - set(lectures)
            assert len(missing) == 1
            held_out = missing.pop()
            assert held_out not in annotation_lectures

    def test_fold_results_cover_all_variants(self, toy_result):
        for fold in toy_result.folds:
            systems = {system for system, _ in fold.summaries}
            assert systems == {"lexrank_baseline", "phrasesum_np", "cdsum"}
            for key, summary in fold.summaries.items():
                assert len(summary.entries) <= 5

    def test_deterministic_reports(self, toy):
        config = PipelineConfig(seed=3, **FAST)
        first = report(run_crossval(toy, config, variants=("cdsum",)), "tsv")
        second = report(run_crossval(toy, config, variants=("cdsum",)), "tsv")
        assert first == second

    def test_jobs_parallelism_matches_serial(self, toy):
        config = PipelineConfig(seed=5, **FAST)
        serial = report(run_crossval(toy, config, variants=("sequencesum",),
                                     jobs=1), "tsv")
        threaded = report(run_crossval(toy, config, variants=("sequencesum",),
                                       jobs=3), "tsv")
        assert serial == threaded

    def test_skips_phrasesum_np_without_chunk_tags(self, tmp_path, caplog):
        responses, annotations = [], []
        for lecture in ("L1", "L2"):
            for student in ("s1", "s2", "s3"):
                responses.append({"course_id": "C", "lecture_id": lecture,
                                  "prompt": "confusing", "student_id": student,
                                  "text": "the central limit theorem"})
            annotations.append(
                {"lecture_id": lecture, "prompt": "confusing",
                 "annotator_id": "a1",
                 "summary": [{"text": "central limit theorem", "color": "y",
                              "supporters": 2}],
                 "highlights": [
                     {"student_id": "s1", "start": 1, "end": 4, "color": "y"},
                     {"student_id": "s2", "start": 1, "end": 4, "color": "y"}]})
        corpus = load_corpus(*write_corpus(tmp_path, responses, annotations))
        config = PipelineConfig(seed=2, **FAST)
        with caplog.at_level("WARNING"):
            result = run_crossval(corpus, config, variants=("phrasesum_np",))
        assert all(not fold.summaries for fold in result.folds)
        assert any("chunk tags" in rec.message for rec in caplog.records)


class TestIntrinsics:
    def test_extraction_scores_shape(self, toy):
        scores = crossval_extraction(toy, PipelineConfig(seed=1, **FAST))
        assert set(scores) == {"sequence_labeling", "np_chunks"}
        for score in scores.values():
            assert 0.0 <= score.f <= 1.0

    def test_pair_scores_shape(self, toy):
        scores = crossval_pairs(toy, PipelineConfig(seed=1, **FAST))
        assert set(scores) == {"similarity_learning", "lsa_baseline"}
        for score in scores.values():
            assert 0.0 <= score.f <= 1.0

    def test_purity_comparison_shape(self, toy):
        scores = crossval_purity(toy, PipelineConfig(seed=1, **FAST))
        assert set(scores) == {"community_detection", "kmedoids"}
        for value in scores.values():
            assert 0.0 <= value <= 1.0


class TestReport:
    def test_markdown_round_trips_tsv_values(self, toy_result):
        rows = report_rows(toy_result)
        tsv_lines = render_tsv(rows).strip().splitlines()
        md_rows = parse_markdown(render_markdown(rows))
        assert len(md_rows) == len(tsv_lines) - 1
        for md, line in zip(md_rows, tsv_lines[1:]):
            cells = line.split("\t")
            assert [md[c] for c in ("course", "lecture", "prompt", "system",
                                    "metric", "P", "R", "F")] == cells

    def test_three_decimal_formatting(self, toy_result):
        text = report(toy_result, "tsv")
        for line in text.strip().splitlines()[1:]:
            p, r, f = line.split("\t")[5:8]
            assert len(p.split(".")[1]) == 3
            assert len(r.split(".")[1]) == 3

    def test_json_format(self, toy_result):
        parsed = json.loads(report(toy_result, "json"))
        assert parsed and {"course", "lecture", "prompt", "system", "metric",
                           "P", "R", "F"} == set(parsed[0])

    def test_identical_scores_never_marked(self, toy_result):
        # markers require a non-degenerate t-test at p < 0.05
        rows = [r for r in report_rows(toy_result) if r.lecture == "ALL"]
        baseline_rows = {r.metric: r for r in rows
                         if r.system == toy_result.variants[0]}
        for row in rows:
            if row.system == toy_result.variants[0]:
                assert row.marker == ""
            elif row.marker == "*":
                assert row.f != baseline_rows[row.metric].f
