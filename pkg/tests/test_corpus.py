"""Corpus loading, tokenization and validation tests."""

import json

import pytest
from hypothesis import given, strategies as st

from reflectsum.corpus import (CorpusStats, DuplicateKey, EmptyCorpus, MalformedRecord,
                               OrphanColor, ResponseRef, SpanOutOfBounds, corpus_stats,
                               load_corpus, save_corpus, tokenize)

from conftest import toy_corpus_paths, write_corpus


class TestTokenize:
    def test_empty_input(self):
        assert tokenize("") == []

    def test_simple_words(self):
        tokens = tokenize("central limit teorem")
        assert [t.raw for t in tokens] == ["central", "limit", "teorem"]
        assert [t.stem for t in tokens] == ["central", "limit", "teorem"]

    def test_hyphen_kept_punctuation_split(self):
        tokens = tokenize("Q-q plot?")
        assert [t.raw for t in tokens] == ["Q-q", "plot", "?"]
        assert [t.lower for t in tokens] == ["q-q", "plot", "?"]

    def test_leading_and_trailing_punctuation(self):
        tokens = tokenize("(CLT)., ok")
        assert [t.raw for t in tokens] == ["(", "CLT", ")", ".", ",", "ok"]

    def test_offsets_point_into_source(self):
        text = "  The q-q plot,  was fine. "
        for t in tokenize(text):
            assert text[t.char_start:t.char_end] == t.raw

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=80))
    def test_offsets_reconstruct_text_without_whitespace(self, text):
        tokens = tokenize(text)
        rebuilt = "".join(t.raw for t in tokens)
        assert rebuilt == "".join(ch for ch in text if not ch.isspace())
        starts = [t.char_start for t in tokens]
        assert starts == sorted(starts)
        for t in tokens:
            assert t.char_start < t.char_end
        for a, b in zip(tokens, tokens[1:]):
            assert a.char_end <= b.char_start

    def test_deterministic(self):
        text = "Central Limit Thm, again!"
        assert tokenize(text) == tokenize(text)


class TestLoadCorpus:
    def test_minimal_corpus_counts(self, tmp_path):
        paths = write_corpus(
            tmp_path,
            responses=[
                {"course_id": "C", "lecture_id": "L1", "prompt": "interesting",
                 "student_id": "s1", "text": "the bootstrap demo"},
                {"course_id": "C", "lecture_id": "L1", "prompt": "interesting",
                 "student_id": "s2", "text": "bootstrap resampling"},
            ],
            annotations=[
                {"lecture_id": "L1", "prompt": "interesting", "annotator_id": "a1",
                 "summary": [{"text": "bootstrap", "color": "y", "supporters": 2}],
                 "highlights": [
                     {"student_id": "s1", "start": 1, "end": 2, "color": "y"},
                     {"student_id": "s2", "start": 0, "end": 1, "color": "y"}]},
            ])
        corpus = load_corpus(*paths)
        assert corpus.course_id == "C"
        assert corpus.lectures() == ["L1"]
        assert len(corpus.cell_responses("L1", "interesting")) == 2
        assert len(corpus.annotations) == 1
        ann = corpus.annotations[("L1", "interesting", "a1")]
        assert len(ann.highlights) == 2
        assert ann.summary[0].supporters == 2

    def test_span_out_of_bounds(self, tmp_path):
        paths = write_corpus(
            tmp_path,
            responses=[{"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
                        "student_id": "s1", "text": "two words"}],
            annotations=[{"lecture_id": "L1", "prompt": "confusing", "annotator_id": "a1",
                          "summary": [{"text": "x", "color": "y", "supporters": 1}],
                          "highlights": [{"student_id": "s1", "start": 0, "end": 3,
                                          "color": "y"}]}])
        with pytest.raises(SpanOutOfBounds):
            load_corpus(*paths)

    def test_orphan_color_rejected(self, tmp_path):
        paths = write_corpus(
            tmp_path,
            responses=[{"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
                        "student_id": "s1", "text": "two words"}],
            annotations=[{"lecture_id": "L1", "prompt": "confusing", "annotator_id": "a1",
                          "summary": [{"text": "x", "color": "y", "supporters": 1}],
                          "highlights": [{"student_id": "s1", "start": 0, "end": 1,
                                          "color": "not-in-summary"}]}])
        with pytest.raises(OrphanColor):
            load_corpus(*paths)

    def test_duplicate_response_rejected(self, tmp_path):
        row = {"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
               "student_id": "s1", "text": "two words"}
        paths = write_corpus(tmp_path, responses=[row, row], annotations=[])
        with pytest.raises(DuplicateKey):
            load_corpus(*paths)

    def test_bad_json_reports_line_number(self, tmp_path):
        responses = tmp_path / "responses.jsonl"
        responses.write_text('{"course_id": "C"}\nnot json\n')
        annotations = tmp_path / "annotations.jsonl"
        annotations.write_text("")
        with pytest.raises(MalformedRecord) as err:
            load_corpus(responses, annotations)
        assert "line" in str(err.value)

    def test_unknown_fields_warned_not_fatal(self, tmp_path, caplog):
        paths = write_corpus(
            tmp_path,
            responses=[{"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
                        "student_id": "s1", "text": "two words", "extra": 1}],
            annotations=[])
        with caplog.at_level("WARNING"):
            corpus = load_corpus(*paths)
        assert len(corpus.cell_responses("L1", "confusing")) == 1
        assert any("extra" in rec.message for rec in caplog.records)

    def test_supporter_mismatch_is_warning(self, tmp_path, caplog):
        paths = write_corpus(
            tmp_path,
            responses=[{"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
                        "student_id": "s1", "text": "two words"}],
            annotations=[{"lecture_id": "L1", "prompt": "confusing", "annotator_id": "a1",
                          "summary": [{"text": "x", "color": "y", "supporters": 5}],
                          "highlights": [{"student_id": "s1", "start": 0, "end": 1,
                                          "color": "y"}]}])
        with caplog.at_level("WARNING"):
            corpus = load_corpus(*paths)
        ann = corpus.annotations[("L1", "confusing", "a1")]
        assert ann.summary[0].supporters == 5  # asserted integer is trusted
        assert any("does not match" in rec.message for rec in caplog.records)

    def test_pos_and_chunk_tags_ingested(self, tmp_path):
        paths = write_corpus(
            tmp_path,
            responses=[{"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
                        "student_id": "s1", "text": "the plot",
                        "tokens": [{"text": "the", "pos": "DT", "chunk": "B-NP"},
                                   {"text": "plot", "pos": "NN", "chunk": "I-NP"}]}],
            annotations=[])
        resp = load_corpus(*paths).response(ResponseRef("s1", "L1", "confusing"))
        assert [t.pos for t in resp.tokens] == ["DT", "NN"]
        assert [t.chunk for t in resp.tokens] == ["B-NP", "I-NP"]
        assert [(t.char_start, t.char_end) for t in resp.tokens] == [(0, 3), (4, 8)]


class TestRoundTrip:
    def test_toy_corpus_round_trips(self, tmp_path):
        corpus = load_corpus(*toy_corpus_paths())
        out_resp = tmp_path / "responses.jsonl"
        out_ann = tmp_path / "annotations.jsonl"
        save_corpus(corpus, out_resp, out_ann)
        again = load_corpus(out_resp, out_ann)
        assert again == corpus


class TestCorpusStats:
    def test_single_cell_arithmetic(self, tmp_path):
        paths = write_corpus(
            tmp_path,
            responses=[{"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
                        "student_id": s, "text": "two words"} for s in ("s1", "s2", "s3")],
            annotations=[])
        stats = corpus_stats(load_corpus(*paths))
        assert stats == CorpusStats(n_cells=1, mean_responses=3, mean_words=6,
                                    mean_words_per_response=2.0, mean_highlights=0.0)

    def test_empty_corpus_raises(self, tmp_path):
        paths = write_corpus(tmp_path, responses=[], annotations=[])
        with pytest.raises(EmptyCorpus):
            corpus_stats(load_corpus(*paths))
