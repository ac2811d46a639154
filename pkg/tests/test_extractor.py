"""Feature templates, training-sequence construction and phrase decoding."""

import numpy as np
import pytest

from reflectsum.corpus import Response, ResponseRef, make_token, tokenize
from reflectsum.extractor import (CellContext, FeatureAlphabet, Featurizer,
                                  MalformedLabels, MissingChunkTags,
                                  OverlappingHighlightsSameAnnotator, STOPWORDS,
                                  build_training_sequences, decode_phrases,
                                  encode_labels, evaluate_extraction, gold_phrases,
                                  np_chunk_baseline, phrase_from_span)

from conftest import write_corpus
from reflectsum.corpus import load_corpus


def make_response(text, lecture="L1", prompt="confusing", student="s1", chunks=None):
    tokens = tokenize(text)
    if chunks is not None:
        tokens = [make_token(t.raw, t.char_start, t.char_end, chunk=c)
                  for t, c in zip(tokens, chunks)]
    return Response(student_id=student, lecture_id=lecture, prompt_kind=prompt,
                    tokens=tuple(tokens), text=text)


class TestFeaturizer:
    def _context(self, responses, prompt="confusing"):
        return CellContext.from_responses(responses, prompt)

    def test_boundary_sentinels_on_single_token(self):
        resp = make_response("bootstrap")
        alphabet = FeatureAlphabet()
        fv = Featurizer(alphabet).featurize(resp.tokens, 0, self._context([resp]))
        names = set(alphabet.names())
        assert "w[-2]=<s>|<s>|bootstrap" in names
        assert "w[-1]=<s>|bootstrap|</s>" in names
        assert "w[0]=bootstrap|</s>|</s>" in names
        assert len(fv.ids) == len(set(fv.ids.tolist()))

    def test_most_frequent_word_has_rank_one(self):
        cell = [make_response("plot plot plot demo"), make_response("demo", student="s2")]
        context = self._context(cell)
        alphabet = FeatureAlphabet()
        featurizer = Featurizer(alphabet)
        fv = featurizer.featurize(cell[0].tokens, 0, context)
        by_name = {alphabet.intern(n): n for n in alphabet.names()}
        pairs = {by_name[fid]: val for fid, val in fv.pairs()}
        assert pairs["g:rank"] == 1.0
        assert pairs["g:count"] == 3.0
        fv2 = featurizer.featurize(cell[0].tokens, 3, context)
        pairs2 = {by_name[fid]: val for fid, val in fv2.pairs() if fid in by_name}
        assert pairs2["g:rank"] == 2.0
        assert pairs2["g:count"] == 2.0

    def test_stopword_indicator(self):
        assert "the" in STOPWORDS
        resp = make_response("the plot")
        alphabet = FeatureAlphabet()
        featurizer = Featurizer(alphabet)
        fv = featurizer.featurize(resp.tokens, 0, self._context([resp]))
        names = [n for n in alphabet.names()]
        assert "stopword" in names
        stop_id = alphabet.intern("stopword")
        assert stop_id in fv.ids.tolist()
        fv2 = featurizer.featurize(resp.tokens, 1, self._context([resp]))
        assert stop_id not in fv2.ids.tolist()

    def test_prompt_membership_indicator(self):
        resp = make_response("confusing part", prompt="confusing")
        alphabet = FeatureAlphabet()
        featurizer = Featurizer(alphabet)
        fv = featurizer.featurize(resp.tokens, 0, self._context([resp]))
        assert alphabet.intern("in_prompt") in fv.ids.tolist()

    def test_missing_tags_use_placeholder(self):
        resp = make_response("plot demo")
        alphabet = FeatureAlphabet()
        Featurizer(alphabet).featurize(resp.tokens, 0, self._context([resp]))
        assert any(n.startswith("p[") and "NONE" in n for n in alphabet.names())

    def test_frozen_alphabet_drops_unseen(self):
        resp = make_response("plot demo")
        alphabet = FeatureAlphabet()
        featurizer = Featurizer(alphabet)
        featurizer.featurize(resp.tokens, 0, self._context([resp]))
        alphabet.freeze()
        other = make_response("brand new words entirely", student="s2")
        fv = featurizer.featurize(other.tokens, 0, self._context([other]))
        known = set(range(len(alphabet)))
        assert set(fv.ids.tolist()) <= known


class TestTrainingSequences:
    def _corpus(self, tmp_path, highlights_by_annotator):
        responses = [{"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
                      "student_id": "s1", "text": "the central limit and normal approximations"}]
        annotations = []
        for annotator, highlights in highlights_by_annotator.items():
            annotations.append({
                "lecture_id": "L1", "prompt": "confusing", "annotator_id": annotator,
                "summary": [{"text": "x", "color": c, "supporters": 1}
                            for c in {h["color"] for h in highlights}],
                "highlights": [dict(h, student_id="s1") for h in highlights]})
        return load_corpus(*write_corpus(tmp_path, responses, annotations))

    def test_identical_highlights_collapse_to_one_instance(self, tmp_path):
        corpus = self._corpus(tmp_path, {
            "a1": [{"start": 4, "end": 6, "color": "b"}],
            "a2": [{"start": 4, "end": 6, "color": "z"}]})
        sequences = build_training_sequences(corpus)
        assert len(sequences) == 1
        assert sequences[0].labels == ("O", "O", "O", "O", "B", "I")

    def test_zero_highlights_yield_all_o(self, tmp_path):
        corpus = self._corpus(tmp_path, {})
        sequences = build_training_sequences(corpus)
        assert len(sequences) == 1
        assert set(sequences[0].labels) == {"O"}

    def test_partial_overlap_splits_instances(self, tmp_path):
        corpus = self._corpus(tmp_path, {
            "a1": [{"start": 1, "end": 3, "color": "y"},
                   {"start": 4, "end": 6, "color": "b"}],
            "a2": [{"start": 0, "end": 3, "color": "q"}]})
        sequences = build_training_sequences(corpus)
        assert len(sequences) == 2
        labelings = {seq.labels for seq in sequences}
        # both configurations keep the non-conflicting blue span
        assert ("O", "B", "I", "O", "B", "I") in labelings
        assert ("B", "I", "I", "O", "B", "I") in labelings

    def test_same_annotator_overlap_rejected(self, tmp_path):
        corpus = self._corpus(tmp_path, {
            "a1": [{"start": 1, "end": 3, "color": "y"},
                   {"start": 2, "end": 4, "color": "b"}]})
        with pytest.raises(OverlappingHighlightsSameAnnotator):
            build_training_sequences(corpus)

    def test_toy_corpus_counts(self, toy_corpus):
        sequences = build_training_sequences(toy_corpus)
        n_responses = sum(len(cell) for cell in toy_corpus.responses.values())
        assert len(sequences) >= n_responses
        golds = gold_phrases(toy_corpus)
        assert len({(g.response_ref, g.span) for g in golds}) == len(golds)


class TestDecodePhrases:
    def test_worked_example(self):
        resp = make_response("The central limit and normal approximations")
        phrases = decode_phrases(resp, ("B", "I", "I", "O", "B", "I"))
        assert [p.text for p in phrases] == ["The central limit", "normal approximations"]

    def test_all_o(self):
        resp = make_response("nothing here")
        assert decode_phrases(resp, ("O", "O")) == []

    def test_adjacent_b_starts_new_phrase(self):
        resp = make_response("alpha beta")
        phrases = decode_phrases(resp, ("B", "B"))
        assert [p.text for p in phrases] == ["alpha", "beta"]

    def test_malformed_labels_rejected(self):
        resp = make_response("alpha beta")
        with pytest.raises(MalformedLabels):
            decode_phrases(resp, ("O", "I"))
        with pytest.raises(MalformedLabels):
            decode_phrases(resp, ("I", "O"))

    def test_decode_inverts_encode(self):
        resp = make_response("one two three four five six")
        for spans in ([(0, 2), (3, 4)], [(0, 1), (1, 3), (5, 6)], [], [(0, 6)]):
            labels = encode_labels(spans, 6)
            decoded = decode_phrases(resp, labels)
            assert [(p.start, p.end) for p in decoded] == sorted(spans)


class TestNpChunkBaseline:
    def test_np_runs_extracted(self):
        resp = make_response("the plot was", chunks=["B-NP", "I-NP", "O"])
        phrases = np_chunk_baseline(resp)
        assert [p.text for p in phrases] == ["the plot"]

    def test_no_np_chunks(self):
        resp = make_response("was confusing", chunks=["O", "O"])
        assert np_chunk_baseline(resp) == []

    def test_adjacent_nps_split_on_b(self):
        resp = make_response("the plot the demo",
                             chunks=["B-NP", "I-NP", "B-NP", "I-NP"])
        phrases = np_chunk_baseline(resp)
        assert [p.text for p in phrases] == ["the plot", "the demo"]

    def test_missing_chunk_tags_raise(self):
        resp = make_response("the plot")
        with pytest.raises(MissingChunkTags):
            np_chunk_baseline(resp)


class TestEvaluateExtraction:
    def test_perfect_match(self):
        resp = make_response("alpha beta gamma")
        gold = [phrase_from_span(resp, 0, 2)]
        score = evaluate_extraction(gold, gold)
        assert (score.p, score.r, score.f) == (1.0, 1.0, 1.0)

    def test_off_by_one_span_is_miss(self):
        resp = make_response("alpha beta gamma")
        predicted = [phrase_from_span(resp, 0, 3)]
        gold = [phrase_from_span(resp, 0, 2)]
        score = evaluate_extraction(predicted, gold)
        assert score.p == 0.0 and score.r == 0.0 and score.f == 0.0
