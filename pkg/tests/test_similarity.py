"""Similarity metrics, labeled pairs, ensemble training, WordNet Lin."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reflectsum.similarity import (LabeledPair, METRIC_NAMES, PairFeatures,
                                   Resources, SimConfig, SingleClassTrainingSet,
                                   VectorTable, build_pair_training_set,
                                   evaluate_pairs, load_model, load_taxonomy,
                                   lsa_baseline_similar, pair_features,
                                   predict_similar, save_model, train_similarity)
from reflectsum.similarity.model import SimilarityModel, feature_vector


def vec_table(words, dim=3, seed=0):
    rng = np.random.default_rng(seed)
    return VectorTable({w: rng.normal(size=dim) for w in words}, dim)


words = st.lists(st.sampled_from(["central", "limit", "plot", "q-q", "the",
                                  "demo", "sampling", "bootstrap"]),
                 min_size=1, max_size=5)


class TestPairFeatures:
    def test_identity_phrase_scores_one_everywhere(self, tmp_path):
        tokens = ["central", "limit", "theorem"]
        table = vec_table(tokens)
        taxonomy = _toy_taxonomy(tmp_path)
        resources = Resources(vectors=table, lsa=table, taxonomy=taxonomy)
        feats = pair_features(["cat", "plot"], ["cat", "plot"],
                              Resources(vectors=vec_table(["cat", "plot"]),
                                        lsa=vec_table(["cat", "plot"], seed=1),
                                        taxonomy=taxonomy))
        for name in METRIC_NAMES:
            assert getattr(feats, name) == pytest.approx(1.0), name
        assert all(feats.available)
        feats2 = pair_features(tokens, tokens, resources)
        for name, ok in zip(METRIC_NAMES, feats2.available):
            if ok:
                assert getattr(feats2, name) == pytest.approx(1.0)

    def test_dice_hand_case(self):
        feats = pair_features(["central", "limit", "theorem"],
                              ["central", "limit", "thm"])
        assert feats.lexical_overlap == pytest.approx(2 * 2 / (3 + 3))

    def test_disjoint_phrases_zero(self):
        feats = pair_features(["bootstrap"], ["histogram"])
        assert feats.lexical_overlap == 0.0
        assert feats.cosine_tf == 0.0
        assert not feats.available[2]  # no taxonomy configured
        assert feats.lin_taxonomy == 0.0
        assert not feats.available[5] and not feats.available[6]

    def test_out_of_vocabulary_masks_embedding(self):
        table = vec_table(["known"])
        feats = pair_features(["unknown"], ["known"], Resources(vectors=table))
        assert feats.embedding_cosine == 0.0
        assert not feats.available[5]

    @given(a=words, b=words)
    def test_symmetry_and_range(self, a, b):
        fa = pair_features(a, b)
        fb = pair_features(b, a)
        for name in METRIC_NAMES:
            va, vb = getattr(fa, name), getattr(fb, name)
            assert va == pytest.approx(vb)
            assert 0.0 <= va <= 1.0

    @given(a=words)
    def test_self_similarity_is_one(self, a):
        feats = pair_features(a, a)
        for name, ok in zip(METRIC_NAMES, feats.available):
            if ok:
                assert getattr(feats, name) == pytest.approx(1.0)


class TestPairTrainingSet:
    def test_same_color_positive_different_negative(self, toy_corpus):
        pairs = build_pair_training_set(toy_corpus)
        assert pairs
        assert any(p.similar for p in pairs)
        assert any(not p.similar for p in pairs)
        for p in pairs:
            assert p.phrase_a.response_ref.lecture_id == p.lecture_id
            assert p.phrase_b.response_ref.lecture_id == p.lecture_id
        texts = {(p.phrase_a.text.lower(), p.phrase_b.text.lower()): p.similar
                 for p in pairs if p.annotator_id == "a1"
                 and p.lecture_id == "L1" and p.prompt_kind == "confusing"}
        assert texts[("central limit teorem", "Central Limit Thm".lower())] is True
        assert texts[("q-q plot", "sampling distribution")] is False

    def test_single_highlight_yields_no_pairs(self, tmp_path):
        from conftest import write_corpus
        from reflectsum.corpus import load_corpus
        paths = write_corpus(
            tmp_path,
            responses=[{"course_id": "C", "lecture_id": "L1", "prompt": "confusing",
                        "student_id": "s1", "text": "one highlight only"}],
            annotations=[{"lecture_id": "L1", "prompt": "confusing",
                          "annotator_id": "a1",
                          "summary": [{"text": "x", "color": "y", "supporters": 1}],
                          "highlights": [{"student_id": "s1", "start": 0, "end": 2,
                                          "color": "y"}]}])
        assert build_pair_training_set(load_corpus(*paths)) == []


def _separable_data():
    one = PairFeatures(1, 1, 1, 1, 1, 1, 1, available=(True,) * 7)
    zero = PairFeatures(0, 0, 0, 0, 0, 0, 0, available=(True,) * 7)
    phrase = ["word"]
    pairs, feats = [], []
    for i in range(8):
        similar = i % 2 == 0
        pairs.append(LabeledPair(phrase, phrase, similar, "L1", "confusing", "a1"))
        feats.append(one if similar else zero)
    return pairs, feats


class TestTrainSimilarity:
    def test_separable_set_reaches_perfect_accuracy(self):
        pairs, feats = _separable_data()
        model = train_similarity(pairs, feats, SimConfig(epochs=200, seed=3))
        for pair, f in zip(pairs, feats):
            predicted = model.score(f) >= 0.0
            assert predicted == pair.similar

    def test_deterministic(self):
        pairs, feats = _separable_data()
        m1 = train_similarity(pairs, feats, SimConfig(seed=11))
        m2 = train_similarity(pairs, feats, SimConfig(seed=11))
        np.testing.assert_array_equal(m1.weights, m2.weights)
        assert m1.bias == m2.bias

    def test_objective_non_increasing(self):
        pairs, feats = _separable_data()
        model = train_similarity(pairs, feats, SimConfig(epochs=60, seed=5))
        history = model.objective_history
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_single_class_rejected(self):
        pairs, feats = _separable_data()
        positive = [(p, f) for p, f in zip(pairs, feats) if p.similar]
        with pytest.raises(SingleClassTrainingSet):
            train_similarity([p for p, _ in positive], [f for _, f in positive])

    def test_round_trip(self, tmp_path):
        pairs, feats = _separable_data()
        model = train_similarity(pairs, feats, SimConfig(epochs=40, seed=2))
        path = tmp_path / "model.sim"
        save_model(model, path)
        loaded = load_model(path)
        np.testing.assert_array_equal(loaded.weights, model.weights)
        assert loaded.bias == model.bias
        assert loaded.config == model.config


class TestPredict:
    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(4)
        model = SimilarityModel(weights=rng.normal(size=14), bias=0.3,
                                config=SimConfig())
        a, b = ["central", "limit"], ["central", "thm"]
        assert predict_similar(model, a, b).score == pytest.approx(
            predict_similar(model, b, a).score)

    def test_zero_weight_model_says_similar(self):
        model = SimilarityModel(weights=np.zeros(14), bias=0.0, config=SimConfig())
        assert predict_similar(model, ["a"], ["b"]).similar is True

    def test_identity_with_positive_weights(self):
        model = SimilarityModel(weights=np.ones(14), bias=-1.0, config=SimConfig())
        assert predict_similar(model, ["plot"], ["plot"]).similar is True


class TestLsaBaseline:
    def test_identical_in_vocab_phrase(self):
        table = vec_table(["plot", "demo"])
        assert lsa_baseline_similar(table, ["plot", "demo"], ["plot", "demo"], 0.5)

    def test_oov_phrase_is_dissimilar(self):
        table = vec_table(["plot"])
        assert not lsa_baseline_similar(table, ["unknown"], ["plot"], 0.1)


class TestEvaluatePairs:
    def test_perfect_predictions(self):
        pairs, feats = _separable_data()
        model = train_similarity(pairs, feats, SimConfig(epochs=200, seed=3))
        # evaluate via a resources-free path: score features directly
        tp = sum(1 for p, f in zip(pairs, feats)
                 if (model.score(f) >= 0) == p.similar)
        assert tp == len(pairs)

    def test_all_positive_predictions_half_right(self):
        model = SimilarityModel(weights=np.zeros(14), bias=1.0, config=SimConfig())
        phrase_x, phrase_y = ["plot"], ["demo"]
        pairs = [LabeledPair(phrase_x, phrase_y, True, "L1", "confusing", "a1"),
                 LabeledPair(phrase_x, phrase_y, False, "L1", "confusing", "a1")]
        score = evaluate_pairs(model, pairs)
        assert score.p == pytest.approx(0.5)
        assert score.r == pytest.approx(1.0)


# --- WordNet fixture -------------------------------------------------------

def _toy_taxonomy(tmp_path):
    db = tmp_path / "wn"
    db.mkdir(exist_ok=True)
    (db / "data.noun").write_text(
        "  1 license header line\n"
        "00000100 03 n 01 entity 0 000 | that which exists\n"
        "00000200 05 n 01 animal 0 001 @ 00000100 n 0000 | a living organism\n"
        "00000300 05 n 01 cat 0 001 @ 00000200 n 0000 | a small feline\n"
        "00000400 05 n 01 dog 0 001 @ 00000200 n 0000 | a canine\n"
        "00000700 09 n 01 diagram 0 001 @ 00000100 n 0000 | a drawing\n"
        "00000500 09 n 01 plot 0 001 @ 00000700 n 0000 | a chart\n")
    (db / "index.noun").write_text(
        "  1 license header line\n"
        "entity n 1 1 @ 1 0 00000100\n"
        "animal n 1 1 @ 1 0 00000200\n"
        "cat n 1 1 @ 1 0 00000300\n"
        "dog n 1 1 @ 1 0 00000400\n"
        "diagram n 1 1 @ 1 0 00000700\n"
        "plot n 1 1 @ 1 0 00000500\n")
    ic = tmp_path / "ic.dat"
    ic.write_text("100 0.5\n200 2.0\n300 5.0\n400 4.5\n700 1.5\n500 3.0\n")
    return load_taxonomy(str(db), str(ic))


class TestTaxonomy:
    def test_lin_hand_value(self, tmp_path):
        taxonomy = _toy_taxonomy(tmp_path)
        # lcs(cat, dog) = animal with ic 2.0
        assert taxonomy.lin("cat", "dog") == pytest.approx(2 * 2.0 / (5.0 + 4.5))

    def test_same_word_is_one(self, tmp_path):
        taxonomy = _toy_taxonomy(tmp_path)
        assert taxonomy.lin("cat", "cat") == 1.0

    def test_unknown_word_is_none(self, tmp_path):
        taxonomy = _toy_taxonomy(tmp_path)
        assert taxonomy.lin("cat", "bootstrap") is None

    def test_pair_features_uses_content_words(self, tmp_path):
        taxonomy = _toy_taxonomy(tmp_path)
        feats = pair_features(["the", "cat"], ["a", "dog"],
                              Resources(taxonomy=taxonomy))
        assert feats.available[2]
        assert feats.lin_taxonomy == pytest.approx(4.0 / 9.5)

    def test_distant_synsets_score_low(self, tmp_path):
        taxonomy = _toy_taxonomy(tmp_path)
        # lcs(cat, plot) = entity with ic 0.5
        assert taxonomy.lin("cat", "plot") == pytest.approx(2 * 0.5 / (5.0 + 3.0))
