"""End-to-end phrase extraction: corpus in, candidate phrases out."""

from __future__ import annotations

import numpy as np

from ..corpus import ReflectionCorpus
from .crf import (LABELS, CrfConfig, CrfModel, TrainingSequence, train_crf, viterbi)
from .features import CellContext, FeatureAlphabet, Featurizer, cell_contexts
from .phrases import (CandidatePhrase, LabeledSequence, build_training_sequences,
                      decode_phrases, np_chunk_baseline)

LABEL_IDS = {name: i for i, name in enumerate(LABELS)}


def label_ids(labels) -> np.ndarray:
    return np.asarray([LABEL_IDS[l] for l in labels], dtype=np.int64)


def label_names(ids) -> tuple[str, ...]:
    return tuple(LABELS[int(i)] for i in ids)


def crf_training_data(corpus: ReflectionCorpus,
                      featurizer: Featurizer) -> list[TrainingSequence]:
    contexts = cell_contexts(corpus)
    data = []
    for seq in build_training_sequences(corpus):
        response = corpus.response(seq.response_ref)
        context = contexts[(response.lecture_id, response.prompt_kind)]
        features = featurizer.featurize_sequence(response.tokens, context)
        data.append(TrainingSequence(features=features, labels=label_ids(seq.labels)))
    return data


def train_extractor(corpus: ReflectionCorpus,
                    config: CrfConfig = CrfConfig()) -> CrfModel:
    featurizer = Featurizer(FeatureAlphabet())
    return train_crf(crf_training_data(corpus, featurizer), featurizer.alphabet, config)


def extract_phrases(model: CrfModel, corpus: ReflectionCorpus, lecture_id: str,
                    prompt_kind: str) -> list[CandidatePhrase]:
    """Decode candidate phrases for every response in one (lecture, prompt) cell."""
    cell = corpus.cell_responses(lecture_id, prompt_kind)
    context = CellContext.from_responses(cell, prompt_kind)
    featurizer = Featurizer(model.alphabet)
    phrases = []
    for response in cell:
        features = featurizer.featurize_sequence(response.tokens, context)
        ids = viterbi(model, features)
        phrases.extend(decode_phrases(response, label_names(ids)))
    return phrases


def extract_np_phrases(corpus: ReflectionCorpus, lecture_id: str,
                       prompt_kind: str) -> list[CandidatePhrase]:
    """Chunk-tag noun-phrase baseline over one cell."""
    phrases = []
    for response in corpus.cell_responses(lecture_id, prompt_kind):
        phrases.extend(np_chunk_baseline(response))
    return phrases


def predict_labels(model: CrfModel, corpus: ReflectionCorpus, lecture_id: str,
                   prompt_kind: str) -> list[LabeledSequence]:
    cell = corpus.cell_responses(lecture_id, prompt_kind)
    context = CellContext.from_responses(cell, prompt_kind)
    featurizer = Featurizer(model.alphabet)
    out = []
    for response in cell:
        features = featurizer.featurize_sequence(response.tokens, context)
        out.append(LabeledSequence(response.ref, label_names(viterbi(model, features))))
    return out
