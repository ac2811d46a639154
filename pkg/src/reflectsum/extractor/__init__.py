"""Supervised candidate-phrase extraction as BIO sequence labeling."""

from .crf import (CrfConfig, CrfModel, DegenerateTrainingSet, LABELS,
                  TrainingSequence, load_model, log_partition,
                  log_partition_backward, save_model, sequence_score,
                  train_crf, viterbi)
from .features import (CellContext, FeatureAlphabet, FeatureVector, Featurizer,
                       STOPWORDS, cell_contexts, featurize, load_stopwords)
from .phrases import (CandidatePhrase, LabeledSequence, MalformedLabels,
                      MissingChunkTags, OverlappingHighlightsSameAnnotator,
                      build_training_sequences, check_well_formed, decode_phrases,
                      encode_labels, evaluate_extraction, gold_phrases,
                      np_chunk_baseline, phrase_from_span)
from .pipeline import (crf_training_data, extract_np_phrases, extract_phrases,
                       label_ids, label_names, predict_labels, train_extractor)

__all__ = [name for name in dir() if not name.startswith("_")]
