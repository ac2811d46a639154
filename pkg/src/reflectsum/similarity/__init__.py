"""Pairwise phrase similarity: metric ensemble, learned model, LSA baseline."""

from .lsa import (RankDeficient, build_lsa, corpus_background, load_background,
                  randomized_svd)
from .metrics import (METRIC_NAMES, PairFeatures, Resources, bleu, cosine_tf,
                      dice_overlap, lsa_baseline_similar, lsa_cosine,
                      pair_features, simsum)
from .model import (FEATURE_NAMES, SimConfig, SimilarityModel,
                    SimilarityPrediction, SingleClassTrainingSet, evaluate_pairs,
                    feature_vector, load_model, predict_similar, save_model,
                    train_similarity)
from .pairs import LabeledPair, build_pair_training_set
from .vectors import VectorTable, load_vectors, save_vectors
from .wordnet import Taxonomy, load_taxonomy

__all__ = [name for name in dir() if not name.startswith("_")]
