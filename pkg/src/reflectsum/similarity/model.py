"""Linear max-margin ensemble over the pair metrics.

The classifier sees 14 inputs per pair: the seven metric values plus their
seven availability bits. It is trained by stochastic subgradient descent on
a class-weighted, L2-regularized hinge loss; an epoch is only accepted if it
does not increase the full objective (otherwise the step size is halved), so
the recorded objective is non-increasing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..evalmetrics import PrfScore
from .metrics import METRIC_NAMES, PairFeatures, Resources, pair_features
from .pairs import LabeledPair

FEATURE_NAMES = METRIC_NAMES + tuple(f"mask:{name}" for name in METRIC_NAMES)


class SingleClassTrainingSet(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    c: float = 1.0
    epochs: int = 100
    seed: int = 0


@dataclass
class SimilarityModel:
    weights: np.ndarray  # one per metric value + one per mask bit
    bias: float
    config: SimConfig
    objective_history: tuple[float, ...] = field(default=(), compare=False)

    def score(self, features: PairFeatures) -> float:
        return float(self.weights @ feature_vector(features) + self.bias)


@dataclass(frozen=True)
class SimilarityPrediction:
    score: float
    similar: bool


def feature_vector(features: PairFeatures) -> np.ndarray:
    return np.concatenate([features.values(), features.mask()])


def _objective(weights, bias, x, y, alpha, c):
    margins = y * (x @ weights + bias)
    hinge = np.maximum(0.0, 1.0 - margins)
    return 0.5 * float(weights @ weights) + c * float(alpha @ hinge)


def train_similarity(pairs: list[LabeledPair], features: list[PairFeatures],
                     config: SimConfig = SimConfig()) -> SimilarityModel:
    """Fit the ensemble from labeled pairs and their precomputed features."""
    if len(pairs) != len(features):
        raise ValueError("pairs and features must align")
    y = np.asarray([1.0 if p.similar else -1.0 for p in pairs])
    n_pos = int((y > 0).sum())
    n_neg = int((y < 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassTrainingSet(
            f"need both classes, got {n_pos} positive / {n_neg} negative")
    x = np.stack([feature_vector(f) for f in features])
    n = len(y)
    # class weights inversely proportional to class frequencies
    alpha = np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))

    rng = np.random.default_rng(config.seed)
    weights = np.zeros(x.shape[1])
    bias = 0.0
    eta = 0.1
    best = _objective(weights, bias, x, y, alpha, config.c)
    history = [best]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        w_try, b_try = weights.copy(), bias
        for i in order:
            margin = y[i] * (x[i] @ w_try + b_try)
            w_try -= eta * (w_try / n)
            if margin < 1.0:
                step = eta * config.c * alpha[i] * y[i]
                w_try += step * x[i]
                b_try += step
        candidate = _objective(w_try, b_try, x, y, alpha, config.c)
        if candidate <= best:
            weights, bias, best = w_try, b_try, candidate
            history.append(candidate)
        else:
            eta *= 0.5
    return SimilarityModel(weights=weights, bias=bias, config=config,
                           objective_history=tuple(history))


def predict_similar(model: SimilarityModel, a, b,
                    resources: Resources = Resources()) -> SimilarityPrediction:
    """Raw decision value and thresholded call; symmetric in (a, b)."""
    score = model.score(pair_features(a, b, resources))
    return SimilarityPrediction(score=score, similar=score >= 0.0)


def evaluate_pairs(model: SimilarityModel, pairs: list[LabeledPair],
                   resources: Resources = Resources()) -> PrfScore:
    """P/R/F of the positive (similar) class."""
    tp = fp = fn = 0
    for pair in pairs:
        predicted = predict_similar(model, pair.phrase_a, pair.phrase_b, resources).similar
        if predicted and pair.similar:
            tp += 1
        elif predicted and not pair.similar:
            fp += 1
        elif not predicted and pair.similar:
            fn += 1
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return PrfScore.from_pr(p, r)


def save_model(model: SimilarityModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sim-model v1\n")
        fh.write(json.dumps({"c": model.config.c, "epochs": model.config.epochs,
                             "seed": model.config.seed}) + "\n")
        for name, weight in zip(FEATURE_NAMES, model.weights):
            fh.write(f"{name}\t{float(weight)!r}\n")
        fh.write(f"bias\t{float(model.bias)!r}\n")


def load_model(path) -> SimilarityModel:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "sim-model v1":
            raise ValueError(f"not a sim-model v1 file: {header!r}")
        config = SimConfig(**json.loads(fh.readline()))
        named = {}
        for line in fh:
            if not line.strip():
                continue
            name, weight = line.rstrip("\n").split("\t")
            named[name] = float(weight)
    weights = np.asarray([named[name] for name in FEATURE_NAMES])
    return SimilarityModel(weights=weights, bias=named["bias"], config=config)
