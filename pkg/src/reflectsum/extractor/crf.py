"""Linear-chain CRF over the B/I/O label alphabet.

Well-formedness (no I at the start, no I directly after O) is enforced
structurally: those two transitions are pinned to -inf, so the partition
function sums only over legal label sequences and decoding can never emit
an ill-formed sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize


def _lse(arr: np.ndarray, axis: int) -> np.ndarray:
    """Log-sum-exp over one axis, tolerating -inf blocks (3-label vectors are
    too small for scipy's logsumexp call overhead)."""
    m = np.max(arr, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(arr - m_safe), axis=axis))
    out = out + np.squeeze(m_safe, axis=axis)
    return np.where(np.isfinite(np.squeeze(m, axis=axis)), out, -np.inf)

from .features import FeatureAlphabet, FeatureVector

LABELS = ("O", "B", "I")
O, B, I = 0, 1, 2
N_LABELS = 3

NEG_INF = -np.inf


class DegenerateTrainingSet(ValueError):
    pass


@dataclass(frozen=True)
class CrfConfig:
    l2_sigma: float = 1.0
    max_iterations: int = 200
    tolerance: float = 1e-5  # on the gradient max-norm
    seed: int = 0


@dataclass
class CrfModel:
    alphabet: FeatureAlphabet
    emission: np.ndarray    # (n_features, 3)
    transition: np.ndarray  # (3, 3), transition[O, I] pinned to -inf
    begin: np.ndarray       # (3,), begin[I] pinned to -inf
    end: np.ndarray         # (3,)
    config: CrfConfig
    objective_history: tuple[float, ...] = field(default=(), compare=False)

    @classmethod
    def zeros(cls, alphabet: FeatureAlphabet, config: CrfConfig = CrfConfig()) -> "CrfModel":
        emission = np.zeros((len(alphabet), N_LABELS))
        transition = np.zeros((N_LABELS, N_LABELS))
        transition[O, I] = NEG_INF
        begin = np.zeros(N_LABELS)
        begin[I] = NEG_INF
        end = np.zeros(N_LABELS)
        return cls(alphabet, emission, transition, begin, end, config)


def emission_scores(model: CrfModel, features: list[FeatureVector]) -> np.ndarray:
    """Dense (T, 3) matrix of per-position label scores."""
    scores = np.zeros((len(features), N_LABELS))
    for t, fv in enumerate(features):
        if len(fv.ids):
            scores[t] = fv.values @ model.emission[fv.ids]
    return scores


def sequence_score(model: CrfModel, features: list[FeatureVector],
                   labels: np.ndarray) -> float:
    em = emission_scores(model, features)
    score = model.begin[labels[0]] + em[np.arange(len(labels)), labels].sum()
    score += model.transition[labels[:-1], labels[1:]].sum()
    return float(score + model.end[labels[-1]])


def forward(model: CrfModel, em: np.ndarray) -> np.ndarray:
    T = em.shape[0]
    alpha = np.empty((T, N_LABELS))
    alpha[0] = model.begin + em[0]
    for t in range(1, T):
        alpha[t] = em[t] + _lse(alpha[t - 1][:, None] + model.transition, axis=0)
    return alpha


def backward(model: CrfModel, em: np.ndarray) -> np.ndarray:
    T = em.shape[0]
    beta = np.empty((T, N_LABELS))
    beta[T - 1] = model.end
    for t in range(T - 2, -1, -1):
        beta[t] = _lse(model.transition + (em[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def log_partition(model: CrfModel, features: list[FeatureVector]) -> float:
    """Log of the summed exp-scores of all well-formed label sequences."""
    if not features:
        raise ValueError("log_partition needs a non-empty sequence")
    em = emission_scores(model, features)
    alpha = forward(model, em)
    return float(_lse(alpha[-1] + model.end, axis=0))


def log_partition_backward(model: CrfModel, features: list[FeatureVector]) -> float:
    em = emission_scores(model, features)
    beta = backward(model, em)
    return float(_lse(model.begin + em[0] + beta[0], axis=0))


def viterbi(model: CrfModel, features: list[FeatureVector]) -> np.ndarray:
    """Best-scoring well-formed labeling.

    Ties resolve to the lexicographically smallest sequence under the label
    order O < B < I; this is achieved by a backward max pass followed by a
    forward reconstruction that takes the first argmax at each step.
    """
    if not features:
        raise ValueError("viterbi needs a non-empty sequence")
    em = emission_scores(model, features)
    T = em.shape[0]
    best_suffix = np.empty((T, N_LABELS))
    best_suffix[T - 1] = em[T - 1] + model.end
    for t in range(T - 2, -1, -1):
        best_suffix[t] = em[t] + np.max(model.transition + best_suffix[t + 1][None, :], axis=1)
    labels = np.empty(T, dtype=np.int64)
    labels[0] = int(np.argmax(model.begin + best_suffix[0]))
    for t in range(1, T):
        labels[t] = int(np.argmax(model.transition[labels[t - 1]] + best_suffix[t]))
    return labels


def marginals(model: CrfModel, em: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-position label marginals and per-step transition marginals."""
    alpha = forward(model, em)
    beta = backward(model, em)
    log_z = float(_lse(alpha[-1] + model.end, axis=0))
    node = np.exp(alpha + beta - log_z)
    T = em.shape[0]
    edge = np.zeros((max(T - 1, 0), N_LABELS, N_LABELS))
    for t in range(T - 1):
        log_edge = (alpha[t][:, None] + model.transition
                    + (em[t + 1] + beta[t + 1])[None, :] - log_z)
        edge[t] = np.exp(log_edge)
    return node, edge, log_z


@dataclass(frozen=True)
class TrainingSequence:
    features: list[FeatureVector]
    labels: np.ndarray  # int labels, shape (T,)


def _pack_masks() -> tuple[np.ndarray, np.ndarray]:
    trans_mask = np.ones((N_LABELS, N_LABELS), dtype=bool)
    trans_mask[O, I] = False
    begin_mask = np.ones(N_LABELS, dtype=bool)
    begin_mask[I] = False
    return trans_mask, begin_mask


def _objective_and_grad(theta: np.ndarray, model: CrfModel,
                        sequences: list[TrainingSequence],
                        trans_mask: np.ndarray, begin_mask: np.ndarray):
    """Negative regularized conditional log-likelihood and its gradient."""
    n_feat = model.emission.shape[0]
    n_em = n_feat * N_LABELS
    model.emission[:] = theta[:n_em].reshape(n_feat, N_LABELS)
    cursor = n_em
    model.transition[trans_mask] = theta[cursor:cursor + trans_mask.sum()]
    cursor += trans_mask.sum()
    model.begin[begin_mask] = theta[cursor:cursor + begin_mask.sum()]
    cursor += begin_mask.sum()
    model.end[:] = theta[cursor:cursor + N_LABELS]

    ll = 0.0
    g_em = np.zeros_like(model.emission)
    g_tr = np.zeros((N_LABELS, N_LABELS))
    g_begin = np.zeros(N_LABELS)
    g_end = np.zeros(N_LABELS)

    for seq in sequences:
        em = emission_scores(model, seq.features)
        node, edge, log_z = marginals(model, em)
        labels = seq.labels
        T = len(labels)
        ll += model.begin[labels[0]] + em[np.arange(T), labels].sum()
        ll += model.transition[labels[:-1], labels[1:]].sum()
        ll += model.end[labels[-1]] - log_z

        delta = -node
        delta[np.arange(T), labels] += 1.0
        for t, fv in enumerate(seq.features):
            if len(fv.ids):
                # add.at: feature ids may repeat within one position
                np.add.at(g_em, fv.ids, fv.values[:, None] * delta[t][None, :])
        g_begin += delta[0]
        g_end += delta[T - 1]
        if T > 1:
            g_tr -= edge.sum(axis=0)
            np.add.at(g_tr, (labels[:-1], labels[1:]), 1.0)

    sigma2 = model.config.l2_sigma ** 2
    ll -= float(theta @ theta) / (2.0 * sigma2)

    grad = np.concatenate([
        g_em.ravel(),
        g_tr[trans_mask],
        g_begin[begin_mask],
        g_end,
    ])
    grad -= theta / sigma2
    return -ll, -grad


def regularized_log_likelihood(model: CrfModel, sequences: list[TrainingSequence]) -> float:
    trans_mask, begin_mask = _pack_masks()
    theta = np.concatenate([
        model.emission.ravel(),
        model.transition[trans_mask],
        model.begin[begin_mask],
        model.end,
    ])
    scratch = replace(model, emission=model.emission.copy(),
                      transition=model.transition.copy(),
                      begin=model.begin.copy(), end=model.end.copy())
    neg, _ = _objective_and_grad(theta, scratch, sequences, trans_mask, begin_mask)
    return -neg


def train_crf(sequences: list[TrainingSequence], alphabet: FeatureAlphabet,
              config: CrfConfig = CrfConfig()) -> CrfModel:
    """Maximize the L2-regularized conditional log-likelihood (quasi-Newton).

    Deterministic given the inputs and config; the objective history records
    the log-likelihood at each accepted iterate (non-decreasing).
    """
    if not sequences:
        raise DegenerateTrainingSet("no training sequences")
    if all((seq.labels == O).all() for seq in sequences):
        raise DegenerateTrainingSet("every training label is O")
    for seq in sequences:
        labels = seq.labels
        if len(labels) != len(seq.features):
            raise ValueError("labels and features disagree on sequence length")
        if labels[0] == I or ((labels[:-1] == O) & (labels[1:] == I)).any():
            raise ValueError("ill-formed BIO labels in training sequence")
    alphabet.freeze()
    model = CrfModel.zeros(alphabet, config)
    trans_mask, begin_mask = _pack_masks()
    theta0 = np.zeros(len(alphabet) * N_LABELS + trans_mask.sum()
                      + begin_mask.sum() + N_LABELS)
    history: list[float] = []
    cache: dict[bytes, float] = {}

    def objective(theta, *args):
        neg, grad = _objective_and_grad(theta, *args)
        cache[theta.tobytes()] = -neg
        if len(cache) > 8:
            cache.pop(next(iter(cache)))
        return neg, grad

    def record(theta):
        cached = cache.get(theta.tobytes())
        if cached is None:
            neg, _ = _objective_and_grad(theta, model, sequences,
                                         trans_mask, begin_mask)
            cached = -neg
        history.append(cached)

    result = minimize(
        objective, theta0,
        args=(model, sequences, trans_mask, begin_mask),
        method="L-BFGS-B", jac=True, callback=record,
        options={"maxiter": config.max_iterations, "gtol": config.tolerance,
                 "ftol": 1e-14, "maxls": 50},
    )
    # push the final iterate into the model arrays
    _objective_and_grad(result.x, model, sequences, trans_mask, begin_mask)
    model.objective_history = tuple(history)
    return model


# ---------------------------------------------------------------------------
# model file format: header line, config JSON, feature weights, transitions


def save_model(model: CrfModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("crf-model v1\n")
        fh.write(json.dumps({
            "l2_sigma": model.config.l2_sigma,
            "max_iterations": model.config.max_iterations,
            "tolerance": model.config.tolerance,
            "seed": model.config.seed,
        }) + "\n")
        for name in model.alphabet.names():
            fid = model.alphabet.intern(name)
            for y in range(N_LABELS):
                fh.write(f"{json.dumps(name)}\t{LABELS[y]}\t{float(model.emission[fid, y])!r}\n")
        fh.write("#transitions\n")
        for y in range(N_LABELS):
            if np.isfinite(model.begin[y]):
                fh.write(f"^\t{LABELS[y]}\t{float(model.begin[y])!r}\n")
        for a in range(N_LABELS):
            for b in range(N_LABELS):
                if np.isfinite(model.transition[a, b]):
                    fh.write(f"{LABELS[a]}\t{LABELS[b]}\t{float(model.transition[a, b])!r}\n")
        for y in range(N_LABELS):
            fh.write(f"{LABELS[y]}\t$\t{float(model.end[y])!r}\n")


def load_model(path) -> CrfModel:
    label_id = {name: i for i, name in enumerate(LABELS)}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "crf-model v1":
            raise ValueError(f"not a crf-model v1 file: {header!r}")
        config = CrfConfig(**json.loads(fh.readline()))
        alphabet = FeatureAlphabet()
        weights: list[tuple[str, int, float]] = []
        in_transitions = False
        begin = np.full(N_LABELS, NEG_INF)
        end = np.zeros(N_LABELS)
        transition = np.full((N_LABELS, N_LABELS), NEG_INF)
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line == "#transitions":
                in_transitions = True
                continue
            a, b, w = line.split("\t")
            if not in_transitions:
                name = json.loads(a)
                alphabet.intern(name)
                weights.append((name, label_id[b], float(w)))
            elif a == "^":
                begin[label_id[b]] = float(w)
            elif b == "$":
                end[label_id[a]] = float(w)
            else:
                transition[label_id[a], label_id[b]] = float(w)
    alphabet.freeze()
    emission = np.zeros((len(alphabet), N_LABELS))
    for name, y, w in weights:
        emission[alphabet.intern(name), y] = w
    return CrfModel(alphabet, emission, transition, begin, end, config)
