"""Latent semantic analysis over a background corpus.

Builds a TF-IDF term-document matrix and factors it with a rank-k truncated
SVD computed by randomized subspace iteration (Gaussian range finder with
oversampling 10, at least 4 power iterations, then iterate until the top-k
singular values change by less than 1e-6 relative). Term vectors are rows of
U * Sigma, L2-normalized.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from ..corpus import tokenize
from .vectors import VectorTable

log = logging.getLogger(__name__)


class RankDeficient(Warning):
    pass


def randomized_svd(matrix: np.ndarray, k: int, seed: int, oversample: int = 10,
                   min_power_iters: int = 4, tol: float = 1e-6,
                   max_power_iters: int = 100) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated SVD by randomized subspace iteration.

    Returns (U, s, Vt) with k columns/values. Power iterations continue past
    the minimum until the singular-value estimates converge within tol.
    """
    m, n = matrix.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} out of range for a {m}x{n} matrix")
    rng = np.random.default_rng(seed)
    width = min(k + oversample, min(m, n))
    sketch = matrix @ rng.normal(size=(n, width))
    q, _ = np.linalg.qr(sketch)
    previous = None
    for iteration in range(1, max_power_iters + 1):
        q2, _ = np.linalg.qr(matrix.T @ q)
        q, _ = np.linalg.qr(matrix @ q2)
        values = np.linalg.svd(q.T @ matrix, compute_uv=False)[:k]
        if previous is not None and iteration >= min_power_iters:
            change = np.abs(values - previous) / np.maximum(np.abs(values), 1e-300)
            if np.max(change) < tol:
                break
        previous = values
    small_u, s, vt = np.linalg.svd(q.T @ matrix, full_matrices=False)
    u = q @ small_u
    return u[:, :k], s[:k], vt[:k]


def _as_token_lists(background_texts) -> list[list[str]]:
    documents = []
    for doc in background_texts:
        if isinstance(doc, str):
            documents.append([t.lower for t in tokenize(doc)])
        else:
            documents.append([str(t).lower() for t in doc])
    return documents


def build_lsa(background_texts, k: int, seed: int = 0) -> VectorTable:
    """TF-IDF + rank-k truncated SVD -> unit-norm term vectors."""
    if k < 1:
        raise ValueError("k must be >= 1")
    documents = [d for d in _as_token_lists(background_texts) if d]
    vocabulary = sorted({t for doc in documents for t in doc})
    if len(vocabulary) < k:
        raise ValueError(f"need at least k={k} distinct terms, got {len(vocabulary)}")
    term_index = {t: i for i, t in enumerate(vocabulary)}
    n_docs = len(documents)
    counts = np.zeros((len(vocabulary), n_docs))
    for j, doc in enumerate(documents):
        for token in doc:
            counts[term_index[token], j] += 1.0
    df = (counts > 0).sum(axis=1)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    matrix = counts * idf[:, None]

    u, s, _ = randomized_svd(matrix, k, seed)
    nonzero = int((s > s[0] * 1e-12).sum()) if s[0] > 0 else 0
    if nonzero < k:
        log.warning("rank deficient: only %d nonzero singular values, reducing k "
                    "from %d", nonzero, k)
        if nonzero == 0:
            raise ValueError("background matrix has rank zero")
        u, s = u[:, :nonzero], s[:nonzero]
        k = nonzero

    term_rows = u * s[None, :]
    norms = np.linalg.norm(term_rows, axis=1)
    safe = np.where(norms < 1e-12, 1.0, norms)
    term_rows = term_rows / safe[:, None]
    vectors = {t: term_rows[i].copy() for t, i in term_index.items()}
    return VectorTable(vectors, k)


def corpus_background(corpus) -> list[str]:
    """Default LSA background: every student response as one document."""
    return [resp.text for cell in corpus.responses.values() for resp in cell]


def load_background(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]
