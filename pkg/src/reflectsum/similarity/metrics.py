"""Seven pairwise phrase-similarity metrics with availability masks.

All metrics are symmetric, lie in [0, 1], and equal 1 on identical phrases
(the taxonomy metric whenever a content word resolves). Metrics that cannot
be computed for a pair carry value 0 with their mask bit off, so a classifier
can distinguish "absent resource" from "measured dissimilar".
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..corpus import Token
from ..extractor.features import STOPWORDS
from ..porter import stem
from .vectors import VectorTable
from .wordnet import Taxonomy

METRIC_NAMES = ("lexical_overlap", "cosine_tf", "lin_taxonomy", "bleu",
                "simsum", "embedding_cosine", "lsa_cosine")


@dataclass(frozen=True)
class Resources:
    vectors: Optional[VectorTable] = None
    lsa: Optional[VectorTable] = None
    taxonomy: Optional[Taxonomy] = None


@dataclass(frozen=True)
class PairFeatures:
    lexical_overlap: float
    cosine_tf: float
    lin_taxonomy: float
    bleu: float
    simsum: float
    embedding_cosine: float
    lsa_cosine: float
    available: tuple[bool, bool, bool, bool, bool, bool, bool]

    def values(self) -> np.ndarray:
        return np.asarray([getattr(self, name) for name in METRIC_NAMES])

    def mask(self) -> np.ndarray:
        return np.asarray(self.available, dtype=float)


def _lower_tokens(phrase) -> list[str]:
    tokens = phrase.tokens if hasattr(phrase, "tokens") else phrase
    return [t.lower if isinstance(t, Token) else str(t).lower() for t in tokens]


def _stems(phrase) -> list[str]:
    tokens = phrase.tokens if hasattr(phrase, "tokens") else phrase
    return [t.stem if isinstance(t, Token) else stem(str(t).lower()) for t in tokens]


def dice_overlap(stems_a: Sequence[str], stems_b: Sequence[str]) -> float:
    sa, sb = set(stems_a), set(stems_b)
    if not sa or not sb:
        return 0.0
    return 2.0 * len(sa & sb) / (len(sa) + len(sb))


def cosine_tf(stems_a: Sequence[str], stems_b: Sequence[str]) -> float:
    ca, cb = Counter(stems_a), Counter(stems_b)
    dot = sum(v * cb[g] for g, v in ca.items())
    na = math.sqrt(sum(v * v for v in ca.values()))
    nb = math.sqrt(sum(v * v for v in cb.values()))
    if na == 0 or nb == 0:
        return 0.0
    return min(dot / (na * nb), 1.0)


def _bleu_directed(candidate: list[str], reference: list[str]) -> float:
    # n <= 2 with add-one smoothed modified precisions and a brevity penalty
    log_precision = 0.0
    for n in (1, 2):
        cand = Counter(tuple(candidate[i:i + n]) for i in range(len(candidate) - n + 1))
        ref = Counter(tuple(reference[i:i + n]) for i in range(len(reference) - n + 1))
        matches = sum(min(v, ref[g]) for g, v in cand.items())
        total = sum(cand.values())
        log_precision += 0.5 * math.log((matches + 1) / (total + 1))
    if len(candidate) == 0:
        return 0.0
    bp = 1.0 if len(candidate) >= len(reference) else math.exp(1 - len(reference) / len(candidate))
    return bp * math.exp(log_precision)


def bleu(tokens_a: list[str], tokens_b: list[str]) -> float:
    """Sentence BLEU capped at bigrams, symmetrized by averaging directions."""
    return 0.5 * (_bleu_directed(tokens_a, tokens_b) + _bleu_directed(tokens_b, tokens_a))


def _f1(counts_a: Counter, counts_b: Counter) -> float:
    total_a = sum(counts_a.values())
    total_b = sum(counts_b.values())
    if total_a == 0 and total_b == 0:
        return 1.0
    if total_a == 0 or total_b == 0:
        return 0.0
    matches = sum(min(v, counts_b[g]) for g, v in counts_a.items())
    p, r = matches / total_a, matches / total_b
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _skip_bigrams(tokens: list[str], max_gap: int = 4) -> Counter:
    counts: Counter = Counter()
    for i in range(len(tokens)):
        for j in range(i + 1, min(i + max_gap + 2, len(tokens))):
            counts[(tokens[i], tokens[j])] += 1
    return counts


def simsum(tokens_a: list[str], tokens_b: list[str]) -> float:
    """Average of unigram F1 and skip-bigram (gap <= 4) F1."""
    uni = _f1(Counter(tokens_a), Counter(tokens_b))
    skip = _f1(_skip_bigrams(tokens_a), _skip_bigrams(tokens_b))
    return 0.5 * (uni + skip)


def _masked_cosine(table: Optional[VectorTable], tokens_a: list[str],
                   tokens_b: list[str]) -> tuple[float, bool]:
    if table is None:
        return 0.0, False
    va = table.mean_vector(tokens_a)
    vb = table.mean_vector(tokens_b)
    if va is None or vb is None:
        return 0.0, False
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na < 1e-12 or nb < 1e-12:
        return 0.0, False
    cos = float(va @ vb / (na * nb))
    return min(max(cos, 0.0), 1.0), True


def _lin(taxonomy: Optional[Taxonomy], tokens_a: list[str],
         tokens_b: list[str]) -> tuple[float, bool]:
    if taxonomy is None:
        return 0.0, False
    content_a = [t for t in tokens_a if t not in STOPWORDS and t.isalpha()]
    content_b = [t for t in tokens_b if t not in STOPWORDS and t.isalpha()]
    best: Optional[float] = None
    for wa in content_a:
        for wb in content_b:
            value = taxonomy.lin(wa, wb)
            if value is not None:
                best = value if best is None else max(best, value)
    if best is None:
        return 0.0, False
    return best, True


def pair_features(a, b, resources: Resources = Resources()) -> PairFeatures:
    """All seven metrics for one unordered phrase pair."""
    stems_a, stems_b = _stems(a), _stems(b)
    lower_a, lower_b = _lower_tokens(a), _lower_tokens(b)
    if not lower_a or not lower_b:
        raise ValueError("pair_features needs non-empty phrases")
    lin_value, lin_ok = _lin(resources.taxonomy, lower_a, lower_b)
    emb_value, emb_ok = _masked_cosine(resources.vectors, lower_a, lower_b)
    lsa_value, lsa_ok = _masked_cosine(resources.lsa, lower_a, lower_b)
    return PairFeatures(
        lexical_overlap=dice_overlap(stems_a, stems_b),
        cosine_tf=cosine_tf(stems_a, stems_b),
        lin_taxonomy=lin_value,
        bleu=bleu(lower_a, lower_b),
        simsum=simsum(lower_a, lower_b),
        embedding_cosine=emb_value,
        lsa_cosine=lsa_value,
        available=(True, True, lin_ok, True, True, emb_ok, lsa_ok),
    )


def lsa_cosine(lsa: Optional[VectorTable], a, b) -> float:
    value, _ = _masked_cosine(lsa, _lower_tokens(a), _lower_tokens(b))
    return value


def lsa_baseline_similar(lsa: VectorTable, a, b, threshold: float) -> bool:
    """Unsupervised baseline: cosine in the latent space meets the threshold."""
    return lsa_cosine(lsa, a, b) >= threshold
