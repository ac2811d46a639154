"""Phrase similarity graph and community-based grouping.

Communities estimate student support: each group of mutually similar phrases
stands for one issue, and its size approximates how many students raised it.
Detection scores vertices against a binomial null model, grows communities
from every seed while the worst member score improves, prunes with a
Bonferroni-style cleanup, and keeps groups stable across trials. Overlaps and
singletons are both allowed. A K-medoids baseline and a planted-partition
generator round out the module.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import betainc

log = logging.getLogger(__name__)


class NoColoredPhrases(ValueError):
    pass


@dataclass(frozen=True)
class PhraseGraph:
    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]  # (i, j, w), i < j, w in (0, 1]
    _adjacency: dict[int, dict[int, float]] = field(
        repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        adjacency: dict[int, dict[int, float]] = {v: {} for v in range(self.n_nodes)}
        for i, j, w in self.edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not 0 <= i < self.n_nodes and 0 <= j < self.n_nodes:
                raise ValueError(f"edge ({i}, {j}) out of range")
            if j in adjacency[i]:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not 0.0 < w <= 1.0:
                raise ValueError(f"edge weight {w} outside (0, 1]")
            adjacency[i][j] = w
            adjacency[j][i] = w
        object.__setattr__(self, "_adjacency", adjacency)

    def neighbors(self, v: int) -> dict[int, float]:
        return self._adjacency[v]

    def degree(self, v: int) -> float:
        return sum(self._adjacency[v].values())

    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)


@dataclass(frozen=True)
class Community:
    members: frozenset[int]
    significance: float  # in [0, 1], lower is more significant

    def __post_init__(self):
        if not self.members:
            raise ValueError("community cannot be empty")


@dataclass(frozen=True)
class Clustering:
    communities: tuple[Community, ...]

    def covered_nodes(self) -> set[int]:
        return {v for c in self.communities for v in c.members}


def build_phrase_graph(phrases: Sequence, predictor: Callable) -> PhraseGraph:
    """Edge (i, j) wherever the predictor calls phrases i and j similar.

    The predictor maps a phrase pair to (similar, weight) with weight in
    (0, 1]; zero-weight calls are dropped to keep the weight invariant.
    """
    if not phrases:
        raise ValueError("need at least one phrase")
    edges = []
    for i in range(len(phrases)):
        for j in range(i + 1, len(phrases)):
            similar, weight = predictor(phrases[i], phrases[j])
            if similar and weight > 0.0:
                edges.append((i, j, min(float(weight), 1.0)))
    return PhraseGraph(n_nodes=len(phrases), edges=tuple(edges))


def ensemble_predictor(model, resources) -> Callable:
    """Learned-similarity predictor; weight is the logistic of the raw score."""
    from .similarity.model import predict_similar

    def predict(a, b):
        result = predict_similar(model, a, b, resources)
        return result.similar, 1.0 / (1.0 + np.exp(-result.score))

    return predict


def lsa_predictor(lsa, threshold: float) -> Callable:
    """LSA-cosine predictor; the cosine itself is the edge weight."""
    from .similarity.metrics import lsa_cosine

    def predict(a, b):
        cos = lsa_cosine(lsa, a, b)
        return cos >= threshold, cos

    return predict


def color_oracle_predictor(color_of: Callable) -> Callable:
    """Gold-color oracle: similar iff both phrases carry the same color."""

    def predict(a, b):
        ca, cb = color_of(a), color_of(b)
        return (ca is not None and ca == cb), 1.0

    return predict


# --- community detection ----------------------------------------------------


@dataclass(frozen=True)
class CommunityConfig:
    pvalue: float = 1.0
    seed: int = 0
    trials: int = 10


def binomial_upper_tail(k: int, n: float, p: float) -> float:
    """P[X >= k] for X ~ Binomial(n, p); n may be a real (weighted) degree."""
    if k <= 0:
        return 1.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0 if k <= n else 0.0
    if n - k + 1 <= 0:
        return 0.0
    return float(betainc(k, n - k + 1, p))


class _Scorer:
    """Vertex significance p(v, C) under the global binomial null model."""

    def __init__(self, graph: PhraseGraph):
        self.graph = graph
        self.two_m = 2.0 * graph.total_weight()
        self.degrees = [graph.degree(v) for v in range(graph.n_nodes)]

    def p_value(self, v: int, members: frozenset[int]) -> float:
        if self.two_m <= 0.0:
            return 1.0
        k_in = sum(w for u, w in self.graph.neighbors(v).items() if u in members)
        k = int(k_in + 0.5)  # nearest integer, half rounds up
        community_degree = sum(self.degrees[u] for u in members)
        p_null = min(community_degree / self.two_m, 1.0)
        return binomial_upper_tail(k, self.degrees[v], p_null)


def _corrected(p: float, n_ext: int) -> float:
    """Order-statistics correction: chance the best of n_ext scores <= p."""
    return 1.0 - (1.0 - p) ** n_ext


def _external_neighbors(graph: PhraseGraph, members: frozenset[int]) -> set[int]:
    out: set[int] = set()
    for v in members:
        out.update(u for u in graph.neighbors(v) if u not in members)
    return out


def _worst_member_score(scorer: _Scorer, graph: PhraseGraph,
                        members: frozenset[int]) -> float:
    n_ext = len(_external_neighbors(graph, members))
    return max(_corrected(scorer.p_value(v, members - {v}), n_ext)
               for v in members)


def _grow(scorer: _Scorer, graph: PhraseGraph, seed_node: int,
          pvalue: float) -> frozenset[int]:
    members = frozenset([seed_node])
    worst = _worst_member_score(scorer, graph, members)
    while True:
        external = _external_neighbors(graph, members)
        if not external:
            return members
        n_ext = len(external)
        scored = sorted(
            (_corrected(scorer.p_value(u, members), n_ext), u) for u in external)
        best_score, best_node = scored[0]
        if best_score > pvalue:
            return members
        grown = members | {best_node}
        worst_grown = _worst_member_score(scorer, graph, grown)
        if worst_grown >= worst:
            return members
        members, worst = grown, worst_grown


def _cleanup(scorer: _Scorer, members: frozenset[int], pvalue: float) -> frozenset[int]:
    current = set(members)
    while len(current) > 1:
        scored = sorted(((scorer.p_value(v, frozenset(current) - {v}), v)
                         for v in current), reverse=True)
        worst_score, worst_node = scored[0]
        if worst_score > pvalue / len(current):
            current.remove(worst_node)
        else:
            break
    return frozenset(current)


def _jaccard(a: frozenset[int], b: frozenset[int]) -> float:
    return len(a & b) / len(a | b)


def _significance(scorer: _Scorer, members: frozenset[int]) -> float:
    return max(scorer.p_value(v, members - {v}) for v in members)


def _dedup(scorer: _Scorer, candidates: list[frozenset[int]],
           overlap: float = 0.8) -> list[frozenset[int]]:
    """Drop near-duplicates (Jaccard > overlap), keeping the more significant."""
    ordered = sorted(set(candidates),
                     key=lambda c: (_significance(scorer, c), -len(c), sorted(c)))
    kept: list[frozenset[int]] = []
    for community in ordered:
        if all(_jaccard(community, other) <= overlap for other in kept):
            kept.append(community)
    return kept


def detect_communities(graph: PhraseGraph,
                       config: CommunityConfig = CommunityConfig()) -> Clustering:
    """Grow, clean, deduplicate and stabilize communities; cover leftovers
    with singletons. Deterministic given (graph, config)."""
    scorer = _Scorer(graph)
    nodes = list(range(graph.n_nodes))
    # growth is deterministic per seed node, so grow once and reuse per trial
    grown: dict[int, frozenset[int]] = {}
    for seed_node in nodes:
        community = _grow(scorer, graph, seed_node, config.pvalue)
        grown[seed_node] = _cleanup(scorer, community, config.pvalue)

    counts: dict[frozenset[int], int] = {}
    for trial in range(config.trials):
        rng = np.random.default_rng([config.seed, trial])
        order = rng.permutation(graph.n_nodes)
        candidates = [grown[int(v)] for v in order]
        for community in _dedup(scorer, candidates):
            counts[community] = counts.get(community, 0) + 1

    stable = [c for c, count in counts.items() if 2 * count >= config.trials]
    final = _dedup(scorer, stable)
    covered = {v for c in final for v in c}
    for v in nodes:
        if v not in covered:
            final.append(frozenset([v]))
    communities = tuple(
        Community(members=c, significance=_significance(scorer, c))
        for c in final)
    communities = tuple(sorted(
        communities, key=lambda c: (c.significance, -len(c.members), sorted(c.members))))
    return Clustering(communities=communities)


# --- K-medoids baseline ------------------------------------------------------


def distance_matrix(graph: PhraseGraph) -> np.ndarray:
    """1 - w for edges, 1 for non-edges, 0 on the diagonal."""
    d = np.ones((graph.n_nodes, graph.n_nodes))
    np.fill_diagonal(d, 0.0)
    for i, j, w in graph.edges:
        d[i, j] = d[j, i] = 1.0 - w
    return d


def kmedoids_trace(graph: PhraseGraph, k: Optional[int] = None, seed: int = 0,
                   max_iter: int = 100) -> tuple[Clustering, tuple[float, ...]]:
    """K-medoids with objective trace; k defaults to ceil(sqrt(n))."""
    n = graph.n_nodes
    if n < 1:
        raise ValueError("graph has no nodes")
    if k is None:
        k = int(np.ceil(np.sqrt(n)))
    k = min(k, n)
    d = distance_matrix(graph)
    rng = np.random.default_rng(seed)
    medoids = list(rng.choice(n, size=k, replace=False))

    def assign(meds):
        assignment = np.empty(n, dtype=np.int64)
        medoid_pos = {m: c for c, m in enumerate(meds)}
        for v in range(n):
            if v in medoid_pos:
                assignment[v] = medoid_pos[v]  # a medoid anchors its own cluster
            else:
                assignment[v] = int(np.argmin(d[v, meds]))
        return assignment

    history = []
    assignment = assign(medoids)
    history.append(float(d[np.arange(n), [medoids[c] for c in assignment]].sum()))
    for _ in range(max_iter):
        new_medoids = []
        for c in range(k):
            cluster = np.where(assignment == c)[0]
            inner = d[np.ix_(cluster, cluster)].sum(axis=1)
            new_medoids.append(int(cluster[int(np.argmin(inner))]))
        if new_medoids == medoids:
            break
        medoids = new_medoids
        assignment = assign(medoids)
        history.append(float(d[np.arange(n), [medoids[c] for c in assignment]].sum()))

    communities = []
    for c in range(k):
        cluster = frozenset(np.where(assignment == c)[0].tolist())
        communities.append(Community(members=cluster,
                                     significance=float(c) / max(k, 1)))
    communities.sort(key=lambda c: (-len(c.members), sorted(c.members)))
    ranked = tuple(Community(members=c.members, significance=i / max(k, 1))
                   for i, c in enumerate(communities))
    return Clustering(communities=ranked), tuple(history)


def kmedoids(graph: PhraseGraph, k: Optional[int] = None, seed: int = 0,
             max_iter: int = 100) -> Clustering:
    clustering, _ = kmedoids_trace(graph, k=k, seed=seed, max_iter=max_iter)
    return clustering


# --- evaluation and synthetic graphs ----------------------------------------


def purity(clustering: Clustering, color_of: dict[int, object]) -> float:
    """Share of colored (phrase, community) incidences matching the majority
    color of their community; uncolored phrases are ignored."""
    agree = 0
    total = 0
    for community in clustering.communities:
        colors = [color_of[v] for v in community.members if v in color_of
                  and color_of[v] is not None]
        if not colors:
            continue
        counts: dict[object, int] = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        agree += max(counts.values())
        total += len(colors)
    if total == 0:
        raise NoColoredPhrases("no phrase carries a gold color")
    return agree / total


def planted_partition(n_blocks: int, block_size: int, p_in: float, p_out: float,
                      seed: int = 0) -> tuple[PhraseGraph, np.ndarray]:
    """Random block graph: intra-block edges with p_in, inter with p_out."""
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    n = n_blocks * block_size
    labels = np.repeat(np.arange(n_blocks), block_size)
    rng = np.random.default_rng(seed)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                edges.append((i, j, 1.0))
    return PhraseGraph(n_nodes=n, edges=tuple(edges)), labels


# --- graph dump ---------------------------------------------------------------


def save_graph(graph: PhraseGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#nodes {graph.n_nodes}\n")
        for i, j, w in graph.edges:
            fh.write(f"{i}\t{j}\t{float(w)!r}\n")


def load_graph(path) -> PhraseGraph:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "#nodes":
            raise ValueError("graph dump must start with '#nodes n'")
        n = int(header[1])
        edges = []
        for line in fh:
            if not line.strip():
                continue
            i, j, w = line.split("\t")
            edges.append((int(i), int(j), float(w)))
    return PhraseGraph(n_nodes=n, edges=tuple(edges))
