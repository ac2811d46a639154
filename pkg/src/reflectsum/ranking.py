"""Representative-phrase selection and summary assembly.

LexRank centrality (the stationary distribution of a damped, row-normalized
transition matrix) picks one representative per community; communities are
ordered by size, and each bullet carries the community size as its student
supporter estimate. A response-level LexRank baseline summarizes whole
responses without clustering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .clustering import Clustering, Community, PhraseGraph, distance_matrix
from .corpus import Response
from .extractor.phrases import CandidatePhrase, phrase_from_span
from .similarity.metrics import cosine_tf


class NonSymmetricInput(ValueError):
    pass


class NegativeWeight(ValueError):
    pass


class EmptyClustering(ValueError):
    pass


def lexrank(weights: np.ndarray, damping: float = 0.85, eps: float = 1e-6,
            max_iter: int = 1000) -> np.ndarray:
    """Stationary vector of damping * W_rownorm + (1 - damping) * uniform.

    Zero rows (dangling nodes) are treated as uniformly connected. The result
    is non-negative and sums to one.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise NonSymmetricInput(f"expected a square matrix, got {w.shape}")
    if not np.allclose(w, w.T, atol=1e-12):
        raise NonSymmetricInput("weight matrix must be symmetric")
    if (w < 0).any():
        raise NegativeWeight("weights must be non-negative")
    n = w.shape[0]
    if n == 1:
        return np.ones(1)
    row_sums = w.sum(axis=1)
    transition = np.empty_like(w)
    dangling = row_sums == 0
    transition[dangling] = 1.0 / n
    transition[~dangling] = w[~dangling] / row_sums[~dangling, None]
    transition = damping * transition + (1.0 - damping) / n
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        updated = pi @ transition
        if np.max(np.abs(updated - pi)) < eps:
            pi = updated
            break
        pi = updated
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


@dataclass(frozen=True)
class SummaryEntry:
    phrase: CandidatePhrase
    supporters: int
    community_index: Optional[int] = None
    centrality: float = 0.0


@dataclass(frozen=True)
class Summary:
    lecture_id: str
    prompt_kind: str
    system: str
    entries: tuple[SummaryEntry, ...]

    def bullets(self) -> list[str]:
        return [f"- {e.phrase.text} [{e.supporters}]" for e in self.entries]

    def render(self) -> str:
        return "\n".join(self.bullets())

    def to_json(self) -> str:
        return json.dumps({
            "lecture_id": self.lecture_id,
            "prompt": self.prompt_kind,
            "system": self.system,
            "bullets": [
                {"text": e.phrase.text, "supporters": e.supporters,
                 "source_student": e.phrase.student_id,
                 "span": [e.phrase.start, e.phrase.end]}
                for e in self.entries
            ],
        })


def disjointify(clustering: Clustering) -> dict[int, int]:
    """Assign every node to its single most significant community.

    Ties resolve to the larger community, then to the first in order. Returns
    node -> community index into clustering.communities.
    """
    owner: dict[int, int] = {}
    ranked = sorted(
        range(len(clustering.communities)),
        key=lambda i: (clustering.communities[i].significance,
                       -len(clustering.communities[i].members), i))
    for index in ranked:
        for node in clustering.communities[index].members:
            owner.setdefault(node, index)
    return owner


def _subgraph_weights(graph: PhraseGraph, nodes: list[int]) -> np.ndarray:
    w = np.zeros((len(nodes), len(nodes)))
    position = {v: i for i, v in enumerate(nodes)}
    for v in nodes:
        for u, weight in graph.neighbors(v).items():
            if u in position:
                w[position[v], position[u]] = weight
    return w


def assemble_summary(clustering: Clustering, graph: PhraseGraph,
                     phrases: Sequence[CandidatePhrase], lecture_id: str,
                     prompt_kind: str, system: str = "cdsum",
                     max_phrases: int = 5, count_students: bool = False,
                     damping: float = 0.85) -> Summary:
    """Top communities by size, one LexRank-central representative each.

    Overlapping memberships are first disjointified (most significant
    community wins); supporters default to the community size, or to the
    number of distinct students when count_students is set.
    """
    if not clustering.communities:
        raise EmptyClustering("clustering has no communities")
    owner = disjointify(clustering)
    members: dict[int, list[int]] = {}
    for node, index in owner.items():
        members.setdefault(index, []).append(node)

    candidates = []
    for index, nodes in members.items():
        nodes = sorted(nodes)
        centrality = lexrank(_subgraph_weights(graph, nodes), damping=damping)
        # representative: highest centrality, ties to earlier text then id
        best_pos = min(range(len(nodes)),
                       key=lambda p: (-centrality[p], phrases[nodes[p]].text.lower(),
                                      nodes[p]))
        representative = nodes[best_pos]
        if count_students:
            supporters = len({phrases[v].student_id for v in nodes})
        else:
            supporters = len(nodes)
        candidates.append(SummaryEntry(
            phrase=phrases[representative], supporters=supporters,
            community_index=index, centrality=float(centrality[best_pos])))

    candidates.sort(key=lambda e: (-e.supporters, -e.centrality,
                                   e.phrase.text.lower()))
    return Summary(lecture_id=lecture_id, prompt_kind=prompt_kind, system=system,
                   entries=tuple(candidates[:max_phrases]))


def response_phrase(response: Response) -> CandidatePhrase:
    return phrase_from_span(response, 0, len(response.tokens))


def lexrank_response_baseline(responses: Sequence[Response], max_units: int = 5,
                              threshold: float = 0.1, damping: float = 0.85,
                              system: str = "lexrank_baseline") -> Summary:
    """Whole-response LexRank baseline: top responses as bullets, one
    supporter each (no clustering)."""
    if not responses:
        raise ValueError("need at least one response")
    n = len(responses)
    stems = [[t.stem for t in r.tokens] for r in responses]
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            sim = cosine_tf(stems[i], stems[j])
            if sim >= threshold:
                weights[i, j] = weights[j, i] = sim
    centrality = lexrank(weights, damping=damping)
    order = sorted(range(n), key=lambda i: (-centrality[i], i))
    entries = tuple(
        SummaryEntry(phrase=response_phrase(responses[i]), supporters=1,
                     centrality=float(centrality[i]))
        for i in order[:max_units])
    first = responses[0]
    return Summary(lecture_id=first.lecture_id, prompt_kind=first.prompt_kind,
                   system=system, entries=entries)
