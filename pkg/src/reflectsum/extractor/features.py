"""Feature templates for word-level phrase extraction.

Local templates (word / POS tag / chunk tag trigrams inside a 5-token window,
prompt membership, stopword membership) look at one response; global templates
(stemmed occurrence count, term-frequency rank) are computed over all responses
to the same (lecture, prompt) cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..corpus import PROMPT_TEXTS, ReflectionCorpus, Response, Token, tokenize

_BOS = "<s>"
_EOS = "</s>"
_NO_TAG = "NONE"


def load_stopwords() -> frozenset[str]:
    text = resources.files("reflectsum.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w for w in text.split() if w)


STOPWORDS = load_stopwords()


@dataclass(frozen=True)
class FeatureVector:
    ids: np.ndarray
    values: np.ndarray

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.ids.tolist(), self.values.tolist()))


class FeatureAlphabet:
    """Feature string -> dense id map; ids assigned first-seen during training."""

    def __init__(self):
        self._index: dict[str, int] = {}
        self.frozen = False

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def intern(self, name: str) -> int | None:
        fid = self._index.get(name)
        if fid is None and not self.frozen:
            fid = len(self._index)
            self._index[name] = fid
        return fid

    def freeze(self) -> None:
        self.frozen = True

    def names(self) -> list[str]:
        return list(self._index)


@dataclass(frozen=True)
class CellContext:
    """Cell-level state behind the global features and the prompt indicator."""

    prompt_stems: frozenset[str]
    stem_counts: dict[str, int]
    stem_ranks: dict[str, int]

    @classmethod
    def from_responses(cls, responses: tuple[Response, ...] | list[Response],
                       prompt_kind: str) -> "CellContext":
        counts: dict[str, int] = {}
        for resp in responses:
            for tok in resp.tokens:
                counts[tok.stem] = counts.get(tok.stem, 0) + 1
        # competition ranking: 1 + number of stems with strictly greater count
        distinct = sorted(set(counts.values()), reverse=True)
        above = {}
        running = 0
        for c in distinct:
            above[c] = running
            running += sum(1 for v in counts.values() if v == c)
        ranks = {s: 1 + above[c] for s, c in counts.items()}
        prompt_stems = frozenset(t.stem for t in tokenize(PROMPT_TEXTS[prompt_kind]))
        return cls(prompt_stems=prompt_stems, stem_counts=counts, stem_ranks=ranks)


def cell_contexts(corpus: ReflectionCorpus) -> dict[tuple[str, str], CellContext]:
    return {
        (lecture, prompt): CellContext.from_responses(cell, prompt)
        for (lecture, prompt), cell in corpus.responses.items()
    }


def _window(items: list[str], position: int, offset: int) -> str:
    i = position + offset
    if i < 0:
        return _BOS
    if i >= len(items):
        return _EOS
    return items[i]


class Featurizer:
    """Instantiates all feature templates at one token position."""

    def __init__(self, alphabet: FeatureAlphabet, stopwords: frozenset[str] = STOPWORDS):
        self.alphabet = alphabet
        self.stopwords = stopwords

    def featurize(self, tokens: tuple[Token, ...] | list[Token], position: int,
                  context: CellContext) -> FeatureVector:
        words = [t.lower for t in tokens]
        pos_tags = [t.pos if t.pos is not None else _NO_TAG for t in tokens]
        chunks = [t.chunk if t.chunk is not None else _NO_TAG for t in tokens]
        token = tokens[position]

        raw: list[tuple[str, float]] = []
        # contiguous trigrams fully inside the 5-token window centered here
        for prefix, seq in (("w", words), ("p", pos_tags), ("c", chunks)):
            for start in (-2, -1, 0):
                tri = "|".join(_window(seq, position, start + k) for k in range(3))
                raw.append((f"{prefix}[{start}]={tri}", 1.0))
        if token.stem in context.prompt_stems:
            raw.append(("in_prompt", 1.0))
        if token.lower in self.stopwords:
            raw.append(("stopword", 1.0))
        raw.append(("g:count", float(context.stem_counts.get(token.stem, 0))))
        raw.append(("g:rank", float(context.stem_ranks.get(token.stem, 0))))

        ids, values = [], []
        for name, value in raw:
            fid = self.alphabet.intern(name)
            if fid is not None:  # unseen features are dropped once frozen
                ids.append(fid)
                values.append(value)
        return FeatureVector(ids=np.asarray(ids, dtype=np.int64),
                             values=np.asarray(values, dtype=np.float64))

    def featurize_sequence(self, tokens, context: CellContext) -> list[FeatureVector]:
        return [self.featurize(tokens, t, context) for t in range(len(tokens))]


def featurize(tokens, position: int, context: CellContext,
              alphabet: FeatureAlphabet) -> FeatureVector:
    return Featurizer(alphabet).featurize(tokens, position, context)
