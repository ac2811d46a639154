"""Minimal WordNet 3.0 data-file reader and Lin similarity.

Reads index.{noun,verb} and data.{noun,verb} from a database directory plus
an information-content file with one "<synset_offset> <ic>" line per synset.
Lin similarity compares same-part-of-speech synsets through their hypernym
("@", "@i") ancestors: 2 * IC(lcs) / (IC(a) + IC(b)) with the common subsumer
of maximal information content as lcs.
"""

from __future__ import annotations

import os

_POS_FILES = {"n": "noun", "v": "verb"}
_HYPERNYM = ("@", "@i")

Synset = tuple[str, int]  # (pos, offset)


class Taxonomy:
    def __init__(self, index: dict[str, list[Synset]],
                 hypernyms: dict[Synset, list[Synset]],
                 ic: dict[int, float]):
        self._index = index
        self._hypernyms = hypernyms
        self._ic = ic
        self._ancestors_cache: dict[Synset, frozenset[Synset]] = {}

    def synsets(self, lemma: str) -> list[Synset]:
        return self._index.get(lemma.lower(), [])

    def __contains__(self, lemma: str) -> bool:
        return lemma.lower() in self._index

    def ic(self, synset: Synset) -> float:
        return self._ic.get(synset[1], 0.0)

    def ancestors(self, synset: Synset) -> frozenset[Synset]:
        """Transitive hypernym closure, including the synset itself."""
        cached = self._ancestors_cache.get(synset)
        if cached is not None:
            return cached
        seen: set[Synset] = set()
        stack = [synset]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(self._hypernyms.get(node, ()))
        result = frozenset(seen)
        self._ancestors_cache[synset] = result
        return result

    def lin(self, word_a: str, word_b: str) -> float | None:
        """Max Lin similarity over same-POS synset pairs; None when unmatched."""
        synsets_a = self.synsets(word_a)
        synsets_b = self.synsets(word_b)
        best: float | None = None
        for sa in synsets_a:
            for sb in synsets_b:
                if sa[0] != sb[0]:
                    continue
                if sa == sb:
                    value = 1.0
                else:
                    common = self.ancestors(sa) & self.ancestors(sb)
                    ics = [self.ic(s) for s in common]
                    denom = self.ic(sa) + self.ic(sb)
                    if not ics or denom <= 0:
                        value = 0.0
                    else:
                        value = min(max(2.0 * max(ics) / denom, 0.0), 1.0)
                best = value if best is None else max(best, value)
        return best


def _parse_index(path: str, pos: str, index: dict[str, list[Synset]]) -> None:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith(" ") or not line.strip():
                continue  # license header
            parts = line.split()
            lemma = parts[0].replace("_", " ")
            synset_cnt = int(parts[2])
            p_cnt = int(parts[3])
            offsets = parts[3 + p_cnt + 3:]
            if len(offsets) < synset_cnt:
                raise ValueError(f"truncated index line for {lemma!r} in {path}")
            index.setdefault(lemma, []).extend(
                (pos, int(off)) for off in offsets[:synset_cnt])


def _parse_data(path: str, pos: str, hypernyms: dict[Synset, list[Synset]]) -> None:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith(" ") or not line.strip():
                continue
            body = line.split("|", 1)[0].split()
            offset = int(body[0])
            w_cnt = int(body[3], 16)
            cursor = 4 + 2 * w_cnt
            p_cnt = int(body[cursor])
            cursor += 1
            parents = []
            for _ in range(p_cnt):
                symbol, target, target_pos = body[cursor], body[cursor + 1], body[cursor + 2]
                cursor += 4
                if symbol in _HYPERNYM:
                    parents.append((target_pos, int(target)))
            if parents:
                hypernyms[(pos, offset)] = parents


def load_taxonomy(database_dir: str, ic_path: str) -> Taxonomy:
    index: dict[str, list[Synset]] = {}
    hypernyms: dict[Synset, list[Synset]] = {}
    for pos, name in _POS_FILES.items():
        index_path = os.path.join(database_dir, f"index.{name}")
        data_path = os.path.join(database_dir, f"data.{name}")
        if not (os.path.exists(index_path) and os.path.exists(data_path)):
            continue
        _parse_index(index_path, pos, index)
        _parse_data(data_path, pos, hypernyms)
    if not index:
        raise FileNotFoundError(f"no index.noun / index.verb found in {database_dir}")
    ic: dict[int, float] = {}
    with open(ic_path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) != 2:
                continue
            ic[int(parts[0])] = float(parts[1])
    return Taxonomy(index, hypernyms, ic)
