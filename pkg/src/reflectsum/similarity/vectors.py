"""Dense word-vector tables in the plain-text format.

First line "<vocab_size> <dim>", then one "<token> <v1> ... <vd>" line per
token. Lookup is by lowercased token.
"""

from __future__ import annotations

import numpy as np


class VectorTable:
    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        for token, vec in vectors.items():
            if vec.shape != (dim,):
                raise ValueError(f"vector for {token!r} has shape {vec.shape}, "
                                 f"expected ({dim},)")
        self.vectors = vectors
        self.dim = dim

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.vectors

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token.lower())

    def mean_vector(self, tokens) -> np.ndarray | None:
        """Mean of the in-vocabulary token vectors; None when all are OOV."""
        rows = [self.vectors[t.lower()] for t in tokens if t.lower() in self.vectors]
        if not rows:
            return None
        return np.mean(rows, axis=0)


def load_vectors(path) -> VectorTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("vector file must start with '<vocab_size> <dim>'")
        vocab_size, dim = int(header[0]), int(header[1])
        vectors: dict[str, np.ndarray] = {}
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"bad vector line for {parts[0]!r}")
            vectors[parts[0]] = np.asarray([float(x) for x in parts[1:]])
    if len(vectors) != vocab_size:
        raise ValueError(f"header claims {vocab_size} vectors, file has {len(vectors)}")
    return VectorTable(vectors, dim)


def save_vectors(table: VectorTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for token, vec in table.vectors.items():
            coords = " ".join(repr(float(x)) for x in vec)
            fh.write(f"{token} {coords}\n")
