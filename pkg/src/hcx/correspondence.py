"""Finite correspondences (binary relations) between indexed finite sets.

A correspondence ``R`` between ``W`` and ``X`` is a set of pairs ``(w, x)``.
Notation used throughout:

* ``R.foreset(x)``  = ``{w : w R x}``
* ``R.afterset(w)`` = ``{x : w R x}``
* ``R.compose(S)``  relates ``w`` to ``v`` when some ``x`` has ``w R x`` and ``x S v``.

Small relations are stored as a dense boolean matrix, large ones as a sparse
set of pairs.  Both storages behave identically.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DENSE_LIMIT = 2**20


@dataclass(frozen=True)
class FiniteSet:
    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 0:
            raise ValueError("size must be nonnegative")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.size:
                raise ValueError("label count differs from size")
            if len(set(self.labels)) != self.size:
                raise ValueError("labels must be pairwise distinct")

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        return iter(range(self.size))

    def check(self, indices: Iterable[int]) -> frozenset[int]:
        out = frozenset(int(i) for i in indices)
        for i in out:
            if not 0 <= i < self.size:
                raise IndexError(f"index {i} out of bounds for a set of size {self.size}")
        return out


def as_set(s: FiniteSet | int) -> FiniteSet:
    return s if isinstance(s, FiniteSet) else FiniteSet(int(s))


def product_index(w: int, y: int, n_w: int) -> int:
    """Index of ``(w, y)`` in ``W x Y`` with ``w`` varying fastest."""
    return w + n_w * y


def product_pair(k: int, n_w: int) -> tuple[int, int]:
    return k % n_w, k // n_w


class Correspondence:
    """Immutable finite relation between ``source`` and ``target``."""

    __slots__ = ("source", "target", "_dense", "_pairs")

    def __init__(self, source, target, pairs: Iterable[Sequence[int]] = (), *, dense: bool | None = None):
        self.source = as_set(source)
        self.target = as_set(target)
        n, m = self.source.size, self.target.size
        pair_set = set()
        for p in pairs:
            w, y = int(p[0]), int(p[1])
            if not (0 <= w < n and 0 <= y < m):
                raise IndexError(f"pair {(w, y)} out of bounds for {n}x{m}")
            pair_set.add((w, y))
        if dense is None:
            dense = n * m <= DENSE_LIMIT
        if dense:
            mat = np.zeros((n, m), dtype=bool)
            if pair_set:
                idx = np.array(sorted(pair_set))
                mat[idx[:, 0], idx[:, 1]] = True
            mat.flags.writeable = False
            self._dense, self._pairs = mat, None
        else:
            self._dense, self._pairs = None, frozenset(pair_set)

    @classmethod
    def from_matrix(cls, matrix, source=None, target=None) -> "Correspondence":
        mat = np.array(matrix, dtype=bool)
        if mat.ndim != 2:
            raise ValueError("relation matrix must be 2-D")
        obj = cls.__new__(cls)
        obj.source = as_set(source if source is not None else mat.shape[0])
        obj.target = as_set(target if target is not None else mat.shape[1])
        if (obj.source.size, obj.target.size) != mat.shape:
            raise ValueError("matrix shape does not match the sets")
        mat.flags.writeable = False
        obj._dense, obj._pairs = mat, None
        return obj

    @classmethod
    def _from_pairs(cls, source, target, pairs: frozenset) -> "Correspondence":
        source, target = as_set(source), as_set(target)
        if source.size * target.size <= DENSE_LIMIT:
            return cls(source, target, pairs)
        obj = cls.__new__(cls)
        obj.source, obj.target = source, target
        obj._dense, obj._pairs = None, frozenset(pairs)
        return obj

    # -- storage views -------------------------------------------------

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    @property
    def matrix(self) -> np.ndarray:
        """Dense boolean view (built on demand for sparse storage)."""
        if self._dense is not None:
            return self._dense
        mat = np.zeros((self.source.size, self.target.size), dtype=bool)
        for w, y in self._pairs:
            mat[w, y] = True
        return mat

    @property
    def pairs(self) -> frozenset[tuple[int, int]]:
        if self._pairs is not None:
            return self._pairs
        ws, ys = np.nonzero(self._dense)
        return frozenset(zip(ws.tolist(), ys.tolist()))

    def __len__(self) -> int:
        if self._dense is not None:
            return int(self._dense.sum())
        return len(self._pairs)

    def __contains__(self, pair) -> bool:
        w, y = pair
        if self._dense is not None:
            return bool(self._dense[w, y])
        return (w, y) in self._pairs

    def __eq__(self, other) -> bool:
        if not isinstance(other, Correspondence):
            return NotImplemented
        if (self.source, self.target) != (other.source, other.target):
            return False
        if self._dense is not None and other._dense is not None:
            return bool(np.array_equal(self._dense, other._dense))
        return self.pairs == other.pairs

    def __hash__(self):
        return hash((self.source, self.target, self.pairs))

    def __repr__(self) -> str:
        return f"Correspondence({self.source.size}x{self.target.size}, {sorted(self.pairs)})"

    # -- fibers ----------------------------------------------------------

    def foreset(self, y: int) -> frozenset[int]:
        """``{w : w R y}``."""
        self.target.check([y])
        if self._dense is not None:
            return frozenset(np.flatnonzero(self._dense[:, y]).tolist())
        return frozenset(w for w, yy in self._pairs if yy == y)

    def foreset_of_set(self, ys: Iterable[int]) -> frozenset[int]:
        ys = self.target.check(ys)
        if not ys:
            return frozenset()
        if self._dense is not None:
            cols = self._dense[:, sorted(ys)]
            return frozenset(np.flatnonzero(cols.any(axis=1)).tolist())
        return frozenset(w for w, y in self._pairs if y in ys)

    def afterset(self, w: int) -> frozenset[int]:
        """``{y : w R y}``."""
        self.source.check([w])
        if self._dense is not None:
            return frozenset(np.flatnonzero(self._dense[w]).tolist())
        return frozenset(y for ww, y in self._pairs if ww == w)

    def afterset_of_set(self, ws: Iterable[int]) -> frozenset[int]:
        ws = self.source.check(ws)
        if not ws:
            return frozenset()
        if self._dense is not None:
            rows = self._dense[sorted(ws)]
            return frozenset(np.flatnonzero(rows.any(axis=0)).tolist())
        return frozenset(y for w, y in self._pairs if w in ws)

    def domain(self) -> frozenset[int]:
        if self._dense is not None:
            return frozenset(np.flatnonzero(self._dense.any(axis=1)).tolist())
        return frozenset(w for w, _ in self._pairs)

    def range(self) -> frozenset[int]:
        if self._dense is not None:
            return frozenset(np.flatnonzero(self._dense.any(axis=0)).tolist())
        return frozenset(y for _, y in self._pairs)

    # -- algebra ---------------------------------------------------------

    def inverse(self) -> "Correspondence":
        if self._dense is not None:
            return Correspondence.from_matrix(self._dense.T, self.target, self.source)
        return Correspondence._from_pairs(
            self.target, self.source, frozenset((y, w) for w, y in self._pairs)
        )

    def compose(self, other: "Correspondence") -> "Correspondence":
        """Relational composition ``self`` then ``other``."""
        if self.target != other.source:
            raise ValueError("middle sets of the composition do not match")
        n, v = self.source.size, other.target.size
        if self._dense is not None and other._dense is not None and n * v <= DENSE_LIMIT:
            prod = self._dense.astype(np.int64) @ other._dense.astype(np.int64)
            return Correspondence.from_matrix(prod > 0, self.source, other.target)
        after = defaultdict(set)
        for x, z in other.pairs:
            after[x].add(z)
        out = frozenset((w, z) for w, x in self.pairs for z in after.get(x, ()))
        return Correspondence._from_pairs(self.source, other.target, out)

    def _check_same_sets(self, other: "Correspondence"):
        if (self.source, self.target) != (other.source, other.target):
            raise ValueError("correspondences live on different products")

    def union(self, other: "Correspondence") -> "Correspondence":
        self._check_same_sets(other)
        if self._dense is not None and other._dense is not None:
            return Correspondence.from_matrix(self._dense | other._dense, self.source, self.target)
        return Correspondence._from_pairs(self.source, self.target, self.pairs | other.pairs)

    def intersection(self, other: "Correspondence") -> "Correspondence":
        self._check_same_sets(other)
        if self._dense is not None and other._dense is not None:
            return Correspondence.from_matrix(self._dense & other._dense, self.source, self.target)
        return Correspondence._from_pairs(self.source, self.target, self.pairs & other.pairs)

    __or__ = union
    __and__ = intersection

    def issubset(self, other: "Correspondence") -> bool:
        self._check_same_sets(other)
        if self._dense is not None and other._dense is not None:
            return not bool((self._dense & ~other._dense).any())
        return self.pairs <= other.pairs

    __le__ = issubset

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        out = {"source": self.source.size, "target": self.target.size, "pairs": [list(p) for p in sorted(self.pairs)]}
        if self.source.labels is not None:
            out["source_labels"] = list(self.source.labels)
        if self.target.labels is not None:
            out["target_labels"] = list(self.target.labels)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Correspondence":
        source = FiniteSet(int(data["source"]), data.get("source_labels"))
        target = FiniteSet(int(data["target"]), data.get("target_labels"))
        return cls(source, target, data.get("pairs", []))


# -- constructors -------------------------------------------------------------


def identity(s: FiniteSet | int) -> Correspondence:
    s = as_set(s)
    return Correspondence(s, s, ((i, i) for i in range(s.size)))


def graph_of_mapping(theta: Sequence[int], target: FiniteSet | int, source: FiniteSet | int | None = None) -> Correspondence:
    """Graph ``{(w, theta[w])}`` of a total mapping given as a table."""
    source = as_set(len(theta) if source is None else source)
    if len(theta) != source.size:
        raise ValueError("mapping table must be total on the source")
    return Correspondence(source, target, ((w, int(t)) for w, t in enumerate(theta)))


def graph_of_set_valued(images: Sequence[Iterable[int]], target: FiniteSet | int, source: FiniteSet | int | None = None) -> Correspondence:
    """Graph ``{(w, y) : y in images[w]}`` of a set-valued mapping."""
    source = as_set(len(images) if source is None else source)
    if len(images) != source.size:
        raise ValueError("image table must be total on the source")
    return Correspondence(source, target, ((w, int(y)) for w, ys in enumerate(images) for y in ys))


def rectangle(source: FiniteSet | int, target: FiniteSet | int, a: Iterable[int], b: Iterable[int]) -> Correspondence:
    source, target = as_set(source), as_set(target)
    a, b = source.check(a), target.check(b)
    return Correspondence(source, target, ((w, y) for w in a for y in b))


def marginal_correspondence(w_set: FiniteSet | int, y_set: FiniteSet | int) -> Correspondence:
    """``(w, y) -> y'`` iff ``y == y'``, source indexed with ``w`` fastest."""
    w_set, y_set = as_set(w_set), as_set(y_set)
    n_w = w_set.size
    prod = FiniteSet(n_w * y_set.size)
    return Correspondence(
        prod, y_set, ((product_index(w, y, n_w), y) for y in range(y_set.size) for w in range(n_w))
    )
