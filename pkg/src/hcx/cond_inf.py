"""Conditional infimum and supremum of extended-real functions on finite sets.

For ``f : W -> [-inf, +inf]`` and a correspondence ``R`` between ``W`` and
``Y`` the conditional infimum is the function on ``Y``

    cond_inf(f, R)(y) = inf { f(w) : w R y },

with ``inf`` of the empty set equal to ``+inf`` (and ``sup`` of the empty set
equal to ``-inf`` for the conditional supremum).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .correspondence import (
    Correspondence,
    FiniteSet,
    as_set,
    graph_of_mapping,
    marginal_correspondence,
)
from .extended_real import INF, NEG_INF, ExtReal, check_array, lower_add, to_json, upper_add


@dataclass(frozen=True, eq=False)
class ExtRealFunction:
    """Total table of extended reals indexed by ``domain``."""

    domain: FiniteSet
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "domain", as_set(self.domain))
        vals = check_array(self.values).reshape(-1)
        if vals.shape[0] != self.domain.size:
            raise ValueError(f"expected {self.domain.size} values, got {vals.shape[0]}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, values: Sequence[float]) -> "ExtRealFunction":
        vals = check_array(values).reshape(-1)
        return cls(FiniteSet(vals.shape[0]), vals)

    def __call__(self, i: int) -> ExtReal:
        return ExtReal(self.values[i])

    def __len__(self) -> int:
        return self.domain.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExtRealFunction):
            return NotImplemented
        return self.domain == other.domain and bool(np.array_equal(self.values, other.values))

    def __le__(self, other: "ExtRealFunction") -> bool:
        _same_domain(self, other)
        return bool(np.all(self.values <= other.values))

    def __ge__(self, other: "ExtRealFunction") -> bool:
        return other.__le__(self)

    def __neg__(self) -> "ExtRealFunction":
        return ExtRealFunction(self.domain, -self.values)

    def __repr__(self) -> str:
        return f"ExtRealFunction({[to_json(v) for v in self.values]})"

    def map(self, phi) -> "ExtRealFunction":
        """Pointwise ``phi`` applied to the value array."""
        return ExtRealFunction(self.domain, phi(self.values))

    def to_json(self) -> dict:
        return {"size": self.domain.size, "values": [to_json(v) for v in self.values]}


def _same_domain(f: ExtRealFunction, g: ExtRealFunction):
    if f.domain != g.domain:
        raise ValueError("functions live on different sets")


def pointwise_min(*fs: ExtRealFunction) -> ExtRealFunction:
    for g in fs[1:]:
        _same_domain(fs[0], g)
    return ExtRealFunction(fs[0].domain, np.min([f.values for f in fs], axis=0))


def pointwise_max(*fs: ExtRealFunction) -> ExtRealFunction:
    for g in fs[1:]:
        _same_domain(fs[0], g)
    return ExtRealFunction(fs[0].domain, np.max([f.values for f in fs], axis=0))


def func_upper_add(f: ExtRealFunction, g) -> ExtRealFunction:
    """``f (+upper) g`` with ``g`` a function or a constant."""
    if isinstance(g, ExtRealFunction):
        _same_domain(f, g)
        g = g.values
    return ExtRealFunction(f.domain, upper_add(f.values, np.broadcast_to(np.asarray(g, float), f.values.shape)))


def func_lower_add(f: ExtRealFunction, g) -> ExtRealFunction:
    if isinstance(g, ExtRealFunction):
        _same_domain(f, g)
        g = g.values
    return ExtRealFunction(f.domain, lower_add(f.values, np.broadcast_to(np.asarray(g, float), f.values.shape)))


# -- optimization over a subset ---------------------------------------------


def inf_over_subset(f: ExtRealFunction, subset: Iterable[int]) -> ExtReal:
    idx = sorted(f.domain.check(subset))
    return ExtReal(f.values[idx].min(initial=INF))


def sup_over_subset(f: ExtRealFunction, subset: Iterable[int]) -> ExtReal:
    idx = sorted(f.domain.check(subset))
    return ExtReal(f.values[idx].max(initial=NEG_INF))


def argmin_over_subset(f: ExtRealFunction, subset: Iterable[int]) -> frozenset[int]:
    idx = sorted(f.domain.check(subset))
    if not idx:
        return frozenset()
    best = f.values[idx].min()
    return frozenset(i for i in idx if f.values[i] == best)


def argmax_over_subset(f: ExtRealFunction, subset: Iterable[int]) -> frozenset[int]:
    idx = sorted(f.domain.check(subset))
    if not idx:
        return frozenset()
    best = f.values[idx].max()
    return frozenset(i for i in idx if f.values[i] == best)


# -- conditional infimum / supremum -------------------------------------------


def _fiber_reduce(f: ExtRealFunction, rel: Correspondence, fill: float, reduce) -> np.ndarray:
    if f.domain != rel.source:
        raise ValueError("function domain differs from the correspondence source")
    m = rel.target.size
    if rel.is_dense:
        table = np.where(rel.matrix, f.values[:, None], fill)
        return reduce(table, axis=0, initial=fill) if table.size else np.full(m, fill)
    out = np.full(m, fill)
    for w, y in rel.pairs:
        out[y] = reduce([out[y], f.values[w]])
    return out


def cond_inf(f: ExtRealFunction, rel: Correspondence) -> ExtRealFunction:
    """``y -> inf of f over the foreset of y``; ``+inf`` off the range."""
    return ExtRealFunction(rel.target, _fiber_reduce(f, rel, INF, np.min))


def cond_sup(f: ExtRealFunction, rel: Correspondence) -> ExtRealFunction:
    """``y -> sup of f over the foreset of y``; ``-inf`` off the range."""
    return ExtRealFunction(rel.target, _fiber_reduce(f, rel, NEG_INF, np.max))


def cond_inf_mapping(f: ExtRealFunction, theta: Sequence[int], target: FiniteSet | int) -> ExtRealFunction:
    """Fiberwise infimum of ``f`` over the level sets of the mapping ``theta``."""
    target = as_set(target)
    if len(theta) != f.domain.size:
        raise ValueError("mapping table must be total on the domain of f")
    theta = np.asarray(theta, dtype=np.int64)
    if theta.size and (theta.min() < 0 or theta.max() >= target.size):
        raise IndexError("mapping value out of bounds")
    out = np.full(target.size, INF)
    np.minimum.at(out, theta, f.values)
    return ExtRealFunction(target, out)


def cond_sup_mapping(f: ExtRealFunction, theta: Sequence[int], target: FiniteSet | int) -> ExtRealFunction:
    return -cond_inf_mapping(-f, theta, target)


def compose_via_inverse_graph(g: ExtRealFunction, theta: Sequence[int], source: FiniteSet | int | None = None) -> ExtRealFunction:
    """``g o theta`` obtained as the conditional infimum over the inverse graph.

    The result is checked against direct pointwise composition.
    """
    rel = graph_of_mapping(theta, g.domain, source)
    out = cond_inf(g, rel.inverse())
    direct = g.values[np.asarray(theta, dtype=np.int64)] if len(theta) else np.empty(0)
    if not np.array_equal(out.values, direct):
        raise ArithmeticError("conditional infimum over the inverse graph differs from g o theta")
    return out


def characteristic(s: FiniteSet | int, subset: Iterable[int]) -> ExtRealFunction:
    """``0`` on ``subset``, ``+inf`` elsewhere."""
    s = as_set(s)
    vals = np.full(s.size, INF)
    vals[sorted(s.check(subset))] = 0.0
    return ExtRealFunction(s, vals)


def _product_table(h: ExtRealFunction, n_w: int, n_y: int) -> np.ndarray:
    if h.domain.size != n_w * n_y:
        raise ValueError(f"function on {h.domain.size} points is not defined on a {n_w}x{n_y} product")
    # index w + n_w * y  ->  row y, column w
    return h.values.reshape(n_y, n_w)


def marginalize_inf(h: ExtRealFunction, w_set: FiniteSet | int, y_set: FiniteSet | int) -> ExtRealFunction:
    """``y -> inf_w h(w, y)`` for ``h`` on the product ``W x Y``."""
    w_set, y_set = as_set(w_set), as_set(y_set)
    table = _product_table(h, w_set.size, y_set.size)
    return ExtRealFunction(y_set, table.min(axis=1, initial=INF))


def marginalize_sup(h: ExtRealFunction, w_set: FiniteSet | int, y_set: FiniteSet | int) -> ExtRealFunction:
    w_set, y_set = as_set(w_set), as_set(y_set)
    table = _product_table(h, w_set.size, y_set.size)
    return ExtRealFunction(y_set, table.max(axis=1, initial=NEG_INF))


def marginal_via_correspondence(h: ExtRealFunction, w_set, y_set) -> ExtRealFunction:
    """Same as :func:`marginalize_inf`, routed through the diagonal correspondence."""
    rel = marginal_correspondence(w_set, y_set)
    return cond_inf(ExtRealFunction(rel.source, h.values), rel)


def strict_epigraph(f: ExtRealFunction, grid: Sequence[float]) -> Correspondence:
    """Pairs ``(w, t)`` with ``f(w) < grid[t]``, as a relation into the grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or not np.all(np.isfinite(grid)):
        raise ValueError("threshold grid must be a finite 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("threshold grid must be strictly increasing")
    return Correspondence.from_matrix(f.values[:, None] < grid[None, :], f.domain, grid.shape[0])


def threshold_grid(*fs: ExtRealFunction) -> np.ndarray:
    """Finite values of the functions, their midpoints, and one value beyond each end."""
    vals = np.unique(np.concatenate([f.values[np.isfinite(f.values)] for f in fs] or [np.empty(0)]))
    if vals.size == 0:
        return np.array([0.0])
    mids = (vals[:-1] + vals[1:]) / 2
    return np.unique(np.concatenate([[vals[0] - 1.0], vals, mids, [vals[-1] + 1.0]]))


def run_law_suite(*args, **kwargs):
    """Run the executable law suite; see :func:`hcx.laws.run_law_suite`."""
    from .laws import run_law_suite as run

    return run(*args, **kwargs)
