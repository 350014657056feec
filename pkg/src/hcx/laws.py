"""Executable law suite for the conditional infimum.

Every law is checked as an exact identity or inequality between extended
reals, first exhaustively on tiny instances (all sets of size at most 2,
function values in {-inf, -1, 0, 1, +inf}) and then on seeded random
instances.  Failures are collected, never raised.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from .cond_inf import (
    ExtRealFunction,
    argmin_over_subset,
    characteristic,
    cond_inf,
    cond_sup,
    func_lower_add,
    func_upper_add,
    inf_over_subset,
    pointwise_max,
    pointwise_min,
    strict_epigraph,
    threshold_grid,
)
from .correspondence import Correspondence, FiniteSet, graph_of_mapping
from .extended_real import INF, NEG_INF, lower_add, to_json, upper_add

TINY_VALUES = (NEG_INF, -1.0, 0.0, 1.0, INF)
TINY_SIZES = (0, 1, 2)
MAX_REPORTED = 25


@dataclass
class LawReport:
    law: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)
    failure_count: int = 0

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def to_json(self) -> dict:
        return {"law": self.law, "cases": self.cases, "failures": list(self.failures), "failure_count": self.failure_count}


class Ops:
    """Primitive operations the laws are checked against.

    Tests substitute a faulty ``compose`` to make sure the suite notices.
    """

    def compose(self, r: Correspondence, s: Correspondence) -> Correspondence:
        return r.compose(s)


class DropPairCompose(Ops):
    """Mutant: composition that loses its first pair."""

    def compose(self, r, s):
        full = r.compose(s)
        pairs = sorted(full.pairs)
        return Correspondence(full.source, full.target, pairs[1:])


# -- instance generation -------------------------------------------------------


@lru_cache(maxsize=None)
def _all_relations(n: int, m: int) -> tuple[Correspondence, ...]:
    out = []
    for mask in range(2 ** (n * m)):
        bits = [(mask >> k) & 1 for k in range(n * m)]
        out.append(Correspondence.from_matrix(np.array(bits, dtype=bool).reshape(n, m), n, m))
    return tuple(out)


@lru_cache(maxsize=None)
def _all_functions(n: int) -> tuple[ExtRealFunction, ...]:
    return tuple(ExtRealFunction(FiniteSet(n), np.array(v, dtype=float)) for v in itertools.product(TINY_VALUES, repeat=n))


def _all_subsets(n: int):
    for mask in range(2**n):
        yield frozenset(i for i in range(n) if (mask >> i) & 1)


def _all_maps(n: int, m: int):
    return itertools.product(range(m), repeat=n)


_RANDOM_VALUES = np.array([NEG_INF, -3, -2, -1, 0, 1, 2, 3, INF], dtype=float)
_RANDOM_WEIGHTS = np.array([1, 2, 2, 2, 2, 2, 2, 2, 1], dtype=float) / 16


def random_function(rng: np.random.Generator, n: int) -> ExtRealFunction:
    return ExtRealFunction(FiniteSet(n), rng.choice(_RANDOM_VALUES, size=n, p=_RANDOM_WEIGHTS))


def random_relation(rng: np.random.Generator, n: int, m: int) -> Correspondence:
    return Correspondence.from_matrix(rng.random((n, m)) < 0.5, n, m)


def random_subset(rng: np.random.Generator, n: int) -> frozenset[int]:
    return frozenset(np.flatnonzero(rng.random(n) < 0.5).tolist())


def _size(rng, max_size, low=1):
    return int(rng.integers(low, max_size + 1))


# -- nondecreasing maps used by the monotony law -------------------------------


def _affine(a: float, c: float):
    def phi(t):
        t = np.asarray(t, dtype=float)
        if a == 0:
            return np.full_like(t, c)
        return a * t + c

    phi.__name__ = f"affine({a},{c})"
    return phi


def _clamp(lo: float, hi: float):
    def phi(t):
        return np.clip(np.asarray(t, dtype=float), lo, hi)

    phi.__name__ = f"clamp({lo},{hi})"
    return phi


def _step(tau: float):
    def phi(t):
        return np.where(np.asarray(t, dtype=float) < tau, 0.0, 1.0)

    phi.__name__ = f"step({tau})"
    return phi


PHI_FAMILY = (
    _affine(1.0, 0.0),
    _affine(2.0, -1.0),
    _affine(0.0, 5.0),
    _clamp(-1.0, 1.0),
    _step(0.0),
    _step(0.5),
)


def _fmt(*objs) -> str:
    parts = []
    for o in objs:
        if isinstance(o, ExtRealFunction):
            parts.append("f=" + str([to_json(v) for v in o.values]))
        elif isinstance(o, Correspondence):
            parts.append(f"R[{o.source.size}x{o.target.size}]=" + str(sorted(o.pairs)))
        else:
            parts.append(repr(o))
    return "; ".join(parts)


# -- the laws --------------------------------------------------------------------


@dataclass(frozen=True)
class Law:
    name: str
    exhaustive: Callable[[], Iterator]
    random: Callable[[np.random.Generator, int], object]
    check: Callable[[object, Ops], str | None]


# L1 strict epigraph


def _l1_exhaustive():
    for n in TINY_SIZES:
        for m in TINY_SIZES:
            for rel in _all_relations(n, m):
                for f in _all_functions(n):
                    yield rel, f


def _l1_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    return random_relation(rng, n, m), random_function(rng, n)


def _l1_check(inst, ops):
    rel, f = inst
    grid = threshold_grid(f)
    lhs = strict_epigraph(cond_inf(f, rel), grid)
    rhs = ops.compose(rel.inverse(), strict_epigraph(f, grid))
    if lhs != rhs:
        return f"strict epigraph mismatch: {_fmt(rel, f)}"
    return None


# L2 min-plus linearity and sublinearity


def _l2_exhaustive():
    for n in TINY_SIZES:
        for m in TINY_SIZES:
            for rel in _all_relations(n, m):
                for f, g in itertools.product(_all_functions(n), repeat=2):
                    yield rel, (f, g), None
                for f in _all_functions(n):
                    for r in TINY_VALUES:
                        yield rel, (f,), r


def _l2_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    fam = tuple(random_function(rng, n) for _ in range(int(rng.integers(1, 5))))
    r = float(rng.choice(_RANDOM_VALUES, p=_RANDOM_WEIGHTS))
    return random_relation(rng, n, m), fam, r


def _l2_check(inst, ops):
    rel, fam, r = inst
    infs = [cond_inf(f, rel) for f in fam]
    if cond_inf(pointwise_min(*fam), rel) != pointwise_min(*infs):
        return f"inf of a family not preserved: {_fmt(rel, *fam)}"
    if not pointwise_max(*infs) <= cond_inf(pointwise_max(*fam), rel):
        return f"sup of a family sublinearity fails: {_fmt(rel, *fam)}"
    if r is not None:
        f = fam[0]
        if cond_inf(func_upper_add(f, r), rel) != func_upper_add(infs[0], r):
            return f"additive shift by {r} fails: {_fmt(rel, f)}"
    if len(fam) >= 2:
        f, g = fam[0], fam[1]
        if not func_upper_add(infs[0], infs[1]) <= cond_inf(func_upper_add(f, g), rel):
            return f"superadditivity fails: {_fmt(rel, f, g)}"
    return None


# L3 monotony


def _l3_exhaustive():
    for n in TINY_SIZES:
        for m in TINY_SIZES:
            for rel in _all_relations(n, m):
                for f, h in itertools.product(_all_functions(n), repeat=2):
                    yield rel, f, pointwise_max(f, h), None
                for f in _all_functions(n):
                    for phi in PHI_FAMILY:
                        yield rel, f, None, phi


def _l3_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    f = random_function(rng, n)
    g = pointwise_max(f, random_function(rng, n))
    phi = PHI_FAMILY[int(rng.integers(len(PHI_FAMILY)))]
    return random_relation(rng, n, m), f, g, phi


def _l3_check(inst, ops):
    rel, f, g, phi = inst
    cf = cond_inf(f, rel)
    if g is not None:
        if f <= g and not cf <= cond_inf(g, rel):
            return f"monotony fails: {_fmt(rel, f, g)}"
    lo = inf_over_subset(f, range(f.domain.size))
    mid = inf_over_subset(f, rel.foreset_of_set(range(rel.target.size)))
    if not (lo <= mid and np.all(mid <= cf.values)):
        return f"global infimum sandwich fails: {_fmt(rel, f)}"
    if phi is not None:
        if not np.all(phi(cf.values) <= cond_inf(f.map(phi), rel).values):
            return f"nondecreasing {phi.__name__} inequality fails: {_fmt(rel, f)}"
    return None


# L4 two correspondences


def _l4_exhaustive():
    for n in TINY_SIZES:
        for m in TINY_SIZES:
            rels = _all_relations(n, m)
            for r, s in itertools.product(rels, repeat=2):
                for f in _all_functions(n):
                    yield r, s, f


def _l4_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    r = random_relation(rng, n, m)
    s = random_relation(rng, n, m)
    if rng.random() < 0.3:
        s = s | r
    return r, s, random_function(rng, n)


def _l4_check(inst, ops):
    r, s, f = inst
    cr, cs = cond_inf(f, r), cond_inf(f, s)
    if cond_inf(f, r | s) != pointwise_min(cr, cs):
        return f"union law fails: {_fmt(r, s, f)}"
    if not cond_inf(f, r & s) >= pointwise_max(cr, cs):
        return f"intersection law fails: {_fmt(r, s, f)}"
    if r <= s and not cr >= cs:
        return f"inclusion law fails: {_fmt(r, s, f)}"
    if not cond_inf(f, r & s) >= cr:
        return f"inclusion law fails on r&s <= r: {_fmt(r, s, f)}"
    return None


# L5 pushforward


def _l5_exhaustive():
    for n in TINY_SIZES:
        for m in TINY_SIZES:
            for rel in _all_relations(n, m):
                for b in _all_subsets(m):
                    for f in _all_functions(n):
                        yield rel, b, f


def _l5_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    return random_relation(rng, n, m), random_subset(rng, m), random_function(rng, n)


def _l5_check(inst, ops):
    rel, b, f = inst
    if inf_over_subset(cond_inf(f, rel), b) != inf_over_subset(f, rel.foreset_of_set(b)):
        return f"pushforward fails for B={sorted(b)}: {_fmt(rel, f)}"
    return None


# L6 tower


def _l6_exhaustive():
    for n, x, v in itertools.product(TINY_SIZES, repeat=3):
        for r in _all_relations(n, x):
            for s in _all_relations(x, v):
                for f in _all_functions(n):
                    yield r, s, f


def _l6_random(rng, k):
    n, x, v = _size(rng, k), _size(rng, k), _size(rng, k)
    return random_relation(rng, n, x), random_relation(rng, x, v), random_function(rng, n)


def _l6_check(inst, ops):
    r, s, f = inst
    if cond_inf(cond_inf(f, r), s) != cond_inf(f, ops.compose(r, s)):
        return f"tower property fails: {_fmt(r, s, f)}"
    return None


# L7 right composition with mappings


def _l7_exhaustive():
    for n, n2, m in itertools.product(TINY_SIZES, repeat=3):
        for rel in _all_relations(n, m):
            for theta in _all_maps(n, n2):
                for g in _all_functions(n2):
                    yield "pre", rel, g, theta, n2
    for n, m, k in itertools.product(TINY_SIZES, repeat=3):
        for rel in _all_relations(n, m):
            for theta in _all_maps(k, m):
                for f in _all_functions(n):
                    yield "post", rel, f, theta, k


def _l7_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    rel = random_relation(rng, n, m)
    if rng.random() < 0.5:
        n2 = _size(rng, k)
        theta = tuple(rng.integers(0, n2, size=n).tolist())
        return "pre", rel, random_function(rng, n2), theta, n2
    kk = _size(rng, k)
    theta = tuple(rng.integers(0, m, size=kk).tolist())
    return "post", rel, random_function(rng, n), theta, kk


def _l7_check(inst, ops):
    form, rel, fn, theta, _ = inst
    if form == "pre":
        # g o theta  with theta : W -> W'
        g = fn
        composed = ExtRealFunction(rel.source, g.values[list(theta)] if theta else np.empty(0))
        lhs = cond_inf(composed, rel)
        rhs = cond_inf(g, ops.compose(graph_of_mapping(theta, g.domain, rel.source).inverse(), rel))
    else:
        # theta : W'' -> Y
        f = fn
        cf = cond_inf(f, rel)
        lhs = ExtRealFunction(FiniteSet(len(theta)), cf.values[list(theta)] if theta else np.empty(0))
        rhs = cond_inf(f, ops.compose(rel, graph_of_mapping(theta, rel.target).inverse()))
    if lhs != rhs:
        return f"right composition ({form}) fails for theta={list(theta)}: {_fmt(rel, fn)}"
    return None


# L8 joint conditional infimum and supremum


def _l8_exhaustive():
    for n in TINY_SIZES:
        for m in TINY_SIZES:
            for rel in _all_relations(n, m):
                for f, g in itertools.product(_all_functions(n), repeat=2):
                    yield rel, f, g


def _l8_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    return random_relation(rng, n, m), random_function(rng, n), random_function(rng, n)


def _l8_check(inst, ops):
    rel, f, g = inst
    lhs = cond_inf(func_upper_add(f, g), rel)
    rhs = upper_add(cond_inf(f, rel).values, cond_sup(g, rel).values)
    if not np.all(lhs.values <= rhs):
        return f"joint inf/sup upper inequality fails: {_fmt(rel, f, g)}"
    lhs = cond_sup(func_lower_add(f, g), rel)
    rhs = lower_add(cond_sup(f, rel).values, cond_inf(g, rel).values)
    if not np.all(lhs.values >= rhs):
        return f"joint sup/inf lower inequality fails: {_fmt(rel, f, g)}"
    return None


# L9 injectivity


def _l9_exhaustive():
    for n in TINY_SIZES:
        for m in TINY_SIZES:
            rels = _all_relations(n, m)
            for r, s in itertools.product(rels, repeat=2):
                yield r, s


def _l9_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    return random_relation(rng, n, m), random_relation(rng, n, m)


def _l9_check(inst, ops):
    r, s = inst
    separated = False
    for w in range(r.source.size):
        delta = characteristic(r.source, [w])
        cr, cs = cond_inf(delta, r), cond_inf(delta, s)
        if cr != characteristic(r.target, r.afterset(w)):
            return f"characteristic image differs from the afterset at w={w}: {_fmt(r)}"
        separated = separated or cr != cs
    if (r != s) != separated:
        return f"characteristic probes fail to separate: {_fmt(r, s)}"
    return None


# L10 equality and implications between two problems


def _closure(rel: Correspondence, u: frozenset[int]) -> frozenset[int]:
    """Smallest superset of ``u`` stable under ``u -> R R^-1 u``."""
    while True:
        nxt = u | rel.foreset_of_set(rel.afterset_of_set(u))
        if nxt == u:
            return u
        u = nxt


def _l10_exhaustive():
    for n in TINY_SIZES:
        for m in TINY_SIZES:
            for rel in _all_relations(n, m):
                for f in _all_functions(n):
                    for p in _all_subsets(m):
                        for u in _all_subsets(n):
                            yield rel, f, p, u


def _l10_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    return random_relation(rng, n, m), random_function(rng, n), random_subset(rng, m), random_subset(rng, n)


def _l10_check(inst, ops):
    rel, f, p, u0 = inst
    h = cond_inf(f, rel)
    if inf_over_subset(f, rel.foreset_of_set(p)) != inf_over_subset(h, p):
        return f"image-set equality fails for P={sorted(p)}: {_fmt(rel, f)}"
    dom = rel.domain()
    u1 = u0 & dom
    if not u1 <= dom:
        return "constructed subset escapes the domain"
    if not inf_over_subset(f, u1) >= inf_over_subset(h, rel.afterset_of_set(u1)):
        return f"inequality fails for U={sorted(u1)}: {_fmt(rel, f)}"
    u2 = _closure(rel, u1)
    if not (rel.foreset_of_set(rel.afterset_of_set(u2)) <= u2 <= dom):
        return f"closure does not satisfy the hypothesis for U={sorted(u2)}: {_fmt(rel)}"
    if inf_over_subset(f, u2) != inf_over_subset(h, rel.afterset_of_set(u2)):
        return f"equality fails for stable U={sorted(u2)}: {_fmt(rel, f)}"
    return None


# L11 argmin transfer


def _l11_build(rel: Correspondence, f: ExtRealFunction, p: frozenset[int], extra: frozenset[int], pick: int):
    """Construct ``(rel, h, x_star, w_star, U)`` satisfying the transfer hypotheses."""
    n, m = rel.source.size, rel.target.size
    if n == 0 or m == 0:
        return None
    if not p:
        p = frozenset([pick % m])
    mat = rel.matrix.copy()
    while True:
        cur = Correspondence.from_matrix(mat, rel.source, rel.target)
        h = cond_inf(f, cur)
        x_star = min(argmin_over_subset(h, p))
        if mat[:, x_star].any():
            break
        mat[pick % n, x_star] = True
    w_star = min(argmin_over_subset(f, cur.foreset(x_star)))
    u = frozenset((extra & cur.foreset_of_set(p)) | {w_star})
    return cur, h, p, x_star, w_star, u


def _l11_exhaustive():
    for n in (1, 2):
        for m in (1, 2):
            for rel in _all_relations(n, m):
                for f in _all_functions(n):
                    for p in _all_subsets(m):
                        for extra in _all_subsets(n):
                            yield rel, f, p, extra, n + m


def _l11_random(rng, k):
    n, m = _size(rng, k), _size(rng, k)
    return (
        random_relation(rng, n, m),
        random_function(rng, n),
        random_subset(rng, m),
        random_subset(rng, n),
        int(rng.integers(0, 1000)),
    )


def _l11_check(inst, ops):
    built = _l11_build(*inst)
    if built is None:
        return None
    rel, h, p, x_star, w_star, u = built
    f = inst[1]
    # hypotheses, checked rather than assumed
    hyp = (
        h <= cond_inf(f, rel)
        and u <= rel.foreset_of_set(p)
        and x_star in argmin_over_subset(h, p)
        and f.values[w_star] == h.values[x_star]
        and w_star in u
    )
    if not hyp:
        return f"constructed instance violates the hypotheses: {_fmt(rel, f)}"
    if w_star not in argmin_over_subset(f, u):
        return f"lifted point w*={w_star} is not optimal on U={sorted(u)}: {_fmt(rel, f)}"
    return None


LAWS = (
    Law("L1 strict epigraph", _l1_exhaustive, _l1_random, _l1_check),
    Law("L2 min-plus linearity", _l2_exhaustive, _l2_random, _l2_check),
    Law("L3 monotony", _l3_exhaustive, _l3_random, _l3_check),
    Law("L4 two correspondences", _l4_exhaustive, _l4_random, _l4_check),
    Law("L5 pushforward", _l5_exhaustive, _l5_random, _l5_check),
    Law("L6 tower", _l6_exhaustive, _l6_random, _l6_check),
    Law("L7 right composition", _l7_exhaustive, _l7_random, _l7_check),
    Law("L8 joint inf/sup", _l8_exhaustive, _l8_random, _l8_check),
    Law("L9 injectivity", _l9_exhaustive, _l9_random, _l9_check),
    Law("L10 problem equality and implications", _l10_exhaustive, _l10_random, _l10_check),
    Law("L11 argmin transfer", _l11_exhaustive, _l11_random, _l11_check),
)


def run_law(law: Law, seed: int, max_set_size: int, case_count: int, *, exhaustive: bool = True, ops: Ops | None = None) -> LawReport:
    ops = ops or Ops()
    report = LawReport(law.name)
    failures = []

    def run(inst):
        report.cases += 1
        msg = law.check(inst, ops)
        if msg is not None:
            failures.append(msg)

    if exhaustive:
        for inst in law.exhaustive():
            run(inst)
    # one stream per law so that reports do not depend on law order
    rng = np.random.default_rng([seed, LAWS.index(law) if law in LAWS else 99])
    for _ in range(case_count):
        run(law.random(rng, max_set_size))
    failures = sorted(set(failures))
    report.failure_count = len(failures)
    report.failures = failures[:MAX_REPORTED]
    return report


def run_law_suite(seed: int = 1, max_set_size: int = 5, case_count: int = 1000, *, exhaustive: bool = True, ops: Ops | None = None, laws=None) -> list[LawReport]:
    """Run every law; returns one report per law."""
    if max_set_size < 1:
        raise ValueError("max_set_size must be at least 1")
    return [run_law(law, seed, max_set_size, case_count, exhaustive=exhaustive, ops=ops) for law in (laws or LAWS)]
