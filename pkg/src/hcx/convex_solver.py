"""Small-scale convex minimization over simple convex subsets of the orthant.

Every set below is implicitly intersected with the nonnegative orthant.
Objectives are given by an evaluation callback and a (sub)gradient callback.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

logger = logging.getLogger(__name__)

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_CYCLES = 200_000


class InfeasibleSetError(ValueError):
    """The described set has no point in the nonnegative orthant."""


class ProjectionError(RuntimeError):
    """Alternating projections did not settle within budget."""


def _vec(x, d=None, name="vector") -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if d is not None and arr.shape[0] != d:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {d}")
    return arr


def _check_dim(y, d: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (d,):
        raise ValueError(f"point has shape {y.shape}, expected ({d},)")
    return y


# -- set descriptors -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Box:
    """``max(lower, 0) <= y <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _vec(self.lower, name="lower")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", _vec(self.upper, lo.shape[0], "upper"))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def is_empty(self) -> bool:
        return bool(np.any(np.maximum(self.lower, 0.0) > self.upper))

    def contains(self, y, tol=0.0) -> bool:
        return bool(self.mask(_check_dim(y, self.dim)[None, :], tol)[0])

    def mask(self, ys, tol=0.0) -> np.ndarray:
        """Row-wise membership for an ``(n, d)`` array."""
        return np.all(ys >= np.maximum(self.lower, 0.0) - tol, axis=1) & np.all(ys <= self.upper + tol, axis=1)

    def project(self, y) -> np.ndarray:
        _require_nonempty(self)
        return np.clip(_check_dim(y, self.dim), np.maximum(self.lower, 0.0), self.upper)

    def bounding_box(self):
        return np.maximum(self.lower, 0.0), self.upper.copy()

    def to_json(self) -> dict:
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class Band:
    """``l <= s'y <= u`` within the orthant."""

    s: np.ndarray
    l: float
    u: float

    def __post_init__(self):
        object.__setattr__(self, "s", _vec(self.s, name="s"))
        l, u = float(self.l), float(self.u)
        if math.isnan(l) or math.isnan(u):
            raise ValueError("band limits must not be NaN")
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "u", u)

    @property
    def dim(self) -> int:
        return self.s.shape[0]

    def _reach(self):
        lo = -math.inf if np.any(self.s < 0) else 0.0
        hi = math.inf if np.any(self.s > 0) else 0.0
        return lo, hi

    def is_empty(self) -> bool:
        lo, hi = self._reach()
        return self.l > self.u or self.l > hi or self.u < lo

    def contains(self, y, tol=0.0) -> bool:
        return bool(self.mask(_check_dim(y, self.dim)[None, :], tol)[0])

    def mask(self, ys, tol=0.0) -> np.ndarray:
        v = ys @ self.s
        return np.all(ys >= -tol, axis=1) & (v >= self.l - tol) & (v <= self.u + tol)

    def _slab_value(self, z, lam):
        return float(self.s @ np.maximum(z - lam * self.s, 0.0))

    def _solve_multiplier(self, z, target) -> float:
        """Root of ``phi(lam) = s'max(z - lam s, 0) = target``.

        ``phi`` is continuous, nonincreasing and piecewise linear with kinks at
        ``z_i / s_i``, so the root is found on the bracketing piece exactly.
        """
        nz = self.s != 0
        pts = np.unique(np.concatenate([[0.0], z[nz] / self.s[nz]]))
        vals = np.maximum(z[None, :] - pts[:, None] * self.s[None, :], 0.0) @ self.s
        if target > vals[0] or target < vals[-1]:
            # beyond the outer kinks phi is linear with slope -sum of active s_i^2
            k, probe = (0, pts[0] - 1.0) if target > vals[0] else (-1, pts[-1] + 1.0)
            active = (z - probe * self.s) > 0
            slope = -float(self.s[active] @ self.s[active])
            if slope == 0:
                raise InfeasibleSetError("band level not reachable inside the orthant")
            return float(pts[k] + (target - vals[k]) / slope)
        k = int(np.searchsorted(-vals, -target, side="left"))
        if vals[k] == target or k == 0:
            return float(pts[k])
        a, b, fa, fb = pts[k - 1], pts[k], vals[k - 1], vals[k]
        return float(a + (target - fa) * (b - a) / (fb - fa))

    def project(self, y) -> np.ndarray:
        """Exact projection through the scalar multiplier of the active band side."""
        _require_nonempty(self)
        z = _check_dim(y, self.dim)
        v0 = self._slab_value(z, 0.0)
        if self.l <= v0 <= self.u:
            return np.maximum(z, 0.0)
        target = self.u if v0 > self.u else self.l
        lam = self._solve_multiplier(z, target)
        return np.maximum(z - lam * self.s, 0.0)

    def bounding_box(self):
        d = self.dim
        hi = np.full(d, math.inf)
        if np.all(self.s > 0) and math.isfinite(self.u):
            hi = self.u / self.s
        return np.zeros(d), hi

    def to_json(self) -> dict:
        return {"type": "band", "s": self.s.tolist(), "l": self.l, "u": self.u}


@dataclass(frozen=True, eq=False)
class Halfspaces:
    """Intersection of ``a'y <= c`` rows."""

    rows: tuple

    def __post_init__(self):
        rows = tuple((_vec(a, name="a"), float(c)) for a, c in self.rows)
        if not rows:
            raise ValueError("at least one halfspace row is required")
        d = rows[0][0].shape[0]
        for a, c in rows:
            if a.shape[0] != d or math.isnan(c):
                raise ValueError("halfspace rows must share a dimension and have finite offsets")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return self.rows[0][0].shape[0]

    @property
    def A(self) -> np.ndarray:
        return np.array([a for a, _ in self.rows])

    @property
    def c(self) -> np.ndarray:
        return np.array([c for _, c in self.rows])

    def is_empty(self) -> bool:
        return self._empty

    @cached_property
    def _empty(self) -> bool:
        res = linprog(np.zeros(self.dim), A_ub=self.A, b_ub=self.c, bounds=[(0, None)] * self.dim, method="highs")
        return res.status == 2

    def contains(self, y, tol=0.0) -> bool:
        return bool(self.mask(_check_dim(y, self.dim)[None, :], tol)[0])

    def mask(self, ys, tol=0.0) -> np.ndarray:
        return np.all(ys >= -tol, axis=1) & np.all(ys @ self.A.T <= self.c + tol, axis=1)

    def project(self, y) -> np.ndarray:
        _require_nonempty(self)
        z = _check_dim(y, self.dim)
        if self.contains(z):
            return z.copy()
        factors = [_orthant_proj] + [_halfspace_proj(a, c) for a, c in self.rows]
        return dykstra(factors, z)

    def bounding_box(self):
        d = self.dim
        hi = np.full(d, math.inf)
        for i in range(d):
            obj = np.zeros(d)
            obj[i] = -1.0
            res = linprog(obj, A_ub=self.A, b_ub=self.c, bounds=[(0, None)] * d, method="highs")
            if res.status == 0:
                hi[i] = -res.fun
        return np.zeros(d), hi

    def to_json(self) -> dict:
        return {"type": "halfspaces", "rows": [{"a": a.tolist(), "c": c} for a, c in self.rows]}


@dataclass(frozen=True, eq=False)
class Ball:
    """Euclidean ball ``|y - center| <= radius`` within the orthant."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, name="center"))
        r = float(self.radius)
        if math.isnan(r):
            raise ValueError("radius must not be NaN")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def is_empty(self) -> bool:
        return self.radius < 0 or float(np.linalg.norm(np.minimum(self.center, 0.0))) > self.radius

    def contains(self, y, tol=0.0) -> bool:
        return bool(self.mask(_check_dim(y, self.dim)[None, :], tol)[0])

    def mask(self, ys, tol=0.0) -> np.ndarray:
        return np.all(ys >= -tol, axis=1) & (np.linalg.norm(ys - self.center, axis=1) <= self.radius + tol)

    def project(self, y) -> np.ndarray:
        _require_nonempty(self)
        y = _check_dim(y, self.dim)
        if self.contains(y):
            return y.copy()
        # for a fixed ball multiplier mu the orthant part separates:
        # y(mu) = max((y + mu c) / (1 + mu), 0), and |y(mu) - c| decreases in mu
        c, r = self.center, self.radius

        def at(mu):
            return np.maximum((y + mu * c) / (1.0 + mu), 0.0)

        lo, hi = 0.0, 1.0
        while np.linalg.norm(at(hi) - c) > r:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                raise ProjectionError("ball multiplier did not bracket")
        for _ in range(2000):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if np.linalg.norm(at(mid) - c) > r:
                lo = mid
            else:
                hi = mid
        return at(hi)

    def bounding_box(self):
        return np.maximum(self.center - self.radius, 0.0), np.maximum(self.center + self.radius, 0.0)

    def to_json(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


ConvexSetDescriptor = Box | Band | Halfspaces | Ball


def from_json(data: dict) -> ConvexSetDescriptor:
    kind = data.get("type")
    if kind == "box":
        return Box(data["lower"], data["upper"])
    if kind == "band":
        return Band(data["s"], data["l"], data["u"])
    if kind == "halfspaces":
        return Halfspaces(tuple((r["a"], r["c"]) for r in data["rows"]))
    if kind == "ball":
        return Ball(data["center"], data["radius"])
    raise ValueError(f"unknown set type {kind!r}")


def _require_nonempty(cset):
    if cset.is_empty():
        raise InfeasibleSetError(f"{type(cset).__name__} set is empty within the orthant")


def contains(cset: ConvexSetDescriptor, y, tol: float = 0.0) -> bool:
    return cset.contains(y, tol)


def project(cset: ConvexSetDescriptor, y) -> np.ndarray:
    """Euclidean projection onto ``cset`` intersected with the orthant."""
    return cset.project(y)


# -- Dykstra ----------------------------------------------------------------------


def _orthant_proj(y):
    return np.maximum(y, 0.0)


def _halfspace_proj(a, c):
    aa = float(a @ a)

    def proj(y):
        excess = float(a @ y) - c
        if excess <= 0 or aa == 0:
            return y
        return y - (excess / aa) * a

    return proj


def _ball_proj(center, radius):
    def proj(y):
        diff = y - center
        nrm = float(np.linalg.norm(diff))
        if nrm <= radius:
            return y
        return center + diff * (radius / nrm)

    return proj


def slab_proj(s, l, u):
    """Projection onto ``l <= s'y <= u`` without the orthant."""
    ss = float(s @ s)

    def proj(y):
        v = float(s @ y)
        if v > u:
            return y - ((v - u) / ss) * s
        if v < l:
            return y + ((l - v) / ss) * s
        return y

    return proj


def dykstra(factors: Sequence[Callable], y, tol: float = DYKSTRA_TOL, max_cycles: int = DYKSTRA_MAX_CYCLES) -> np.ndarray:
    """Projection onto an intersection by Dykstra's alternating projections.

    Stops when both the iterate and the correction increments move less than
    ``tol * (1 + |y|)`` over a full cycle.
    """
    x = np.array(y, dtype=float)
    # displacement test relative to the input scale; 1e-10 absolute is below rounding for large inputs
    tol = tol * (1.0 + float(np.linalg.norm(x)))
    incs = [np.zeros_like(x) for _ in factors]
    for _ in range(max_cycles):
        start = x.copy()
        inc_change = 0.0
        for k, proj in enumerate(factors):
            z = x + incs[k]
            x_new = proj(z)
            inc_change += float(np.sum((z - x_new - incs[k]) ** 2))
            incs[k] = z - x_new
            x = x_new
        # x can stall while the increments still drift; require both to settle
        if np.linalg.norm(x - start) <= tol and math.sqrt(inc_change) <= tol:
            return x
    raise ProjectionError("Dykstra projections did not settle")


# -- minimization ---------------------------------------------------------------


@dataclass
class SolverParams:
    max_iter: int = 3000
    step_constant: float | None = None
    tol: float = 1e-12
    smoothing: tuple[float, ...] = (1e-2, 1e-4, 1e-6, 1e-9, 1e-12)
    seed: int = 0
    n_starts: int = 5
    polish_iter: int = 2000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class MinimizeResult:
    y: np.ndarray
    value: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


def _scale_box(cset):
    lo, hi = cset.bounding_box()
    finite_hi = np.where(np.isfinite(hi), hi, np.nan)
    span = np.nanmax(finite_hi - lo) if np.any(np.isfinite(hi)) else 0.0
    scale = 1.0 + (span if np.isfinite(span) else 0.0)
    hi = np.where(np.isfinite(hi), hi, lo + scale)
    return lo, hi


def default_starts(cset, n_starts: int, seed: int) -> list[np.ndarray]:
    """Projected bounding-box center followed by seeded projected corners."""
    lo, hi = _scale_box(cset)
    d = lo.shape[0]
    starts = [cset.project(0.5 * (lo + hi))]
    rng = np.random.default_rng(seed)
    if d <= 10:
        corners = list(itertools.product((0, 1), repeat=d))
        order = rng.permutation(len(corners))
        picks = [np.array(corners[i]) for i in order[: max(n_starts - 1, 0)]]
    else:
        picks = [rng.integers(0, 2, size=d) for _ in range(max(n_starts - 1, 0))]
    for bits in picks:
        starts.append(cset.project(np.where(bits == 1, hi, lo)))
    return starts


def _subgradient_run(fun, grad, cset, y0, params: SolverParams, diam: float):
    y = cset.project(y0)
    fy = fun(y)
    best_y, best_f = y.copy(), fy
    g = grad(y)
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0:
        return best_y, best_f, 0, True
    c = params.step_constant if params.step_constant is not None else diam / gnorm
    window, last_best = 50, best_f
    for k in range(1, params.max_iter + 1):
        gn = float(np.linalg.norm(g))
        if gn == 0:
            return best_y, best_f, k, True
        # step length capped at c*|g0|/sqrt(k): gradients blow up near the orthant boundary
        y = cset.project(y - (c / math.sqrt(k)) * g / max(gn / max(gnorm, 1e-300), 1.0))
        fy = fun(y)
        if fy < best_f:
            best_y, best_f = y.copy(), fy
        g = grad(y)
        if k % window == 0:
            if abs(last_best - best_f) <= params.tol * (1.0 + abs(best_f)):
                return best_y, best_f, k, True
            last_best = best_f
    return best_y, best_f, params.max_iter, False


def _polish(fun, grad, cset, y, fy, params: SolverParams, diam: float):
    """Projected gradient with backtracking from the best subgradient iterate."""
    t = 1.0
    for k in range(1, params.polish_iter + 1):
        g = grad(y)
        gn = float(np.linalg.norm(g))
        # trial points stay within one diameter so projections see nearby inputs
        if gn > 0:
            t = min(t, diam / gn)
        while True:
            y_new = cset.project(y - t * g)
            step = y_new - y
            f_new = fun(y_new)
            if f_new <= fy + float(g @ step) + float(step @ step) / (2 * t) + 1e-15 * (1 + abs(fy)):
                break
            t *= 0.5
            if t < 1e-20:
                return y, fy, k, True
        moved = float(np.linalg.norm(step))
        if f_new <= fy:
            y, fy = y_new, f_new
        if moved <= 1e-13 * (1.0 + float(np.linalg.norm(y))):
            return y, fy, k, True
        t *= 2.0
    return y, fy, params.polish_iter, False


def minimize(fun: Callable, grad: Callable, cset: ConvexSetDescriptor, params: SolverParams | None = None, starts=None) -> MinimizeResult:
    """Projected subgradient descent with ``c/sqrt(k)`` steps, best-iterate tracking,
    multistart, and a backtracking projected-gradient polish.

    Returns the best feasible point found.  ``converged`` is False when the
    iteration budget ran out before the objective settled.
    """
    params = params or SolverParams()
    _require_nonempty(cset)
    lo, hi = _scale_box(cset)
    diam = float(np.linalg.norm(hi - lo)) or 1.0
    if starts is None:
        starts = default_starts(cset, params.n_starts, params.seed)
    best = None
    total_iters = 0
    converged_any = False
    history = []
    for y0 in starts:
        y, fy, it, conv = _subgradient_run(fun, grad, cset, y0, params, diam)
        y, fy, it2, conv2 = _polish(fun, grad, cset, y, fy, params, diam)
        total_iters += it + it2
        converged_any = converged_any or conv or conv2
        history.append((fy, y.tolist()))
        # deterministic best-of: lower value, then lexicographically smaller point
        if best is None or fy < best[1] or (fy == best[1] and tuple(y) < tuple(best[0])):
            best = (y, fy)
    y, fy = best
    return MinimizeResult(y=y, value=float(fy), iterations=total_iters, converged=converged_any, history=history)
