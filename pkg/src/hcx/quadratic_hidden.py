"""Hidden convexity of linear-quadratic minimization under the square mapping.

For ``q(x) = x'Mx + b'x`` and ``s(x) = (x_1^2, ..., x_d^2)`` the fiber
function ``g(y) = inf { q(x) : s(x) = y }`` is a minimum over the ``2^d`` sign
reflections of ``sqrt(y)``.  When a sign vector ``eps`` satisfies
``eps_i b_i <= 0`` and ``eps_i eps_j M_ij <= 0`` (i != j), ``g`` equals the
convex closed form ``surrogate_eval`` on the orthant, and minimizing ``q``
subject to ``s(x) in C`` reduces to a convex problem in ``y``; an optimal
``y*`` lifts to ``x* = eps * sqrt(y*)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import convex_solver as cs
from .extended_real import INF, ExtReal

ENUMERATION_LIMIT = 25
VALUE_TOL = 1e-6
FEAS_TOL = 1e-8


class NotSignableError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Raised by :func:`solve` when the iteration budget ran out; carries the report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    M: np.ndarray
    b: np.ndarray
    C: cs.ConvexSetDescriptor

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        d = b.shape[0]
        if d < 1:
            raise ValueError("dimension must be positive")
        if M.shape != (d, d):
            raise ValueError(f"M has shape {M.shape}, expected ({d}, {d})")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
            raise ValueError("M and b must be finite")
        if not np.array_equal(M, M.T):
            raise ValueError("M must be exactly symmetric")
        if self.C.dim != d:
            raise ValueError(f"set has dimension {self.C.dim}, expected {d}")
        M.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    @classmethod
    def from_upper_triangle(cls, dim: int, upper, b, C) -> "QuadraticProblem":
        """Build from the row-major upper triangle (diagonal included)."""
        upper = np.asarray(upper, dtype=float).reshape(-1)
        if upper.shape[0] != dim * (dim + 1) // 2:
            raise ValueError(f"upper triangle needs {dim * (dim + 1) // 2} entries, got {upper.shape[0]}")
        M = np.zeros((dim, dim))
        M[np.triu_indices(dim)] = upper
        M = M + np.triu(M, 1).T
        return cls(M, b, C)

    def upper_triangle(self) -> list[float]:
        return self.M[np.triu_indices(self.dim)].tolist()


def _mb(M, b):
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    if M.shape != (b.shape[0], b.shape[0]):
        raise ValueError("M and b dimensions disagree")
    return M, b


def q_eval(P: QuadraticProblem, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (P.dim,):
        raise ValueError(f"x has shape {x.shape}, expected ({P.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return float(x @ P.M @ x + P.b @ x)


def square_map(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x * x


# -- sign pattern ------------------------------------------------------------


class _ParityUnionFind:
    """Union-find where each node stores its parity relative to its parent."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.parity = [0] * n

    def find(self, i):
        path = []
        while self.parent[i] != i:
            path.append(i)
            i = self.parent[i]
        root, acc = i, 0
        for node in reversed(path):
            acc ^= self.parity[node]
            self.parity[node] = acc
            self.parent[node] = root
        return root

    def parity_to_root(self, i):
        self.find(i)
        return self.parity[i] if self.parent[i] != i else 0

    def union(self, i, j, rel) -> bool:
        """Impose ``parity(i) xor parity(j) == rel``; False on contradiction."""
        ri, rj = self.find(i), self.find(j)
        pi, pj = self.parity_to_root(i), self.parity_to_root(j)
        if ri == rj:
            return (pi ^ pj) == rel
        if self.rank[ri] < self.rank[rj]:
            ri, rj, pi, pj = rj, ri, pj, pi
        self.parent[rj] = ri
        self.parity[rj] = pi ^ pj ^ rel
        if self.rank[ri] == self.rank[rj]:
            self.rank[ri] += 1
        return True


def find_sign_pattern(M, b) -> np.ndarray | None:
    """A sign vector ``eps`` with ``eps_i b_i <= 0`` and ``eps_i eps_j M_ij <= 0``.

    Solved as a parity-constrained two-coloring: a positive off-diagonal entry
    forces opposite signs, a negative one equal signs, and a nonzero ``b_i``
    pins ``eps_i = -sign(b_i)``.  Components without a pinned node get
    ``+1`` on their smallest index.  Returns None when no pattern exists.
    """
    M, b = _mb(M, b)
    d = b.shape[0]
    anchor = d  # extra node standing for +1
    uf = _ParityUnionFind(d + 1)
    for i in range(d):
        if b[i] != 0 and not uf.union(i, anchor, 1 if b[i] > 0 else 0):
            return None
    for i, j in zip(*np.triu_indices(d, 1)):
        m = M[i, j]
        if m != 0 and not uf.union(int(i), int(j), 1 if m > 0 else 0):
            return None
    root_anchor = uf.find(anchor)
    eps = np.ones(d, dtype=int)
    rep_parity = {root_anchor: uf.parity_to_root(anchor)}
    for i in range(d):
        r = uf.find(i)
        if r not in rep_parity:
            # smallest index of an unpinned component gets +1
            rep_parity[r] = uf.parity_to_root(i)
        eps[i] = 1 if uf.parity_to_root(i) == rep_parity[r] else -1
    return eps


def satisfies_sign_condition(M, b, eps) -> bool:
    M, b = _mb(M, b)
    eps = np.asarray(eps)
    off = ~np.eye(b.shape[0], dtype=bool)
    return bool(np.all(eps * b <= 0) and np.all((np.outer(eps, eps) * M)[off] <= 0))


# -- fiber function, exact and closed form -------------------------------------


def _sign_patterns(d: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    stop = 2**d if stop is None else stop
    codes = np.arange(start, stop, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(d)[None, :]) & 1
    return 1 - 2 * bits


def cond_inf_exact(M, b, y) -> np.ndarray | float:
    """Exact fiber infimum of ``q`` over ``{x : s(x) = y}`` by enumerating signs.

    Accepts one point ``(d,)`` or a batch ``(n, d)``.  Patterns ``eps`` and
    ``-eps`` share the quadratic part, so only half are enumerated and the
    linear part enters as ``-|b'(eps r)|``.
    """
    M, b = _mb(M, b)
    d = b.shape[0]
    if d > ENUMERATION_LIMIT:
        raise ValueError(f"sign enumeration limited to d <= {ENUMERATION_LIMIT}")
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    ys = np.atleast_2d(y)
    if ys.shape[1] != d:
        raise ValueError("y has the wrong dimension")
    if np.any(ys < 0):
        raise ValueError("y must be nonnegative")
    # work on (d, n) rows; callers passing Fortran-ordered batches avoid a copy
    r_t = np.sqrt(np.ascontiguousarray(ys.T))
    iu, ju = np.triu_indices(d, 1)
    cross_t = np.empty((iu.shape[0], ys.shape[0]))
    for k, (i, j) in enumerate(zip(iu, ju)):
        np.multiply(r_t[i], r_t[j], out=cross_t[k])
    best = np.full(ys.shape[0], INF)
    half = 2 ** (d - 1)
    block = max(1, min(half, 2**22 // max(ys.shape[0], 1)))
    for start in range(0, half, block):
        # codes below 2^(d-1) fix the last sign to +1
        eps = _sign_patterns(d, start, min(start + block, half))
        cross = (2 * M[iu, ju][None, :] * eps[:, iu] * eps[:, ju]) @ cross_t
        lin = (b[None, :] * eps) @ r_t
        # (patterns, points) layout keeps the reduction across contiguous rows
        best = np.minimum(best, (cross - np.abs(lin)).min(axis=0))
    out = np.diag(M) @ (r_t * r_t) + best
    return float(out[0]) if single else out


def surrogate_eval(M, b, y):
    """Closed-form convex surrogate; ``+inf`` outside the orthant.

    The cross sum runs over ordered pairs ``i != j``.
    """
    M, b = _mb(M, b)
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    ys = np.atleast_2d(y)
    if ys.shape[1] != b.shape[0]:
        raise ValueError("y has the wrong dimension")
    outside = np.any(ys < 0, axis=1)
    r = np.sqrt(np.where(ys < 0, 0.0, ys))
    off = np.abs(M) - np.diag(np.abs(np.diag(M)))
    val = ys @ np.diag(M) - np.einsum("ni,ij,nj->n", r, off, r) - r @ np.abs(b)
    val = np.where(outside, INF, val)
    return ExtReal(val[0]) if single else val


def smoothed_surrogate_eval(M, b, y, mu: float):
    """Surrogate with ``sqrt(y_i)`` replaced by ``sqrt(y_i + mu)``, shifted to vanish at 0.

    Cross terms use ``sqrt((y_i + mu)(y_j + mu)) - mu``, a geometric mean of
    affine functions, so convexity is kept.
    """
    if mu == 0:
        return surrogate_eval(M, b, y)
    M, b = _mb(M, b)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        return INF
    r = np.sqrt(y + mu)
    off = np.abs(M) - np.diag(np.abs(np.diag(M)))
    return float(y @ np.diag(M) - (r @ off @ r - mu * off.sum()) - np.abs(b) @ (r - math.sqrt(mu)))


def surrogate_subgradient(M, b, y, mu: float = 0.0) -> np.ndarray:
    """Gradient of the ``mu``-smoothed surrogate (exact surrogate when ``mu == 0``)."""
    M, b = _mb(M, b)
    y = np.asarray(y, dtype=float)
    if y.shape != b.shape:
        raise ValueError("y has the wrong dimension")
    if mu < 0:
        raise ValueError("smoothing parameter must be nonnegative")
    if np.any(y < 0):
        raise ValueError("y must be nonnegative")
    if mu == 0 and np.any(y == 0):
        raise ValueError("exact gradient needs a strictly positive y; use mu > 0")
    r = np.sqrt(y + mu)
    off = np.abs(M) - np.diag(np.abs(np.diag(M)))
    return np.diag(M) - (off @ r) / r - np.abs(b) / (2 * r)


# -- convexity certificate -------------------------------------------------------


@dataclass
class Certificate:
    verdict: str  # "convex" | "violation" | "inconclusive"
    sign_pattern: np.ndarray | None = None
    witness: dict | None = None
    samples: int = 0

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "sign_pattern": None if self.sign_pattern is None else self.sign_pattern.tolist(),
            "witness": self.witness,
            "samples": self.samples,
        }


def _sample_orthant(rng, n, d):
    scale = 10.0 ** rng.uniform(-2, 2, size=(n, 1))
    y = scale * rng.random((n, d))
    y[rng.random((n, d)) < 0.15] = 0.0
    return y


def convexity_certificate(M, b, seed: int = 0, samples: int = 100_000, batch: int = 2000) -> Certificate:
    """Certify convexity of the fiber function, or find a midpoint violation.

    A sign pattern certifies convexity outright.  Otherwise seeded pairs
    ``y1, y2`` in the orthant are tried until ``g((y1+y2)/2)`` exceeds
    ``(g(y1)+g(y2))/2`` beyond rounding, with ``g`` the exact fiber function.
    """
    M, b = _mb(M, b)
    eps = find_sign_pattern(M, b)
    if eps is not None:
        return Certificate("convex", eps)
    d = b.shape[0]
    rng = np.random.default_rng(seed)
    used = 0
    while used < samples:
        n = min(batch, samples - used)
        y1 = _sample_orthant(rng, n, d)
        y2 = _sample_orthant(rng, n, d)
        near = rng.random(n) < 0.5
        y2[near] = np.abs(y1[near] + 0.1 * (y2[near] - y1[near]))
        mid = 0.5 * (y1 + y2)
        g1, g2, gm = cond_inf_exact(M, b, y1), cond_inf_exact(M, b, y2), cond_inf_exact(M, b, mid)
        tol = 1e-9 * (1.0 + np.abs(g1) + np.abs(g2))
        gap = gm - 0.5 * (g1 + g2) - tol
        hit = np.flatnonzero(gap > 0)
        if hit.size:
            k = hit[np.argmax(gap[hit])]
            used += int(k) + 1
            witness = {
                "y1": y1[k].tolist(),
                "y2": y2[k].tolist(),
                "g_y1": float(g1[k]),
                "g_y2": float(g2[k]),
                "g_mid": float(gm[k]),
                "excess": float(gm[k] - 0.5 * (g1[k] + g2[k])),
            }
            return Certificate("violation", None, witness, used)
        used += n
    return Certificate("inconclusive", None, None, used)


# -- solving ---------------------------------------------------------------------


@dataclass
class SolveReport:
    status: str  # "signable" | "not-signable"
    sign_pattern: list[int] | None = None
    y_star: list[float] | None = None
    surrogate_value: float | None = None
    x_star: list[float] | None = None
    q_at_x_star: float | None = None
    feasibility_residual: float | None = None
    iterations: int = 0
    converged: bool = True
    certificate: dict | None = None
    stages: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "sign_pattern": self.sign_pattern,
            "y_star": self.y_star,
            "surrogate_value": self.surrogate_value,
            "x_star": self.x_star,
            "q_at_x_star": self.q_at_x_star,
            "feasibility_residual": self.feasibility_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "certificate": self.certificate,
            "stages": self.stages,
        }


def _boundary_candidates(C, y):
    out = [C.project(np.zeros_like(y))]
    for i in range(y.shape[0]):
        z = y.copy()
        z[i] = 0.0
        out.append(C.project(z))
    return out


def solve(P: QuadraticProblem, params: cs.SolverParams | None = None) -> SolveReport:
    """Minimize ``q(x)`` subject to ``s(x) in C`` through the convex surrogate.

    Raises :class:`convex_solver.InfeasibleSetError` for an empty ``C`` and
    :class:`ConvergenceError` when the budget runs out.
    """
    params = params or cs.SolverParams()
    eps = find_sign_pattern(P.M, P.b)
    if eps is None:
        return SolveReport(status="not-signable")
    if P.C.is_empty():
        raise cs.InfeasibleSetError("constraint set is empty within the orthant")
    M, b, C = P.M, P.b, P.C

    iterations = 0
    stages = []
    starts = None
    best = None
    all_converged = True
    for mu in params.smoothing:
        res = cs.minimize(
            lambda y, mu=mu: smoothed_surrogate_eval(M, b, y, mu),
            lambda y, mu=mu: surrogate_subgradient(M, b, y, mu),
            C,
            params,
            starts=starts,
        )
        iterations += res.iterations
        all_converged = res.converged
        stages.append({"mu": mu, "value": res.value, "iterations": res.iterations, "converged": res.converged})
        starts = [res.y]
        best = res.y
    if np.all(best > 0):
        res = cs.minimize(
            lambda y: float(surrogate_eval(M, b, y)) if np.all(y > 0) else smoothed_surrogate_eval(M, b, y, 1e-300),
            lambda y: surrogate_subgradient(M, b, y, 0.0 if np.all(y > 0) else 1e-300),
            C,
            params,
            starts=[best],
        )
        iterations += res.iterations
        all_converged = res.converged
        stages.append({"mu": 0.0, "value": res.value, "iterations": res.iterations, "converged": res.converged})
        best = res.y

    # keep the best of the solver output and its projected boundary probes
    cands = [best] + _boundary_candidates(C, best)
    vals = [float(surrogate_eval(M, b, c)) for c in cands]
    k = min(range(len(cands)), key=lambda i: (vals[i], tuple(cands[i])))
    y_star, value = cands[k], vals[k]

    x_star = eps * np.sqrt(y_star)
    sx = square_map(x_star)
    residual = float(np.max(np.abs(sx - C.project(sx))))
    report = SolveReport(
        status="signable",
        sign_pattern=eps.tolist(),
        y_star=y_star.tolist(),
        surrogate_value=value,
        x_star=x_star.tolist(),
        q_at_x_star=q_eval(P, x_star),
        feasibility_residual=residual,
        iterations=iterations,
        converged=all_converged,
        stages=stages,
    )
    if abs(report.q_at_x_star - value) > VALUE_TOL * (1 + abs(value)):
        raise ArithmeticError("lifted point does not reproduce the surrogate value")
    if not all_converged:
        raise ConvergenceError("surrogate minimization did not converge within the iteration budget", report)
    return report


# -- grid oracle -------------------------------------------------------------------


@dataclass
class OracleResult:
    value: float
    y_arg: list[float]
    feasible_points: int
    resolution: int

    def to_json(self) -> dict:
        return {"value": self.value, "y_arg": self.y_arg, "feasible_points": self.feasible_points, "resolution": self.resolution}


def oracle_grid(P: QuadraticProblem, resolution: int = 401, bound=None, tol: float = 1e-9) -> OracleResult:
    """Minimum of the exact fiber function over the grid points of ``bound`` lying in ``C``.

    ``bound`` is ``(lower, upper)``; it defaults to the bounding box of ``C``.
    Ties go to the lexicographically smallest grid point.
    """
    d = P.dim
    if bound is None:
        lo, hi = P.C.bounding_box()
    else:
        lo, hi = (np.broadcast_to(np.asarray(v, dtype=float), (d,)) for v in bound)
    lo = np.maximum(np.asarray(lo, dtype=float), 0.0)
    hi = np.asarray(hi, dtype=float)
    if not np.all(np.isfinite(hi)):
        raise ValueError("set is unbounded; pass an explicit outer box")
    if np.any(lo > hi):
        raise cs.InfeasibleSetError("no feasible grid point: outer box is empty")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axes = [np.linspace(lo[i], hi[i], resolution) for i in range(d)]
    scale = 1.0 + float(np.max(np.abs(hi)))
    best_val, best_y, count = INF, None, 0
    inner = axes[-2:] if d >= 2 else axes
    tail = [g.reshape(-1) for g in np.meshgrid(*inner, indexing="ij")]
    n_head = d - len(tail)
    # column-major batches keep the per-row reductions contiguous
    pts = np.empty((tail[0].shape[0], d), order="F")
    for k, col in enumerate(tail):
        pts[:, n_head + k] = col
    for head in itertools.product(*axes[:n_head]):
        pts[:, :n_head] = head
        keep = P.C.mask(pts, tol * scale)
        if not keep.any():
            continue
        sel = np.asfortranarray(pts[keep])
        count += sel.shape[0]
        vals = cond_inf_exact(P.M, P.b, sel)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_y = float(vals[k]), sel[k].tolist()
    if best_y is None:
        raise cs.InfeasibleSetError("no feasible grid point found")
    return OracleResult(best_val, best_y, count, resolution)


# -- direction example -------------------------------------------------------------


def _direction_inputs(A, b, x):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if A.shape != (b.shape[0], x.shape[0]):
        raise ValueError(f"A has shape {A.shape}, expected ({b.shape[0]}, {x.shape[0]})")
    return A, b, x


def direction_example_eval(A, b, x) -> float:
    """Infimum of ``|A z - b|^2`` over ``z`` on the line through ``x`` (``z = lam x``, lam != 0)."""
    A, b, x = _direction_inputs(A, b, x)
    ax = A @ x
    nax = float(np.linalg.norm(ax))
    bb = float(b @ b)
    if nax <= 1e-12 * (1.0 + float(np.linalg.norm(A)) * float(np.linalg.norm(x))):
        return bb
    return bb - float(ax @ b) ** 2 / nax**2


def direction_oracle(A, b, x, iterations: int = 400) -> float:
    """Golden-section minimization of ``lam -> |lam A x - b|^2`` on a bracket."""
    A, b, x = _direction_inputs(A, b, x)
    ax = A @ x
    nax = float(np.linalg.norm(ax))
    # Cauchy-Schwarz bounds the minimizer by |b|/|Ax|
    R = 1.0 + (2.0 * float(np.linalg.norm(b)) / nax if nax > 0 else 0.0)

    def f(lam):
        r = lam * ax - b
        return float(r @ r)

    invphi = (math.sqrt(5) - 1) / 2
    lo, hi = -R, R
    c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
        if hi - lo <= 1e-15 * R:
            break
    return min(fc, fd, f(0.5 * (lo + hi)))


# -- report --------------------------------------------------------------------------


def surrogate_description(M, b) -> dict:
    M, b = _mb(M, b)
    off = np.abs(M) - np.diag(np.abs(np.diag(M)))
    return {
        "form": "sum_i diag_i*y_i - sum_{i!=j} cross_ij*sqrt(y_i*y_j) - sum_i linear_i*sqrt(y_i), +inf off the orthant",
        "diag": np.diag(M).tolist(),
        "cross": off.tolist(),
        "linear": np.abs(b).tolist(),
    }


def hidden_convexity_report(P: QuadraticProblem, seed: int = 0, samples: int = 100_000) -> dict:
    cert = convexity_certificate(P.M, P.b, seed=seed, samples=samples)
    if cert.verdict == "convex":
        verdict = "hidden convexity certified"
        witness = {
            "sign_pattern": cert.sign_pattern.tolist(),
            "surrogate": surrogate_description(P.M, P.b),
            "set": P.C.to_json(),
        }
    elif cert.verdict == "violation":
        verdict = "surrogate nonconvex on R+^d"
        witness = cert.witness
    else:
        verdict = "inconclusive"
        witness = None
    return {
        "signable": cert.verdict == "convex",
        "verdict": verdict,
        "sign_pattern": None if cert.sign_pattern is None else cert.sign_pattern.tolist(),
        "witness": witness,
        "certificate": cert.to_json(),
    }
