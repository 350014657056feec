"""Seeded instance generators shared by the quadratic tests."""

import numpy as np

from hcx import convex_solver as cs
from hcx import quadratic_hidden as qh


def signable(rng, d, density=0.7, scale=2.0):
    """Random (M, b) with signs matched to a random pattern; some entries zeroed."""
    eps = rng.choice([-1, 1], size=d)
    A = rng.normal(size=(d, d)) * scale
    M = (A + A.T) / 2
    keep = rng.random((d, d)) < density
    keep = np.triu(keep, 1)
    keep = keep | keep.T
    off = -np.abs(M) * np.outer(eps, eps) * keep
    M = np.where(np.eye(d, dtype=bool), M, off)
    b = -eps * np.abs(rng.normal(size=d)) * scale
    b[rng.random(d) < 0.2] = 0.0
    return M, b


def arbitrary(rng, d, scale=2.0):
    A = rng.normal(size=(d, d)) * scale
    M = (A + A.T) / 2
    b = rng.normal(size=d) * scale
    return M, b


def non_signable(rng, d):
    """Sparse integer (M, b) with no sign pattern (rejection sampling)."""
    while True:
        A = rng.integers(-2, 3, size=(d, d)).astype(float)
        M = np.triu(A, 1)
        M = M + M.T + np.diag(rng.integers(-2, 3, size=d))
        b = rng.integers(-2, 3, size=d).astype(float)
        if qh.find_sign_pattern(M, b) is None:
            return M, b


def end_to_end(k):
    """Instances for the solve vs grid-oracle comparison.

    Band sets use s = (1,...,1) with integer limits on [0, 2]^d so the band
    boundary passes through grid points at resolution 401.
    """
    rng = np.random.default_rng(1000 + k)
    d = 2 + (k % 2)
    M, b = signable(rng, d, density=1.0)
    if k % 4 < 2:
        C = cs.Box(np.zeros(d), np.full(d, 2.0))
    else:
        C = cs.Band(np.ones(d), 1.0, 2.0)
    return qh.QuadraticProblem(M, b, C), (np.zeros(d), np.full(d, 2.0))


def corollary_box(k):
    """max x'Qx with Q off-diagonal >= 0 over l_i <= x_i^2 <= u_i, posed as min of -x'Qx."""
    rng = np.random.default_rng(2000 + k)
    d = 2 + (k % 2)
    Q = np.abs(rng.normal(size=(d, d)))
    Q = (Q + Q.T) / 2
    Q[np.diag_indices(d)] = rng.normal(size=d)
    lower = rng.uniform(0.0, 0.5, size=d).round(2)
    upper = lower + rng.uniform(0.5, 1.5, size=d).round(2)
    return qh.QuadraticProblem(-Q, np.zeros(d), cs.Box(lower, upper)), Q


def corollary_band(k):
    """Diagonal M with a band l <= sum S_ii x_i^2 <= u; nothing assumes joint diagonalization."""
    rng = np.random.default_rng(3000 + k)
    d = 2 + (k % 2)
    M = np.diag(rng.normal(size=d))
    b = rng.normal(size=d) * 2
    # integer weights keep the band boundary on the 0.005 grid of [0, 2]^d
    S = rng.integers(1, 3, size=d).astype(float)
    return qh.QuadraticProblem(M, b, cs.Band(S, 1.0, 2.0)), (np.zeros(d), np.full(d, 2.0))
