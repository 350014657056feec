import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import instances
import oracles
from hcx import convex_solver as cs
from hcx import quadratic_hidden as qh
from hcx.extended_real import INF


def problem(M, b, C=None):
    d = len(b)
    return qh.QuadraticProblem(M, b, C or cs.Box(np.zeros(d), np.ones(d)))


def test_q_eval_examples():
    assert qh.q_eval(problem(np.eye(2), [0, 0]), [1, 2]) == 5
    assert qh.q_eval(problem(np.zeros((2, 2)), [1, 1]), [3, 4]) == 7
    M = [[1, -1], [-1, 1]]
    assert qh.q_eval(problem(M, [2, 0]), [1, 1]) == 2 == oracles.q_loop(M, [2, 0], [1, 1])
    with pytest.raises(ValueError):
        qh.q_eval(problem(np.eye(2), [0, 0]), [1, 2, 3])
    with pytest.raises(ValueError):
        qh.q_eval(problem(np.eye(2), [0, 0]), [1, math.inf])


def test_problem_construction():
    P = qh.QuadraticProblem.from_upper_triangle(2, [1, 2, 3], [0, 0], cs.Box([0, 0], [1, 1]))
    assert P.M.tolist() == [[1, 2], [2, 3]]
    assert P.upper_triangle() == [1, 2, 3]
    with pytest.raises(ValueError):
        qh.QuadraticProblem([[1, 2], [0, 1]], [0, 0], cs.Box([0, 0], [1, 1]))
    with pytest.raises(ValueError):
        qh.QuadraticProblem.from_upper_triangle(2, [1, 2], [0, 0], cs.Box([0, 0], [1, 1]))
    with pytest.raises(ValueError):
        qh.QuadraticProblem(np.eye(2), [0, 0], cs.Box([0], [1]))


def test_square_map():
    assert qh.square_map([-2, 3]).tolist() == [4, 9]
    assert qh.square_map(np.zeros(3)).tolist() == [0, 0, 0]
    y = np.array([0.0, 2.0, 7.5])
    for eps in ([1, 1, 1], [-1, 1, -1]):
        assert np.allclose(qh.square_map(np.array(eps) * np.sqrt(y)), y, rtol=1e-15)


def test_cond_inf_exact_examples():
    assert qh.cond_inf_exact([[1]], [-2], [4]) == 0.0
    assert qh.cond_inf_exact(np.eye(3), [1, 2, 3], np.zeros(3)) == 0.0
    assert qh.cond_inf_exact([[0, 1], [1, 0]], [0, 0], [1, 1]) == -2.0
    with pytest.raises(ValueError):
        qh.cond_inf_exact([[1]], [0], [-1])
    with pytest.raises(ValueError):
        qh.cond_inf_exact(np.eye(26), np.zeros(26), np.ones(26))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_cond_inf_exact_matches_bruteforce(seed, d):
    rng = np.random.default_rng(seed)
    M, b = instances.arbitrary(rng, d)
    y = rng.random((4, d)) * 3
    got = qh.cond_inf_exact(M, b, y)
    for k in range(4):
        assert got[k] == pytest.approx(oracles.fiber_min_bruteforce(M.tolist(), b.tolist(), y[k]), abs=1e-10)


def test_sign_pattern_examples():
    d = 4
    Q = np.abs(np.random.default_rng(0).normal(size=(d, d)))
    Q = Q + Q.T
    assert qh.find_sign_pattern(-Q, np.zeros(d)).tolist() == [1] * d
    b = np.array([1.5, -2.0, 0.0])
    assert qh.find_sign_pattern(np.diag([3.0, -1.0, 2.0]), b).tolist() == [-1, 1, 1]
    assert qh.find_sign_pattern(np.ones((3, 3)) - np.eye(3), np.zeros(3)) is None
    # unconstrained components default to +1, constrained ones follow the chain
    M = np.zeros((3, 3))
    M[0, 1] = M[1, 0] = 1.0
    assert qh.find_sign_pattern(M, np.zeros(3)).tolist() == [1, -1, 1]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_sign_pattern_agrees_with_exhaustive(seed, d):
    rng = np.random.default_rng(seed)
    M = np.triu(rng.integers(-1, 2, size=(d, d)), 1).astype(float)
    M = M + M.T
    b = rng.integers(-1, 2, size=d).astype(float)
    eps = qh.find_sign_pattern(M, b)
    assert (eps is not None) == oracles.sign_pattern_exists(M.tolist(), b.tolist())
    if eps is not None:
        assert qh.satisfies_sign_condition(M, b, eps)


def test_surrogate_examples():
    assert qh.surrogate_eval([[1]], [-2], [4]) == 0.0 == qh.cond_inf_exact([[1]], [-2], [4])
    assert qh.surrogate_eval(np.eye(2), [1, 1], [-1e-9, 1.0]) == INF
    assert qh.surrogate_eval(np.eye(2), [1, 1], [0.0, 0.0]) == 0.0
    # ordered pairs: the cross term appears twice
    assert qh.surrogate_eval([[0, 1], [1, 0]], [0, 0], [1, 1]) == -2.0


def test_smoothed_surrogate_tends_to_surrogate():
    rng = np.random.default_rng(2)
    M, b = instances.arbitrary(rng, 3)
    y = np.array([0.0, 0.7, 2.0])
    exact = qh.surrogate_eval(M, b, y)
    errs = [abs(qh.smoothed_surrogate_eval(M, b, y, mu) - exact) for mu in (1e-2, 1e-4, 1e-6)]
    assert errs[0] > errs[1] > errs[2]
    assert qh.smoothed_surrogate_eval(M, b, y, 0.0) == exact


def test_gradient_examples():
    assert qh.surrogate_subgradient([[1]], [-2], [4.0], 0.0).tolist() == [0.5]
    assert np.all(qh.surrogate_subgradient(np.zeros((2, 2)), [0, 0], [0.0, 1.0], 1e-3) == 0)
    with pytest.raises(ValueError):
        qh.surrogate_subgradient(np.eye(2), [1, 1], [0.0, 1.0], 0.0)
    with pytest.raises(ValueError):
        qh.surrogate_subgradient(np.eye(2), [1, 1], [-1.0, 1.0], 1e-3)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_surrogate_midpoint_convex_for_any_signs(seed, d):
    rng = np.random.default_rng(seed)
    M, b = instances.arbitrary(rng, d)
    y1, y2 = rng.random((2, 50, d)) * 4
    y1[rng.random((50, d)) < 0.2] = 0
    g1, g2 = qh.surrogate_eval(M, b, y1), qh.surrogate_eval(M, b, y2)
    gm = qh.surrogate_eval(M, b, (y1 + y2) / 2)
    assert np.all(gm <= (g1 + g2) / 2 + 1e-9 * (1 + np.abs(g1) + np.abs(g2)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_smoothed_surrogate_is_midpoint_convex(seed, d):
    rng = np.random.default_rng(seed)
    M, b = instances.arbitrary(rng, d)
    for _ in range(20):
        y1, y2 = rng.random((2, d)) * 4
        mu = 10.0 ** rng.uniform(-8, -1)
        g1 = qh.smoothed_surrogate_eval(M, b, y1, mu)
        g2 = qh.smoothed_surrogate_eval(M, b, y2, mu)
        assert qh.smoothed_surrogate_eval(M, b, (y1 + y2) / 2, mu) <= (g1 + g2) / 2 + 1e-9 * (1 + abs(g1) + abs(g2))


def test_certificate_examples():
    cert = qh.convexity_certificate(np.diag([1.0, -1.0]), [1.0, 1.0])
    assert cert.verdict == "convex" and cert.samples == 0
    cert = qh.convexity_certificate(np.ones((3, 3)) - np.eye(3), np.zeros(3), seed=0)
    assert cert.verdict == "violation"
    w = cert.witness
    gm = qh.cond_inf_exact(np.ones((3, 3)) - np.eye(3), np.zeros(3), (np.array(w["y1"]) + np.array(w["y2"])) / 2)
    assert gm > (w["g_y1"] + w["g_y2"]) / 2
    assert qh.convexity_certificate([[-3.0]], [5.0]).verdict == "convex"
    # a budget too small to search reports inconclusive
    assert qh.convexity_certificate(np.ones((3, 3)) - np.eye(3), np.zeros(3), samples=0).verdict == "inconclusive"


def test_certificate_is_seeded():
    M, b = np.ones((3, 3)) - np.eye(3), np.zeros(3)
    assert qh.convexity_certificate(M, b, seed=4).to_json() == qh.convexity_certificate(M, b, seed=4).to_json()


def test_solve_examples():
    rep = qh.solve(qh.QuadraticProblem([[1.0]], [-2.0], cs.Box([0], [4])))
    assert rep.status == "signable"
    assert rep.y_star[0] == pytest.approx(1.0, abs=1e-6)
    assert rep.surrogate_value == pytest.approx(-1.0, abs=1e-9)
    assert rep.x_star[0] == pytest.approx(1.0, abs=1e-6)
    rep = qh.solve(qh.QuadraticProblem(np.eye(3), np.zeros(3), cs.Box(np.zeros(3), np.ones(3))))
    assert rep.y_star == [0.0, 0.0, 0.0] and rep.x_star == [0.0, 0.0, 0.0] and rep.surrogate_value == 0.0


def test_solve_band_vs_oracle_and_lift():
    M = np.array([[1.0, -0.5, 0.0], [-0.5, -2.0, 0.2], [0.0, 0.2, 0.5]])
    b = np.array([-1.0, -1.0, 0.5])
    P = qh.QuadraticProblem(M, b, cs.Band(np.ones(3), 1.0, 2.0))
    eps = qh.find_sign_pattern(M, b)
    assert eps is not None
    rep = qh.solve(P)
    orc = qh.oracle_grid(P, 201, (np.zeros(3), np.full(3, 2.0)))
    assert abs(rep.surrogate_value - orc.value) / (1 + abs(orc.value)) <= 1e-3
    assert rep.surrogate_value <= orc.value + 1e-9
    assert P.C.contains(qh.square_map(rep.x_star), 1e-8)
    assert qh.q_eval(P, rep.x_star) == pytest.approx(rep.surrogate_value, abs=1e-6)
    assert np.array_equal(np.sign(rep.x_star)[np.array(rep.x_star) != 0], eps[np.array(rep.x_star) != 0])


def test_solve_not_signable_and_infeasible():
    P = qh.QuadraticProblem(np.ones((3, 3)) - np.eye(3), np.zeros(3), cs.Box(np.zeros(3), np.ones(3)))
    assert qh.solve(P).status == "not-signable"
    with pytest.raises(cs.InfeasibleSetError):
        qh.solve(qh.QuadraticProblem([[1.0]], [0.0], cs.Box([2.0], [1.0])))


def test_solve_reports_nonconvergence():
    P = qh.QuadraticProblem([[1.0, -0.3], [-0.3, 0.5]], [-1.0, -2.0], cs.Band([1.0, 1.0], 1.0, 2.0))
    params = cs.SolverParams(max_iter=1, polish_iter=1, smoothing=(1e-2,), n_starts=1)
    with pytest.raises(qh.ConvergenceError) as info:
        qh.solve(P, params)
    assert info.value.report.status == "signable"


def test_solve_is_deterministic():
    P, _ = instances.end_to_end(3)
    assert qh.solve(P).to_json() == qh.solve(P).to_json()


def test_oracle_examples():
    P = qh.QuadraticProblem([[1.0]], [-2.0], cs.Box([0], [4]))
    orc = qh.oracle_grid(P, 4001)
    assert orc.value == pytest.approx(-1.0, abs=1e-12) and orc.y_arg == [1.0]
    with pytest.raises(cs.InfeasibleSetError):
        qh.oracle_grid(qh.QuadraticProblem([[1.0]], [0.0], cs.Box([2.0], [1.0])), 11)
    with pytest.raises(ValueError):
        qh.oracle_grid(qh.QuadraticProblem([[1.0]], [0.0], cs.Band([1.0], 1.0, math.inf)), 11)


def test_oracle_refinement():
    P, bound = instances.end_to_end(2)
    coarse = qh.oracle_grid(P, 41, bound)
    fine = qh.oracle_grid(P, 81, bound)
    # the fine grid contains the coarse one
    assert fine.value <= coarse.value + 1e-12


def test_oracle_ties_take_smallest_point():
    P = qh.QuadraticProblem(np.zeros((2, 2)), np.zeros(2), cs.Box([0, 0], [1, 1]))
    assert qh.oracle_grid(P, 5).y_arg == [0.0, 0.0]


def test_direction_examples():
    rng = np.random.default_rng(0)
    A, b = rng.normal(size=(3, 2)), rng.normal(size=3)
    assert qh.direction_example_eval(A, b, np.zeros(2)) == pytest.approx(b @ b)
    assert qh.direction_oracle(A, b, np.zeros(2)) == pytest.approx(b @ b)
    # b on the line through A x
    x = np.array([0.3, -1.2])
    assert qh.direction_example_eval(A, 2.5 * A @ x, x) == pytest.approx(0.0, abs=1e-12)
    assert qh.direction_example_eval(np.zeros((3, 2)), b, x) == pytest.approx(b @ b)
    with pytest.raises(ValueError):
        qh.direction_example_eval(A, b, np.zeros(3))


def test_hidden_convexity_report():
    P = qh.QuadraticProblem(np.diag([1.0, 2.0]), [1.0, -1.0], cs.Box([0, 0], [1, 1]))
    rep = qh.hidden_convexity_report(P)
    assert rep["verdict"] == "hidden convexity certified"
    assert rep["sign_pattern"] == [-1, 1]
    assert rep["witness"]["set"] == P.C.to_json()
    assert rep["witness"]["surrogate"]["linear"] == [1.0, 1.0]
    P = qh.QuadraticProblem(np.ones((3, 3)) - np.eye(3), np.zeros(3), cs.Box(np.zeros(3), np.ones(3)))
    assert qh.hidden_convexity_report(P)["verdict"] == "surrogate nonconvex on R+^d"
    assert qh.hidden_convexity_report(qh.QuadraticProblem([[-1.0]], [3.0], cs.Box([0], [1])))["signable"]
