import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hcx.cond_inf import (
    ExtRealFunction,
    argmin_over_subset,
    characteristic,
    compose_via_inverse_graph,
    cond_inf,
    cond_inf_mapping,
    cond_sup,
    inf_over_subset,
    marginal_via_correspondence,
    marginalize_inf,
    marginalize_sup,
    strict_epigraph,
    sup_over_subset,
    threshold_grid,
)
from hcx.correspondence import Correspondence, graph_of_mapping, rectangle
from hcx.extended_real import INF, NEG_INF, upper_add

values = st.sampled_from([NEG_INF, -2.0, -1.0, 0.0, 1.0, 2.5, INF])


@st.composite
def function_and_relation(draw, max_size=5):
    n = draw(st.integers(0, max_size))
    m = draw(st.integers(0, max_size))
    f = ExtRealFunction.of(draw(st.lists(values, min_size=n, max_size=n)))
    cells = [(w, y) for w in range(n) for y in range(m)]
    pairs = draw(st.sets(st.sampled_from(cells))) if cells else set()
    return f, Correspondence(n, m, pairs)


def test_subset_examples():
    f = ExtRealFunction.of([1.0, NEG_INF, 3.0])
    assert inf_over_subset(f, {0, 2}) == 1.0
    assert inf_over_subset(f, set()) == INF
    assert inf_over_subset(f, {1, 2}) == NEG_INF
    g = ExtRealFunction.of([1.0, 2.0])
    assert sup_over_subset(g, {0, 1}) == 2.0
    assert sup_over_subset(g, set()) == NEG_INF
    assert argmin_over_subset(ExtRealFunction.of([1, 1, 2]), {0, 1, 2}) == {0, 1}
    assert argmin_over_subset(g, set()) == frozenset()
    assert argmin_over_subset(ExtRealFunction.of([INF, INF]), {0, 1}) == {0, 1}
    with pytest.raises(IndexError):
        inf_over_subset(g, {5})


def test_nan_and_size_checks():
    with pytest.raises(ValueError):
        ExtRealFunction.of([np.nan])
    with pytest.raises(ValueError):
        cond_inf(ExtRealFunction.of([1.0]), Correspondence(2, 1))


def test_characteristic_examples():
    assert np.all(characteristic(3, {0, 1, 2}).values == 0)
    assert np.all(characteristic(3, set()).values == INF)
    chi = characteristic(4, {1, 3})
    assert {w for w in range(4) if chi(w) == 0} == {1, 3}


def test_cond_inf_examples():
    R = Correspondence(3, 3, [(0, 1), (0, 2), (1, 0)])
    # delta of a point maps to delta of its afterset
    assert cond_inf(characteristic(3, {0}), R) == characteristic(3, R.afterset(0))
    assert cond_sup(-characteristic(3, {0}), R) == -characteristic(3, R.afterset(0))
    f = ExtRealFunction.of([2.0, -1.0, 5.0])
    rect = rectangle(3, 4, {0, 2}, {1, 3})
    expected = upper_add(np.full(4, inf_over_subset(f, {0, 2})), characteristic(4, {1, 3}).values)
    assert np.array_equal(cond_inf(f, rect).values, expected)
    theta = [2, 0, 1]
    out = cond_inf(f, graph_of_mapping(theta, 3))
    assert all(out(theta[w]) == f(w) for w in range(3))
    assert np.all(cond_sup(f, Correspondence(3, 2)).values == NEG_INF)


def test_mapping_examples():
    f = ExtRealFunction.of([3.0, 1.0, 2.0])
    assert cond_inf_mapping(f, [1, 1, 1], 3).values.tolist() == [INF, 1.0, INF]
    assert cond_inf_mapping(f, [0, 1, 2], 3) == f
    g = ExtRealFunction.of([7.0, -1.0, 0.5])
    assert compose_via_inverse_graph(g, [0, 1, 2]) == g
    chi = characteristic(3, {1})
    assert compose_via_inverse_graph(chi, [1, 0, 1, 2]) == characteristic(4, {0, 2})
    with pytest.raises(IndexError):
        cond_inf_mapping(f, [0, 1, 3], 3)


def test_marginalization_examples():
    f = np.array([4.0, -1.0, 2.0])
    h = ExtRealFunction.of(np.tile(f, 2))  # h(w, y) = f(w), w fastest
    assert np.all(marginalize_inf(h, 3, 2).values == -1.0)
    g = np.array([5.0, NEG_INF])
    h = ExtRealFunction.of(np.repeat(g, 3))  # h(w, y) = g(y)
    assert np.array_equal(marginalize_inf(h, 3, 2).values, g)
    assert np.array_equal(marginalize_sup(h, 3, 2).values, g)
    with pytest.raises(ValueError):
        marginalize_inf(h, 4, 2)


def test_strict_epigraph_examples():
    assert strict_epigraph(ExtRealFunction.of([0.0]), [1.0]).pairs == {(0, 0)}
    assert strict_epigraph(ExtRealFunction.of([INF]), [-1.0, 0.0, 9.0]).pairs == frozenset()
    with pytest.raises(ValueError):
        strict_epigraph(ExtRealFunction.of([0.0]), [1.0, 0.0])
    with pytest.raises(ValueError):
        strict_epigraph(ExtRealFunction.of([0.0]), [INF])
    grid = threshold_grid(ExtRealFunction.of([1.0, 3.0, INF]))
    assert grid.tolist() == [0.0, 1.0, 2.0, 3.0, 4.0]
    assert threshold_grid(ExtRealFunction.of([INF, NEG_INF])).tolist() == [0.0]


@settings(max_examples=300, deadline=None)
@given(function_and_relation())
def test_cond_inf_matches_loop_oracle(fr):
    f, R = fr
    m = R.target.size
    expected = oracles.cond_inf_loop(f.values.tolist(), R.pairs, m)
    assert cond_inf(f, R).values.tolist() == expected
    # effective domain inside the range
    out = cond_inf(f, R)
    assert all(out(y) == INF for y in range(m) if y not in R.range())
    assert cond_sup(f, R) == -cond_inf(-f, R)
    sparse = Correspondence(R.source, R.target, R.pairs, dense=False)
    assert cond_inf(f, sparse) == out


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_mapping_and_marginal_agree_with_correspondence(data):
    n = data.draw(st.integers(0, 5))
    m = data.draw(st.integers(1, 4))
    f = ExtRealFunction.of(data.draw(st.lists(values, min_size=n, max_size=n)))
    theta = data.draw(st.lists(st.integers(0, m - 1), min_size=n, max_size=n))
    assert cond_inf_mapping(f, theta, m) == cond_inf(f, graph_of_mapping(theta, m, n))
    g = ExtRealFunction.of(data.draw(st.lists(values, min_size=m, max_size=m)))
    assert compose_via_inverse_graph(g, theta, n).values.tolist() == [g.values[t] for t in theta]
    nw = data.draw(st.integers(0, 3))
    h = ExtRealFunction.of(data.draw(st.lists(values, min_size=nw * m, max_size=nw * m)))
    assert marginalize_inf(h, nw, m) == marginal_via_correspondence(h, nw, m)
