import functools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amlab import (CohomologyClass, WeakKAMError, alpha, aubry_estimate, build_graph,
                   default_epsilon, fenchel_attainment_check, load_spec, mather_estimate,
                   peierls, random_trig_potential, weak_kam_pair)
from amlab.weak_kam import dilate


def test_alpha_flat_examples(flat32):
    assert alpha(flat32, (0, 0)).value == 0.0
    a = alpha(flat32, (1, 0))
    assert a.value == pytest.approx(0.5, abs=flat32.tol_disc)


def test_alpha_pendulum_critical_value(pend32):
    a = alpha(pend32, (0, 0))
    assert a.value == pytest.approx(1.0, abs=1e-12)
    rots = {c.rotation.rotation for c in a.critical_cycles}
    assert rots == {(0.0, 0.0)}
    assert all(c.nodes[0] // 32 == 0 for c in a.critical_cycles)


def test_alpha_lower_bound_from_self_loops(pend32):
    rng = np.random.default_rng(0)
    floor = -np.min(pend32.base[:, pend32.self_loop]) / pend32.tau
    for _ in range(5):
        w = rng.uniform(-1, 1, 2)
        assert alpha(pend32, w).value >= floor - 1e-12


def test_critical_cycles_attain_the_value(pend32):
    for w in [(0.3, 0.9), (1.4, 0.0), (-0.5, 1.0)]:
        a = alpha(pend32, w)
        for c in a.critical_cycles:
            assert c.mean_cost(pend32, w) == pytest.approx(-a.value, abs=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_alpha_convex_along_lines(pend32, seed):
    rng = np.random.default_rng(seed)
    w1, w2 = rng.uniform(-1.1, 1.1, (2, 2))
    mid = alpha(pend32, 0.5 * (w1 + w2)).value
    assert mid <= 0.5 * (alpha(pend32, w1).value + alpha(pend32, w2).value) + 2 * pend32.tol_disc


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gauge_invariance(pend16, seed):
    rng = np.random.default_rng(seed)
    w = tuple(rng.uniform(-0.8, 0.8, 2))
    f = rng.normal(size=pend16.n_nodes) * 3
    a = alpha(pend16, w).value
    b = alpha(pend16, CohomologyClass(w, f)).value
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_constant_shift(pend16):
    gs = build_graph(pend16.L.shifted(-1.25), 16, 0.1, 1.0)
    for w in [(0, 0), (0.5, 0.25)]:
        a = alpha(pend16, w).value
        assert alpha(gs, w).value == pytest.approx(a + 1.25, rel=1e-12)


def test_weak_kam_flat_zero(flat32):
    p = weak_kam_pair(flat32, (0, 0))
    assert np.all(p.u_plus == 0) and np.all(p.u_minus == 0)


def test_weak_kam_contracts(pend32):
    for w in [(0, 0), (0.7, 0.2), (0.0, 1.0)]:
        p = weak_kam_pair(pend32, w)
        assert max(p.residuals) <= 1e-9
        assert np.all(p.u_plus <= p.u_minus + 1e-9)
        crit = p.alpha.critical_nodes
        assert np.max(np.abs(p.gap[crit])) <= 1e-9
        assert min(p.u_minus[crit]) == 0.0
        assert p.calibration <= 1e-9


def test_weak_kam_gap_positive_off_column(pend32):
    p = weak_kam_pair(pend32, (0, 0))
    half = np.arange(32) + 16 * 32
    assert np.all(p.gap[half] > 1.0)


def test_weak_kam_wrong_c(pend32):
    with pytest.raises(WeakKAMError):
        weak_kam_pair(pend32, (0, 0), c=0.9)


def test_peierls_examples(flat32, pend32):
    assert peierls(flat32, (0, 0), 0.0, 5, 5).value == pytest.approx(0.0, abs=1e-12)
    on = peierls(pend32, (0, 0), 1.0, pend32.node(0, 3), pend32.node(0, 3))
    assert on.value == pytest.approx(0.0, abs=1e-12) and on.converged
    x = pend32.node(16, 3)
    off = peierls(pend32, (0, 0), 1.0, x, x)
    p = weak_kam_pair(pend32, (0, 0))
    assert off.value > 0.5
    assert off.value >= p.gap[x] - 1e-9
    with pytest.raises(ValueError):
        peierls(pend32, (0, 0), 1.0, x, x, T=4)


def test_peierls_dominates_pair(pend16):
    p = weak_kam_pair(pend16, (0.3, 0.0))
    for x, y in [(3, 40), (100, 7), (0, 0)]:
        h = peierls(pend16, (0.3, 0.0), p.c, x, y)
        assert h.value >= p.u_minus[y] - p.u_plus[x] - 1e-9


def test_aubry_examples(flat32, pend32):
    assert aubry_estimate(weak_kam_pair(flat32, (0, 0))).size == 32 * 32
    pair = weak_kam_pair(pend32, (0, 0))
    aub = aubry_estimate(pair)
    assert set(np.flatnonzero(aub.nodes)) == set(range(32))
    assert len(aub.components) == 1
    exact = aubry_estimate(pair, 0.0)
    assert np.all(exact.nodes[pair.alpha.critical_nodes])
    assert aubry_estimate(pair, np.inf).size == 32 * 32


def test_aubry_nested_in_epsilon(pend32):
    pair = weak_kam_pair(pend32, (0.4, 0.6))
    sizes = [aubry_estimate(pair, e).size for e in (0.0, 0.01, 0.1, 1.0)]
    assert sizes == sorted(sizes)


def test_default_epsilon_scale(pend32):
    assert default_epsilon(pend32) == pytest.approx(0.25 / (32 * 32 * 0.1))


def test_mather_examples(flat32):
    est = mather_estimate(alpha(flat32, (1.0, 0.0)))
    assert est and all(abs(m["rotation"].rotation[0] - 1.0) < 0.2 for m in est)
    assert all(m["rotation"].rotation[1] == 0 for m in est)
    L = load_spec("pendulum(1)")
    g = build_graph(L, 32, 0.08, 2.2)
    est = mather_estimate(alpha(g, (0.0, 2.0)))
    for m in est:
        assert m["rotation"].rotation[0] == 0
        assert abs(m["rotation"].rotation[1] - 2.0) < 0.4
        assert set(n // 32 for n in m["cycle"].nodes) == {0}


def test_mather_in_aubry_randomised():
    L = load_spec("flat").plus_potential(random_trig_potential(7, amplitude=0.3))
    g = build_graph(L, 24, 0.1, 1.5)
    rng = np.random.default_rng(1)
    for w in rng.uniform(-1, 1, (6, 2)):
        pair = weak_kam_pair(g, w)
        aub = aubry_estimate(pair)
        for m in mather_estimate(pair.alpha):
            assert all(aub.nodes[x] for x in m["cycle"].nodes)


def test_fenchel_examples(flat32, pend32):
    closed_flat = lambda h: 0.5 * float(np.dot(h.rotation, h.rotation))
    res = fenchel_attainment_check(alpha(flat32, (1.0, 0.0)), closed_flat)
    assert all(r >= -1e-9 for _, r in res)
    assert min(r for _, r in res) <= 0.02
    res = fenchel_attainment_check(alpha(pend32, (0, 0)), lambda h: -1.0)
    assert res == [((0.0, 0.0), 0.0)]


def test_dilate_torus():
    m = np.zeros(64, bool)
    m[0] = True
    d = dilate(m, 8, 1).reshape(8, 8)
    assert d.sum() == 9 and d[7, 7] and d[1, 1]
