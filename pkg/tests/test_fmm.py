import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmmlab.errors import SolverError
from fmmlab.fmm import (ACCEPTED, BAND, FAR, NarrowBandQueue, _Consts, init, quadrant_update, solve,
                        update_node)
from fmmlab.grid import CostGrid, GridGeometry, Scenario, generate_scenario
from fmmlab.scalar import PLAIN, RecordingMode, StochasticMode

from .reference import reference_fmm


def scenario(tau, h=1.0, start=(0, 0), goal=None):
    tau = np.asarray(tau, dtype=float)
    ny, nx = tau.shape
    g = GridGeometry(nx, ny, 0.0, 0.0, h, h)
    return Scenario(CostGrid(g, tau), start, goal or (nx - 1, ny - 1), "t")


def test_quadrant_examples():
    assert quadrant_update(0.0, math.inf, 0.5, 0.5, 2.0) == 1.0
    assert quadrant_update(0.0, None, 0.5, 0.5, 2.0) == 1.0
    r = quadrant_update(0.0, 0.0, 1.0, 1.0, 1.0)
    assert r == 0.7071067811865476
    r = quadrant_update(0.0, 0.5, 1.0, 1.0, 1.0)
    assert abs(r ** 2 + (r - 0.5) ** 2 - 1.0) <= 1e-12
    assert r == pytest.approx((0.5 + math.sqrt(1.75)) / 2, rel=1e-15)
    assert quadrant_update(0.0, 5.0, 1.0, 1.0, 1.0) == 1.0
    with pytest.raises(SolverError) as exc:
        quadrant_update(math.inf, math.inf, 1.0, 1.0, 1.0)
    assert exc.value.code == "no-valued-neighbor"


def test_quadrant_unequal_spacing_satisfies_scheme():
    th, tv, dx, dy, tau = 0.3, 0.2, 0.5, 0.25, 1.3
    r = quadrant_update(th, tv, dx, dy, tau)
    assert ((r - th) / dx) ** 2 + ((r - tv) / dy) ** 2 == pytest.approx(tau ** 2, rel=1e-12)
    assert r >= max(th, tv)


def test_init_examples():
    s = scenario(np.ones((3, 3)), start=(1, 1), goal=(0, 0))
    for mode in (PLAIN, StochasticMode(None)):
        f, queue, _ = init(s, mode)
        assert sum(st == BAND for st in f.state) == 1
        assert sum(st == ACCEPTED for st in f.state) == 0
        assert mode.eq(f.value(1, 1), mode.const(0.0), "t")
        assert len(queue) == 1
        assert all(mode.is_inf(f.T[k]) for k in range(9) if k != 4)


def test_update_node_examples():
    s = scenario(np.ones((3, 3)), start=(0, 1), goal=(2, 2))
    f, _, _ = init(s, PLAIN)
    c = _Consts(PLAIN, 1.0, 1.0)
    f.state[f.index(0, 1)] = ACCEPTED
    assert update_node(f, f.index(1, 1), 1.0, c) == 1.0
    # all four neighbours accepted: the best quadrant wins
    for ix, iy, t in ((0, 1, 0.0), (2, 1, 2.0), (1, 0, 1.0), (1, 2, 1.5)):
        f.T[f.index(ix, iy)] = t
        f.state[f.index(ix, iy)] = ACCEPTED
    want = min(quadrant_update(h, v, 1.0, 1.0, 1.0) for h in (0.0, 2.0) for v in (1.0, 1.5))
    assert update_node(f, f.index(1, 1), 1.0, c) == want
    assert update_node(f, f.index(2, 2), 1.0, c) == quadrant_update(2.0, 1.5, 1.0, 1.0, 1.0)


def test_worse_candidate_does_not_push():
    # six first arrivals, then (1, 1) and (2, 1) each improve once their
    # second neighbour is accepted
    f = solve(scenario(np.ones((2, 3)), start=(0, 0), goal=(2, 1)))
    assert f.pushes == 8
    assert f.value(2, 0) == 2.0


def test_solve_3x3():
    f = solve(scenario(np.ones((3, 3)), start=(1, 1), goal=(0, 0)))
    for ix, iy in ((0, 1), (2, 1), (1, 0), (1, 2)):
        assert f.value(ix, iy) == 1.0
    for ix, iy in ((0, 0), (2, 0), (0, 2), (2, 2)):
        assert f.value(ix, iy) == 1.0 + math.sqrt(2) / 2
    assert np.all(np.diff(f.accepted_values()) >= 0)


def test_solve_two_row_strip():
    f = solve(scenario(np.ones((2, 5)), start=(0, 0), goal=(4, 0)))
    assert [f.value(i, 0) for i in range(5)] == [0.0, 1.0, 2.0, 3.0, 4.0]
    assert [f.value(i, 1) for i in range(2)] == [1.0, 1.0 + math.sqrt(2) / 2]
    assert np.all(np.diff(f.accepted_values()) >= 0)


def test_homogeneity_exact():
    s1 = generate_scenario("turbulence", {"nx": 25, "ny": 20}, seed=2)
    g = s1.geometry
    s2 = Scenario(CostGrid(g, s1.grid.tau * 4.0), s1.start, s1.goal, "x4")
    a, b = solve(s1).as_array(), solve(s2).as_array()
    assert np.array_equal(4.0 * a, b)
    u1 = generate_scenario("uniform", {"nx": 15, "ny": 15, "tau": 1.0})
    u2 = generate_scenario("uniform", {"nx": 15, "ny": 15, "tau": 2.0})
    assert np.array_equal(2.0 * solve(u1).as_array(), solve(u2).as_array())


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6), st.integers(5, 14), st.integers(5, 14))
def test_matches_reference_solver(seed, nx, ny):
    s = generate_scenario("turbulence", {"nx": nx, "ny": ny, "dx": 0.1, "dy": 0.1}, seed)
    got = solve(s).as_array()
    want = reference_fmm(s.grid.tau, 0.1, s.start)
    assert np.allclose(got, want, rtol=1e-12, atol=0)


@settings(max_examples=25)
@given(st.sampled_from(["uniform", "obstacles", "turbulence"]), st.integers(0, 10 ** 6))
def test_dijkstra_order_and_push_guard(preset, seed):
    s = generate_scenario(preset, {"nx": 17, "ny": 13}, seed)
    f = solve(s)
    vals = f.accepted_values()
    assert len(vals) == 17 * 13
    for a, b in zip(vals, vals[1:]):
        assert b >= a - 4 * math.ulp(a)
    assert f.pushes <= 8 * 17 * 13
    assert all(st == ACCEPTED for st in f.state)


def test_queue_ties_follow_node_index():
    q = NarrowBandQueue(PLAIN)
    for k in (7, 3, 9, 1):
        q.push((1.0, k, 0))
    q.push((0.5, 8, 0))
    assert [q.pop()[1] for _ in range(5)] == [8, 1, 3, 7, 9]


def test_instrumented_queue_matches_heapq():
    s = generate_scenario("obstacles", {"nx": 20, "ny": 16}, seed=9)
    a = solve(s)
    b = solve(s, RecordingMode())
    assert a.accept_order == b.accept_order
    assert np.array_equal(a.as_array(), b.as_array())


def test_early_exit():
    s = generate_scenario("uniform", {"nx": 21, "ny": 21})
    f = solve(s, early_exit=True)
    assert f.is_accepted(*s.goal)
    assert f.accept_order[-1] == f.index(*s.goal)
    assert len(f.accept_order) < 21 * 21
    full = solve(s)
    assert f.value(*s.goal) == full.value(*s.goal)


def test_stochastic_solve_unperturbed_matches_plain():
    s = generate_scenario("turbulence", {"nx": 12, "ny": 12}, seed=1)
    ref = solve(s).as_array()
    m = StochasticMode(None)
    f = solve(s, m)
    for k, v in enumerate(ref.ravel()):
        assert f.T[k].samples() == (v, v, v)
    assert m.counters.total() == 0
