"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import gmpy2
import numpy as np
import pytest

from fmmlab.analysis import run_multirun, run_oracle, run_shadow, run_stochastic
from fmmlab.backtrace import interp_T, run_pipeline
from fmmlab.eft import two_prod, two_sum, ulp
from fmmlab.errors import EFTError
from fmmlab.fmm import solve
from fmmlab.grid import generate_scenario
from fmmlab.analysis import compare_refinement
from fmmlab.shadow import ShadowConfig

from .cli_cases import CASES, GOLDEN, run_all
from .reference import grid_dijkstra


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def cell_boundary_scenario():
    # y_min = 0, dy = 0.005; the path runs along y = 0.5
    return generate_scenario("uniform", {"nx": 5, "ny": 101, "dx": 0.005, "dy": 0.005,
                                         "start": (0, 100), "goal": (4, 100)})


def exact_toy():
    return generate_scenario("uniform", {"nx": 5, "ny": 2, "dx": 1.0, "dy": 1.0,
                                         "start": (0, 0), "goal": (4, 0)})


def random_scenario(seed):
    preset = "turbulence" if seed % 2 == 0 else "obstacles"
    return generate_scenario(preset, {"nx": 21, "ny": 21}, seed)


pytestmark = pytest.mark.slow


def _prod_or_report(a, b):
    try:
        return two_prod(a, b)
    except EFTError as exc:
        return exc.code


def test_01_eft_exactness(verdict):
    rng = np.random.default_rng(2024)
    n = 10 ** 6
    mags = 10.0 ** rng.uniform(-150, 150, (2, n))
    signs = np.where(rng.random((2, n)) < 0.5, -1.0, 1.0)
    A, B = (mags * signs).tolist()
    start = time.perf_counter()
    sums = list(map(two_sum, A, B))
    prods = list(map(_prod_or_report, A, B))
    # sums may need ~1050 bits to be exact; products fit in 106
    wide = gmpy2.context(precision=1100)
    narrow = gmpy2.context(precision=128)
    wadd, nadd, nmul = wide.add, narrow.add, narrow.mul
    bad = sum(1 for a, b, (s, e) in zip(A, B, sums) if wadd(s, e) != wadd(a, b))
    reported = 0
    for a, b, res in zip(A, B, prods):
        if isinstance(res, str):
            # products near 1e-300 can leave a residual below the subnormal grid;
            # the report is only correct if the exact residual is really not a float
            reported += 1
            r = narrow.sub(nmul(a, b), a * b)
            bad += res != "eft-underflow" or gmpy2.mpfr(float(r)) == r
        elif nadd(res[0], res[1]) != nmul(a, b):
            bad += 1
    elapsed = time.perf_counter() - start
    verdict(1, bad == 0 and elapsed < 10.0,
            f"{n} pairs, {bad} mismatches, {reported} residual underflows reported, "
            f"{elapsed:.1f} s")


def test_02_fmm_convergence(verdict):
    start = time.perf_counter()
    errors = []
    for n in (51, 101, 201):
        s = generate_scenario("uniform", {"nx": n, "ny": n, "start": (n // 2, n // 2),
                                          "goal": (0, 0)})
        T = solve(s).as_array()
        g = s.geometry
        xs = g.x_min + np.arange(n) * g.dx
        X, Y = np.meshgrid(xs, xs)
        d = np.hypot(X - 0.5, Y - 0.5)
        errors.append(float(np.abs(T - d)[d >= 0.2].max()))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    elapsed = time.perf_counter() - start
    ok = all(1.5 <= r <= 2.5 for r in ratios) and elapsed < 15.0
    verdict(2, ok, f"max errors {[f'{e:.3e}' for e in errors]}, ratios "
                   f"{[round(r, 3) for r in ratios]}, {elapsed:.1f} s")


def test_03_dijkstra_monotonicity(verdict):
    scenarios = [generate_scenario("paper-like", {}, 7), cell_boundary_scenario(), exact_toy(),
                 generate_scenario("uniform", {"nx": 51, "ny": 51}),
                 generate_scenario("turbulence", {"nx": 101, "ny": 101}, 1),
                 generate_scenario("obstacles", {"nx": 51, "ny": 51}, 2)]
    scenarios += [random_scenario(k) for k in range(5)]
    worst = 0
    for s in scenarios:
        vals = solve(s).accepted_values()
        for a, b in zip(vals, vals[1:]):
            if b < a:
                worst = max(worst, round((a - b) / ulp(a)))
    verdict(3, worst <= 4, f"{len(scenarios)} scenarios, worst backward step {worst} ulp")


def test_04_backtrace_soundness(verdict):
    scenarios = [generate_scenario("uniform", {"nx": 51, "ny": 51}),
                 generate_scenario("turbulence", {"nx": 101, "ny": 101}, 1),
                 generate_scenario("paper-like", {}, 7)] + [random_scenario(k) for k in range(6)]
    problems = []
    for s in scenarios:
        field, path = run_pipeline(s)
        vals = [interp_T(field, p) for p in path.points[:-1]]
        if not all(b < a for a, b in zip(vals, vals[1:])):
            problems.append(f"{s.name}: T not decreasing")
        A = s.geometry.node_xy(*s.start)
        r = max(s.geometry.dx, s.geometry.dy)
        last = next(p for p in path.points if math.dist(p, A) <= r * (1 + 1e-12))
        if last not in path.points[-2:] or path.points[-1] != A:
            problems.append(f"{s.name}: endpoint outside radius")
    c2c = generate_scenario("uniform", {"nx": 101, "ny": 101, "start": (0, 0), "goal": (100, 100)})
    _, path = run_pipeline(c2c)
    L = path.length()
    _, staircase = grid_dijkstra(c2c.grid.tau, 0.01, 0.01, c2c.start, c2c.goal)
    ok = not problems and math.sqrt(2) <= L <= 1.05 * math.sqrt(2) and abs(staircase - 2.0) < 1e-12
    verdict(4, ok, f"{len(scenarios)} paths checked {problems or 'ok'}; corner-to-corner length "
                   f"{L:.6f} (sqrt2 = {math.sqrt(2):.6f}), grid oracle {staircase:.6f}")


def test_05_cost_consistency(verdict):
    rows = []
    for s in (generate_scenario("uniform", {"nx": 101, "ny": 101}),
              generate_scenario("uniform", {"nx": 101, "ny": 101, "start": (0, 0), "goal": (100, 100)}),
              generate_scenario("turbulence", {"nx": 101, "ny": 101}, 1),
              generate_scenario("turbulence", {"nx": 121, "ny": 101}, 4)):
        field, path = run_pipeline(s)
        tb = field.value(*s.goal)
        rows.append(abs(path.cost - tb) / tb)
    verdict(5, max(rows) <= 0.05, f"relative |cost - T(B)| {[f'{r:.4f}' for r in rows]}")


def test_06_stochastic_stability(verdict, uniform51):
    rep = run_stochastic(uniform51, seed=0)
    _, plain = run_pipeline(uniform51)
    sigma = max(rep.sigma, ulp(rep.mean))
    within = abs(plain.cost - rep.mean) <= 4 * sigma
    toy = run_stochastic(exact_toy(), seed=0)
    toy_ok = toy.sigma == 0.0 and all(v == 0 for v in toy.counters.values())
    ok = rep.relative_error <= 1e-12 and within and toy_ok
    verdict(6, ok, f"relative error {rep.relative_error:.3e}, |plain - mean| = "
                   f"{abs(plain.cost - rep.mean):.3e} vs 4 sigma = {4 * sigma:.3e}; "
                   f"toy sigma {toy.sigma}, counters {sum(toy.counters.values())}")


def test_07_multirun(verdict, paper_like):
    rep = run_multirun(paper_like, 10, seed=42)
    entries = [(r.cost, r.point_count) for r in rep.runs if r.error is None]
    off = run_multirun(paper_like, 10, seed=42, perturb=False)
    identical = all(r.cost == off.reference_cost and r.point_count == off.reference_point_count
                    for r in off.runs)
    ok = len(entries) == 10 and identical and off.sigma == 0.0
    verdict(7, ok, f"{len(entries)} runs, point counts {[c for _, c in entries]}, sigma "
                   f"{rep.sigma:.3e}, reference within 4 sigma {rep.reference_within_4_sigma}; "
                   f"unperturbed bit-identical {identical}")


def test_08_cell_index_conversion(verdict):
    rep = run_shadow(cell_boundary_scenario(), ShadowConfig())
    site = rep.site("backtrace.locate_y")
    ok = site is not None and "if b0 then 100 else 99" in site["conversions"]
    verdict(8, ok, f"locate_y site {site and site['location']}, conversions "
                   f"{site and site['conversions']}")


def test_09_shadow_soundness(verdict):
    start = time.perf_counter()
    failures, margins = [], []
    for seed in range(20):
        s = random_scenario(seed)
        bound = run_shadow(s, ShadowConfig(mantissa_bits=128)).error_bound
        gap = run_oracle(s, 319).gap
        margins.append(bound / gap if gap else math.inf)
        if not bound >= gap:
            failures.append((seed, bound, gap))
    fast = time.perf_counter() - start
    for seed in (0, 7, 13):
        s = random_scenario(seed)
        bound = run_shadow(s, ShadowConfig(mantissa_bits=319)).error_bound
        gap = run_oracle(s, 319).gap
        if not bound >= gap:
            failures.append((seed, bound, gap, 319))
    finite = [m for m in margins if math.isfinite(m)]
    ok = not failures and fast < 600
    verdict(9, ok, f"20 scenarios at 128 bits in {fast:.0f} s, 3 at 319 bits; failures {failures}; "
                   f"min bound/gap {min(finite) if finite else 'n/a'}")


def test_10_exploration_budget(verdict):
    s = random_scenario(2)
    rep = run_shadow(s, ShadowConfig(max_paths=4, mantissa_bits=128))
    split_sites = [x for x in rep.unstable_sites if x["policy"] == "SPLIT"]
    errors = [t.error for t in rep.flows if not t.diverged]
    ok = len(split_sites) >= 2 and len(rep.flows) <= 4 and rep.error_bound == max(errors)
    verdict(10, ok, f"{len(split_sites)} SPLIT sites, {len(rep.flows)} flows, "
                    f"unexplored {rep.unexplored}, merged {rep.error_bound:.3e} = max {max(errors):.3e}")


def test_11_refinement(verdict):
    diffs = []
    for s in (generate_scenario("uniform", {"nx": 51, "ny": 51}),
              generate_scenario("turbulence", {"nx": 51, "ny": 51}, 1),
              generate_scenario("turbulence", {"nx": 41, "ny": 61}, 6)):
        diffs.append(compare_refinement(s, 2).relative_difference)
    verdict(11, max(diffs) <= 0.05, f"relative differences {[f'{d:.4f}' for d in diffs]}")


def test_12_determinism(verdict, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    first.mkdir()
    second.mkdir()
    run_all(str(first))
    run_all(str(second))
    names = [f for _, files in CASES for f in files]
    same = [n for n in names if (first / n).read_bytes() == (second / n).read_bytes()]
    golden = [n for n in names if (first / n).read_bytes() == (GOLDEN / n).read_bytes()]
    ok = len(same) == len(golden) == len(names)
    verdict(12, ok, f"{len(CASES)} invocations, {len(same)}/{len(names)} outputs identical across "
                    f"runs, {len(golden)}/{len(names)} match golden")
