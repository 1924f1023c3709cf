import json
import math

import pytest

from fmmlab import analysis
from fmmlab.analysis import (compare_refinement, refine_scenario, report_to_json, run_multirun,
                             run_oracle, run_shadow, run_stochastic)
from fmmlab.backtrace import run_pipeline
from fmmlab.errors import AnalysisError, BacktraceError
from fmmlab.fmm import solve
from fmmlab.grid import generate_scenario
from fmmlab.shadow import SYNC, ShadowConfig


def exact_toy():
    # power-of-two spacings and costs, straight-row path: every operation exact
    return generate_scenario("uniform", {"nx": 5, "ny": 2, "dx": 1.0, "dy": 1.0, "tau": 1.0,
                                         "start": (0, 0), "goal": (4, 0)})


def small(seed=3, preset="turbulence", n=13):
    return generate_scenario(preset, {"nx": n, "ny": n}, seed)


def test_stochastic_exact_toy():
    rep = run_stochastic(exact_toy(), seed=1)
    assert rep.sigma == 0.0 and rep.digits == 15.7
    assert rep.mean == 4.0
    assert all(v == 0 for v in rep.counters.values())


def test_stochastic_deterministic():
    s = small()
    assert report_to_json(run_stochastic(s, 5)) == report_to_json(run_stochastic(s, 5))
    d = json.loads(report_to_json(run_stochastic(s, 5)))
    assert {"mode", "scenario_name", "seed", "cost", "path", "counters"} <= set(d)
    assert 0.0 <= d["cost"]["digits"] <= 15.7 and d["cost"]["relative_error"] >= 0


def test_stochastic_error_keeps_counters(monkeypatch):
    def boom(field, scenario, mode=None):
        mode.counters.unstable_branching += 2
        raise BacktraceError("stagnation", "forced")
    monkeypatch.setattr("fmmlab.backtrace.extract_path", boom)
    with pytest.raises(BacktraceError) as exc:
        run_stochastic(small(), 0)
    assert exc.value.code == "stagnation"
    # partial counters include the solve phase plus the two added here
    assert exc.value.counters["unstable_branching"] >= 2


def test_multirun_examples():
    s = small()
    with pytest.raises(AnalysisError) as exc:
        run_multirun(s, 1, seed=0)
    assert exc.value.code == "need-at-least-2-runs"
    off = run_multirun(s, 3, seed=0, perturb=False)
    assert all(r.cost == off.reference_cost for r in off.runs)
    assert off.sigma == 0.0 and off.reference_within_4_sigma is True
    on = run_multirun(s, 4, seed=0)
    assert len(on.runs) == 4 and len({r.seed for r in on.runs}) == 4
    d = json.loads(report_to_json(on))
    assert [r["index"] for r in d["runs"]] == [0, 1, 2, 3]


def test_multirun_parallel_matches_serial():
    s = small(n=9)
    a = report_to_json(run_multirun(s, 3, seed=11, jobs=1))
    b = report_to_json(run_multirun(s, 3, seed=11, jobs=2))
    assert a == b


def test_shadow_all_sync_single_flow():
    s = small()
    rep = run_shadow(s, ShadowConfig(default_policy=SYNC, mantissa_bits=128))
    assert rep.flow_count == 1
    assert math.isfinite(rep.error_bound)
    d = json.loads(report_to_json(rep))
    assert d["mantissa_bits"] == 128 and d["max_symbols"] == 30
    assert {"flows", "unstable_sites", "error_bound", "mantissa_bits"} <= set(d)
    for site in d["unstable_sites"]:
        assert site["policy"] == SYNC and site["hits"] > 0 and ":" in site["location"]


def test_shadow_budget_and_cross_mode_consistency():
    s = small(seed=8)
    rep = run_shadow(s, ShadowConfig(max_paths=4, mantissa_bits=128))
    assert 1 <= rep.flow_count <= 4
    assert rep.error_bound == max(t.error for t in rep.flows if not t.diverged)
    _, path = run_pipeline(s)
    lo, hi = rep.flows[0].cost_ideal
    assert lo - rep.error_bound <= path.cost <= hi + rep.error_bound
    oracle = run_oracle(s, 128)
    assert oracle.plain_cost == path.cost
    assert rep.error_bound >= oracle.gap


def test_shadow_reports_are_deterministic():
    s = small(n=9)
    cfg = ShadowConfig(max_paths=2, mantissa_bits=128)
    assert report_to_json(run_shadow(s, cfg, seed=1)) == report_to_json(run_shadow(s, cfg, seed=1))


def test_refinement_examples():
    u = generate_scenario("uniform", {"nx": 21, "ny": 21})
    rep = compare_refinement(u, 2)
    assert rep.relative_difference <= 0.05
    assert [r.nx for r in rep.resolutions] == [21, 41]
    with pytest.raises(AnalysisError) as exc:
        compare_refinement(u, 3)
    assert exc.value.code == "invalid-factor"


def test_refined_grid_resamples_costs():
    s = small(n=7)
    f = refine_scenario(s, 4)
    assert f.grid.tau[::4, ::4].tolist() == s.grid.tau.tolist()
    assert f.geometry.dx == s.geometry.dx / 4
    assert f.start == (s.start[0] * 4, s.start[1] * 4)


def test_refined_field_close_at_coincident_nodes():
    u = generate_scenario("uniform", {"nx": 21, "ny": 21})
    coarse = solve(u).as_array()
    fine = solve(refine_scenario(u, 2)).as_array()[::2, ::2]
    # both carry a first-order error of a few spacings at most
    assert abs(fine - coarse).max() <= 3 * u.geometry.dx


def test_nan_not_reportable():
    with pytest.raises(AnalysisError):
        analysis._num(float("nan"))
    assert analysis._num(math.inf) == "inf"
