import pytest

from fmmlab.errors import SolverError
from fmmlab.shadow import SPLIT, SYNC, ShadowConfig
from fmmlab.shadow.explore import explore_flows
from fmmlab.shadow.mode import distance_bound


def unstable_run(n_sites, fail_on=None):
    """Toy program with ``n_sites`` unstable guards, each adding 1 or 2."""

    def run(mode):
        q = mode.div(mode.const(0.5), mode.const(0.005))
        total = mode.const(0.1)
        outcomes = []
        for i in range(n_sites):
            below = mode.lt(q, mode.const(100.0), f"toy.site{i}")
            outcomes.append(below)
            total = mode.add(total, mode.const(2.0 if below else 1.0))
        if fail_on is not None and tuple(outcomes) == fail_on:
            raise SolverError("push-limit", "toy divergence")
        return total, len(outcomes)
    return run


def stable_run(mode):
    x = mode.mul(mode.const(0.1), mode.const(3.0))
    mode.lt(x, mode.const(1.0), "toy.stable")
    return x, 1


def test_stable_program_runs_one_flow():
    ex = explore_flows(stable_run, ShadowConfig(max_paths=4))
    assert len(ex.flows) == 1
    t = ex.flows[0]
    assert ex.merged_error == distance_bound(t.ideal_form, [t.cost_float])
    assert ex.unexplored == 0


def test_budget_caps_flows_and_merge_is_max():
    ex = explore_flows(unstable_run(3), ShadowConfig(max_paths=4))
    assert len(ex.flows) == 4
    assert ex.unexplored > 0
    assert len({tuple(t.decisions) for t in ex.flows}) == 4
    ref = ex.flows[0].cost_float
    errs = [distance_bound(t.ideal_form, [ref, t.cost_float]) for t in ex.flows]
    assert ex.merged_error == max(errs)
    assert ex.merged_error >= 2.0


def test_flows_follow_dfs_order():
    ex = explore_flows(unstable_run(2), ShadowConfig(max_paths=10))
    taken = [tuple(d[2] for d in t.decisions) for t in ex.flows]
    # the earliest unstable site is flipped first
    assert taken == [(False, False), (True, False), (True, True), (False, True)]
    assert ex.unexplored == 0


def test_all_sync_runs_one_flow_and_counts_events():
    cfg = ShadowConfig(max_paths=4, default_policy=SYNC)
    ex = explore_flows(unstable_run(3), cfg)
    assert len(ex.flows) == 1
    assert ex.sync_events == 3
    assert sum(r.hits for r in ex.sites.values()) == 3


def test_per_site_sync():
    cfg = ShadowConfig(max_paths=10, policies={"toy.site0": SYNC}, default_policy=SPLIT)
    ex = explore_flows(unstable_run(2), cfg)
    assert len(ex.flows) == 2
    assert ex.sites["toy.site0"].policy == SYNC


def test_diverged_flow_is_excluded_from_merge():
    ex = explore_flows(unstable_run(2, fail_on=(True, True)), ShadowConfig(max_paths=10))
    bad = [t for t in ex.flows if t.diverged]
    assert len(bad) == 1 and bad[0].failure == "push-limit"
    assert ex.merged_error == max(t.error for t in ex.flows if not t.diverged)


def test_max_paths_validated():
    with pytest.raises(ValueError):
        explore_flows(stable_run, ShadowConfig(max_paths=0))
