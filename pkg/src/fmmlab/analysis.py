"""Precision audits of the solve-and-extract pipeline.

Four harnesses, each returning an immutable report that serialises to JSON:

* :func:`run_stochastic` -- one synchronous three-sample execution.
* :func:`run_multirun` -- ``n`` randomly rounded executions plus a plain
  reference, with the 4-sigma consistency flag.
* :func:`run_shadow` -- affine shadow execution with bounded flow
  exploration.
* :func:`compare_refinement` -- plain solves at two grid resolutions.

:func:`run_oracle` replays the plain control flow in extended precision,
which is how shadow bounds are checked.
"""

from __future__ import annotations

import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backtrace import run_pipeline
from .errors import AnalysisError, BacktraceError, FmmlabError
from .grid import CostGrid, GridGeometry, Scenario, load_scenario, write_scenario
from .scalar import (PLAIN, RandomRoundMode, RecordingMode, RngStream, StochasticMode,
                     derive_seed, significant_digits)
from .shadow import AffineForm, ExtFloatMode, ShadowConfig, explore_flows
from .shadow.extfloat import DEFAULT_PREC
from .shadow.mode import distance_bound


def _num(x):
    # JSON has no infinities; they are spelled out
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        raise AnalysisError("nan-in-report", "NaN cannot be reported")
    return x


def report_to_json(report) -> str:
    """Deterministic JSON text of a report (trailing newline included)."""
    return json.dumps(report.to_dict(), indent=2) + "\n"


# -- stochastic ----------------------------------------------------------------


@dataclass(frozen=True)
class StochasticReport:
    scenario_name: str
    seed: int
    mean: float
    sigma: float
    samples: tuple
    relative_error: float
    digits: float
    counters: dict
    point_count: int
    t_goal: float

    def to_dict(self) -> dict:
        return {
            "mode": "stochastic",
            "scenario_name": self.scenario_name,
            "seed": self.seed,
            "cost": {
                "mean": _num(self.mean),
                "sigma": _num(self.sigma),
                "relative_error": _num(self.relative_error),
                "digits": _num(self.digits),
                "samples": [_num(v) for v in self.samples],
            },
            "path": {"point_count": self.point_count, "t_goal": _num(self.t_goal)},
            "counters": dict(self.counters),
        }


def run_stochastic(scenario: Scenario, seed: int) -> StochasticReport:
    mode = StochasticMode(RngStream(seed))
    try:
        _, path = run_pipeline(scenario, mode)
    except BacktraceError as exc:
        raise BacktraceError(exc.code, exc.message, counters=mode.counters.as_dict()) from exc
    c = path.cost
    mean, sigma = c.mean, c.sigma
    rel = sigma / abs(mean) if mean != 0 else (0.0 if sigma == 0 else math.inf)
    return StochasticReport(scenario.name, seed, mean, sigma, c.samples(), rel,
                            significant_digits(c), mode.counters.as_dict(),
                            path.point_count, path.t_goal.mean)


# -- multi-run -----------------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    index: int
    seed: int
    cost: float | None
    point_count: int | None
    error: str | None = None

    def to_dict(self) -> dict:
        d = {"index": self.index, "seed": self.seed, "cost": _num(self.cost),
             "point_count": self.point_count}
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass(frozen=True)
class MultiRunReport:
    scenario_name: str
    seed: int
    runs: tuple
    mean: float | None
    sigma: float | None
    reference_cost: float
    reference_point_count: int
    reference_within_4_sigma: bool | None
    perturbed: bool = True

    def to_dict(self) -> dict:
        return {
            "mode": "multirun",
            "scenario_name": self.scenario_name,
            "seed": self.seed,
            "cost": {
                "mean": _num(self.mean),
                "sigma": _num(self.sigma),
                "reference": _num(self.reference_cost),
                "reference_within_4_sigma": self.reference_within_4_sigma,
            },
            "path": {"reference_point_count": self.reference_point_count},
            "runs": [r.to_dict() for r in self.runs],
        }


def _one_run(args):
    text, index, run_seed, perturb = args
    scenario = load_scenario(text)
    mode = RandomRoundMode(RngStream(run_seed) if perturb else None)
    try:
        _, path = run_pipeline(scenario, mode)
    except FmmlabError as exc:
        return RunRecord(index, run_seed, None, None, exc.code)
    return RunRecord(index, run_seed, path.cost, path.point_count)


def run_multirun(scenario: Scenario, n: int, seed: int, jobs: int = 1,
                 perturb: bool = True) -> MultiRunReport:
    """``n`` random-rounding runs with seeds ``derive_seed(seed, i)``.

    ``jobs > 1`` spreads runs over processes; results are identical.
    """
    if n < 2:
        raise AnalysisError("need-at-least-2-runs", f"got n = {n}")
    text = write_scenario(scenario)
    tasks = [(text, i, derive_seed(seed, i), perturb) for i in range(n)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_one_run, tasks))
    else:
        runs = [_one_run(t) for t in tasks]
    _, ref = run_pipeline(scenario, PLAIN)
    costs = [r.cost for r in runs if r.error is None]
    mean = sigma = flag = None
    if len(costs) >= 2:
        mean = math.fsum(costs) / len(costs)
        sigma = statistics.stdev(costs)
        flag = abs(ref.cost - mean) <= 4.0 * sigma
    return MultiRunReport(scenario.name, seed, tuple(runs), mean, sigma, ref.cost,
                          ref.point_count, flag, perturb)


# -- shadow --------------------------------------------------------------------


@dataclass(frozen=True)
class ShadowReport:
    scenario_name: str
    seed: int | None
    flows: tuple
    error_bound: float | None
    unstable_sites: tuple
    mantissa_bits: int
    max_symbols: int
    max_paths: int
    unexplored: int
    sync_events: int

    @property
    def flow_count(self) -> int:
        return len(self.flows)

    def to_dict(self) -> dict:
        flows = []
        for t in self.flows:
            d = {
                "decisions": len(t.decisions),
                "diverged": t.diverged,
                "cost_float": _num(t.cost_float),
                "cost_ideal": (None if t.diverged else
                               "top" if t.cost_ideal is None else [_num(v) for v in t.cost_ideal]),
                "point_count": t.path_point_count,
                "error": _num(t.error),
                "rounding_ledger": _num(t.rounding_ledger),
            }
            if t.failure:
                d["failure"] = t.failure
            flows.append(d)
        first = self.flows[0]
        return {
            "mode": "shadow",
            "scenario_name": self.scenario_name,
            "seed": self.seed,
            "cost": {"float": _num(first.cost_float),
                     "ideal": flows[0]["cost_ideal"]},
            "path": {"point_count": first.path_point_count},
            "flows": flows,
            "unstable_sites": [dict(s) for s in self.unstable_sites],
            "error_bound": "top" if self.error_bound == math.inf else _num(self.error_bound),
            "mantissa_bits": self.mantissa_bits,
            "max_symbols": self.max_symbols,
            "max_paths": self.max_paths,
            "unexplored_branches": self.unexplored,
            "synchronized_events": self.sync_events,
        }

    def site(self, site_id: str) -> dict | None:
        for s in self.unstable_sites:
            if s["site_id"] == site_id:
                return s
        return None


def run_shadow(scenario: Scenario, config: ShadowConfig | None = None,
               seed: int | None = None) -> ShadowReport:
    """Shadow-execute solve and extraction, exploring up to ``max_paths`` flows."""
    config = config or ShadowConfig()

    def run(mode):
        _, path = run_pipeline(scenario, mode)
        return path.cost, path.point_count

    ex = explore_flows(run, config)
    if all(t.diverged for t in ex.flows):
        raise AnalysisError("shadow-analysis-failed",
                            f"all {len(ex.flows)} flows diverged ({ex.flows[0].failure})")
    sites = tuple(
        {"site_id": r.site_id, "location": r.location, "policy": r.policy,
         "hits": r.hits, "conversions": list(r.conversions)}
        for r in sorted(ex.sites.values(), key=lambda r: r.site_id)
    )
    return ShadowReport(scenario.name, seed, tuple(ex.flows), ex.merged_error, sites,
                        config.mantissa_bits, config.max_symbols, config.max_paths,
                        ex.unexplored, ex.sync_events)


@dataclass(frozen=True)
class OracleResult:
    plain_cost: float
    oracle_cost: object
    point_count: int
    disagreements: int

    @property
    def gap(self) -> float:
        """``|plain - oracle|`` rounded up to a float."""
        return distance_bound(AffineForm(self.oracle_cost), [self.plain_cost])


def run_oracle(scenario: Scenario, prec: int = DEFAULT_PREC) -> OracleResult:
    """Plain run, then the same control flow replayed in ``prec``-bit arithmetic."""
    rec = RecordingMode()
    _, path = run_pipeline(scenario, rec)
    ext = ExtFloatMode(prec, replay=rec.trace)
    _, opath = run_pipeline(scenario, ext)
    if not ext.replay_complete():
        raise AnalysisError("oracle-replay-mismatch", "oracle did not consume the whole trace")
    return OracleResult(path.cost, opath.cost, path.point_count, ext.disagreements)


# -- refinement ----------------------------------------------------------------


def refine_scenario(scenario: Scenario, factor: int) -> Scenario:
    """Same domain with ``factor`` times finer spacing; costs resampled bilinearly."""
    if factor not in (2, 4):
        raise AnalysisError("invalid-factor", f"factor must be 2 or 4, got {factor!r}")
    g = scenario.geometry
    nx, ny = (g.nx - 1) * factor + 1, (g.ny - 1) * factor + 1
    geom = GridGeometry(nx, ny, g.x_min, g.y_min, g.dx / factor, g.dy / factor)
    tau = scenario.grid.tau

    def weights(n_coarse, n_fine):
        idx = np.arange(n_fine)
        base = np.minimum(idx // factor, n_coarse - 2)
        frac = (idx - base * factor) / factor
        return base, frac

    bx, fx = weights(g.nx, nx)
    by, fy = weights(g.ny, ny)
    t00 = tau[np.ix_(by, bx)]
    t10 = tau[np.ix_(by, bx + 1)]
    t01 = tau[np.ix_(by + 1, bx)]
    t11 = tau[np.ix_(by + 1, bx + 1)]
    FX = fx[None, :]
    FY = fy[:, None]
    fine = (1 - FY) * ((1 - FX) * t00 + FX * t10) + FY * ((1 - FX) * t01 + FX * t11)
    start = (scenario.start[0] * factor, scenario.start[1] * factor)
    goal = (scenario.goal[0] * factor, scenario.goal[1] * factor)
    return Scenario(CostGrid(geom, fine), start, goal, f"{scenario.name}-x{factor}")


@dataclass(frozen=True)
class Resolution:
    nx: int
    ny: int
    dx: float
    dy: float
    cost: float
    t_goal: float
    point_count: int

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "dx": _num(self.dx), "dy": _num(self.dy),
                "cost": _num(self.cost), "t_goal": _num(self.t_goal),
                "point_count": self.point_count}


@dataclass(frozen=True)
class RefinementReport:
    scenario_name: str
    factor: int
    resolutions: tuple
    relative_difference: float

    def to_dict(self) -> dict:
        return {
            "mode": "refinement",
            "scenario_name": self.scenario_name,
            "seed": None,
            "cost": {"relative_difference": _num(self.relative_difference)},
            "resolutions": [r.to_dict() for r in self.resolutions],
        }


def _resolution(s: Scenario) -> Resolution:
    _, path = run_pipeline(s, PLAIN)
    g = s.geometry
    return Resolution(g.nx, g.ny, g.dx, g.dy, path.cost, path.t_goal, path.point_count)


def compare_refinement(scenario: Scenario, factor: int) -> RefinementReport:
    fine = refine_scenario(scenario, factor)
    a = _resolution(scenario)
    b = _resolution(fine)
    rel = abs(b.cost - a.cost) / abs(a.cost)
    return RefinementReport(scenario.name, factor, (a, b), rel)


__all__ = [
    "MultiRunReport", "OracleResult", "RefinementReport", "Resolution", "RunRecord",
    "ShadowReport", "StochasticReport", "compare_refinement", "refine_scenario",
    "report_to_json", "run_multirun", "run_oracle", "run_shadow", "run_stochastic",
]
