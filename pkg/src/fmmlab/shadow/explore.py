"""Bounded depth-first exploration of control flows split at unstable sites.

Each flow is a complete re-execution of the analysed program under a
:class:`FlowController` whose prefix fixes the outcome of the first SPLIT
events.  Flow 0 follows the float everywhere.  After a flow finishes, the
untried outcomes of each of its free decisions are queued, deepest first on
the stack so that the earliest decision is flipped next.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..errors import FmmlabError
from .affine import DEFAULT_BUDGET, TOP, AffineContext
from .extfloat import DEFAULT_PREC
from .mode import SPLIT, FlowController, ShadowMode, distance_bound

DEFAULT_MAX_PATHS = 4


@dataclass
class ShadowConfig:
    max_paths: int = DEFAULT_MAX_PATHS
    mantissa_bits: int = DEFAULT_PREC
    max_symbols: int = DEFAULT_BUDGET
    policies: dict = field(default_factory=dict)
    default_policy: str = SPLIT
    guard_budget: int = 8


@dataclass
class FlowTrace:
    decisions: list
    cost_float: float | None = None
    cost_ideal: tuple | None = None
    path_point_count: int | None = None
    error: float | None = None
    rounding_ledger: float | None = None
    diverged: bool = False
    failure: str | None = None
    ideal_form: object = None


@dataclass
class Exploration:
    flows: list
    merged_error: float | None
    sites: dict
    unexplored: int
    sync_events: int
    fallbacks: int


RunFn = Callable[[ShadowMode], tuple]


def _run_flow(run: RunFn, prefix, config: ShadowConfig):
    ctx = AffineContext(prec=config.mantissa_bits, budget=config.max_symbols)
    ctl = FlowController(prefix, config.policies, config.default_policy, config.guard_budget)
    mode = ShadowMode(ctx, ctl)
    trace = FlowTrace([])
    try:
        cost, count = run(mode)
    except FmmlabError as exc:
        trace.diverged = True
        trace.failure = exc.code
    else:
        trace.cost_float = cost.f
        trace.path_point_count = count
        trace.rounding_ledger = cost.err
        trace.ideal_form = cost.ideal
        trace.cost_ideal = None if cost.ideal is TOP else cost.ideal_interval()
    trace.decisions = [(d.site_id, d.float_choice, d.taken) for d in ctl.decisions]
    return trace, ctl


def explore_flows(run: RunFn, config: ShadowConfig | None = None) -> Exploration:
    """Explore at most ``config.max_paths`` flows of ``run``.

    ``run(mode)`` must execute the whole computation under ``mode`` and return
    ``(cost: ShadowScalar, point_count)``; raising a :class:`FmmlabError`
    marks the flow as diverged.
    """
    config = config or ShadowConfig()
    if config.max_paths < 1:
        raise ValueError("max_paths must be at least 1")
    stack = [()]
    flows: list[FlowTrace] = []
    sites: dict = {}
    sync_events = fallbacks = 0
    while stack and len(flows) < config.max_paths:
        prefix = stack.pop()
        trace, ctl = _run_flow(run, prefix, config)
        flows.append(trace)
        sync_events += ctl.sync_events
        fallbacks += ctl.fallbacks
        for sid, rec in ctl.sites.items():
            agg = sites.get(sid)
            if agg is None:
                sites[sid] = rec
            else:
                agg.hits += rec.hits
                for c in rec.conversions:
                    if c not in agg.conversions and len(agg.conversions) < 8:
                        agg.conversions.append(c)
        taken = [d.taken for d in ctl.decisions]
        for j in range(len(ctl.decisions) - 1, len(prefix) - 1, -1):
            d = ctl.decisions[j]
            for alt in reversed(d.alternatives):
                stack.append(tuple(taken[:j]) + (alt,))
    ok = [t for t in flows if not t.diverged]
    merged = None
    if ok:
        ref = flows[0].cost_float if not flows[0].diverged else None
        for t in ok:
            floats = [t.cost_float] if ref is None else [ref, t.cost_float]
            t.error = distance_bound(t.ideal_form, floats)
        merged = max(t.error for t in ok)
    return Exploration(flows, merged, sites, len(stack), sync_events, fallbacks)
