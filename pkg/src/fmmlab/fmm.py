"""Fast marching solver for the discrete Eikonal equation on a cost grid.

Nodes are finalised in increasing order of arrival time, Dijkstra style.  A
tentative value is the minimum of four first-order upwind quadrant updates
(north-east, south-east, south-west, north-west), each built from the
accepted horizontal and vertical neighbours.  All arithmetic and comparisons
go through a :class:`~fmmlab.scalar.ScalarMode`.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .grid import GridGeometry, Scenario
from .scalar import PLAIN, ScalarMode

FAR, BAND, ACCEPTED = 0, 1, 2


@dataclass
class ArrivalField:
    """Arrival times and node states of one solve, indexed ``k = iy * nx + ix``."""

    geometry: GridGeometry
    T: list
    state: bytearray
    mode: ScalarMode
    accept_order: list = field(default_factory=list)
    pushes: int = 0

    def index(self, ix: int, iy: int) -> int:
        return iy * self.geometry.nx + ix

    def value(self, ix: int, iy: int):
        return self.T[iy * self.geometry.nx + ix]

    def is_accepted(self, ix: int, iy: int) -> bool:
        return self.state[iy * self.geometry.nx + ix] == ACCEPTED

    def as_array(self) -> np.ndarray:
        """Float projection of ``T`` with shape ``(ny, nx)``."""
        g = self.geometry
        f = self.mode.to_float
        return np.array([f(t) for t in self.T], dtype=np.float64).reshape(g.ny, g.nx)

    def accepted_values(self) -> list[float]:
        """Float projections of the finalised values, in acceptance order."""
        f = self.mode.to_float
        return [f(self.T[k]) for k in self.accept_order]


class _Consts:
    """Mode constants derived once per solve from the spacings."""

    __slots__ = ("dx", "dy", "idx2", "idy2", "a", "zero")

    def __init__(self, m: ScalarMode, dx: float, dy: float):
        self.dx = m.const(dx)
        self.dy = m.const(dy)
        one = m.const(1.0)
        self.idx2 = m.div(one, m.mul(self.dx, self.dx))
        self.idy2 = m.div(one, m.mul(self.dy, self.dy))
        self.a = m.add(self.idx2, self.idy2)
        self.zero = m.const(0.0)


def _quadrant(m: ScalarMode, th, tv, tau, c: _Consts):
    # th / tv are None for a missing (non-accepted) neighbour
    if th is None:
        if tv is None:
            raise SolverError("no-valued-neighbor", "quadrant without any valued neighbour")
        return m.add(tv, m.mul(tau, c.dy))
    if tv is None:
        return m.add(th, m.mul(tau, c.dx))
    # larger root of a*T^2 - 2*bh*T + cc = 0
    bh = m.add(m.mul(th, c.idx2), m.mul(tv, c.idy2))
    cc = m.sub(m.add(m.mul(m.mul(th, th), c.idx2), m.mul(m.mul(tv, tv), c.idy2)), m.mul(tau, tau))
    disc = m.sub(m.mul(bh, bh), m.mul(c.a, cc))
    if not m.lt(disc, c.zero, "fmm.discriminant"):
        root = m.div(m.add(bh, m.sqrt(disc)), c.a)
        if not m.lt(root, th, "fmm.upwind") and not m.lt(root, tv, "fmm.upwind"):
            return root
    h = m.add(th, m.mul(tau, c.dx))
    v = m.add(tv, m.mul(tau, c.dy))
    return v if m.lt(v, h, "fmm.one_sided_min") else h


def quadrant_update(th, tv, dx: float, dy: float, tau, mode: ScalarMode = PLAIN):
    """Upwind candidate from one horizontal and one vertical neighbour value.

    ``th``/``tv`` may be the mode's infinity (or ``None``) for a missing
    neighbour; both missing raises ``no-valued-neighbor``.
    """
    m = mode
    th = None if th is None or m.is_inf(th) else th
    tv = None if tv is None or m.is_inf(tv) else tv
    return _quadrant(m, th, tv, tau, _Consts(m, dx, dy))


class NarrowBandQueue:
    """Binary min-heap of ``(T, k, stamp)`` with lazy deletion.

    Order is the mode's ``<`` on ``T``, ties broken by node index, which is
    ``(iy, ix)`` order.  Stale entries are skipped by the caller.
    """

    def __init__(self, mode: ScalarMode):
        self.mode = mode
        self.heap: list = []

    def __len__(self):
        return len(self.heap)

    def _before(self, p, q) -> bool:
        lt = self.mode.lt
        if lt(p[0], q[0], "fmm.heap_order"):
            return True
        if lt(q[0], p[0], "fmm.heap_order"):
            return False
        return p[1] < q[1]

    def push(self, entry) -> None:
        h = self.heap
        h.append(entry)
        i = len(h) - 1
        while i > 0:
            parent = (i - 1) >> 1
            if self._before(h[i], h[parent]):
                h[i], h[parent] = h[parent], h[i]
                i = parent
            else:
                break

    def pop(self):
        h = self.heap
        last = h.pop()
        if not h:
            return last
        top = h[0]
        h[0] = last
        n = len(h)
        i = 0
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            best = left
            right = left + 1
            if right < n and self._before(h[right], h[left]):
                best = right
            if self._before(h[best], h[i]):
                h[i], h[best] = h[best], h[i]
                i = best
            else:
                break
        return top


class _FloatQueue:
    """``heapq`` variant for modes whose values are plain floats."""

    def __init__(self):
        self.heap: list = []

    def __len__(self):
        return len(self.heap)

    def push(self, entry) -> None:
        heapq.heappush(self.heap, entry)

    def pop(self):
        return heapq.heappop(self.heap)


def init(scenario: Scenario, mode: ScalarMode = PLAIN):
    """Fresh solver state: ``T(A) = 0`` in the band, everything else far."""
    g = scenario.geometry
    n = g.nx * g.ny
    T = [mode.inf] * n
    state = bytearray(n)
    k0 = scenario.start[1] * g.nx + scenario.start[0]
    T[k0] = mode.const(0.0)
    state[k0] = BAND
    field_ = ArrivalField(g, T, state, mode)
    queue = _FloatQueue() if mode.native_float else NarrowBandQueue(mode)
    stamps = [0] * n
    queue.push((T[k0], k0, 0))
    field_.pushes = 1
    return field_, queue, stamps


def _accepted_or_none(T, state, k):
    return T[k] if state[k] == ACCEPTED else None


def update_node(field_: ArrivalField, k: int, tau, c: _Consts):
    """Recompute the tentative value of node ``k``; returns it, or ``None``.

    ``None`` means no quadrant had a valued neighbour.
    """
    m = field_.mode
    g = field_.geometry
    nx = g.nx
    T, state = field_.T, field_.state
    ix = k % nx
    iy = k // nx
    east = _accepted_or_none(T, state, k + 1) if ix + 1 < nx else None
    west = _accepted_or_none(T, state, k - 1) if ix > 0 else None
    north = _accepted_or_none(T, state, k + nx) if iy + 1 < g.ny else None
    south = _accepted_or_none(T, state, k - nx) if iy > 0 else None
    best = None
    seen = set()
    for hk, vk in (("E", "N"), ("E", "S"), ("W", "S"), ("W", "N")):
        h = east if hk == "E" else west
        v = north if vk == "N" else south
        # a missing side turns quadrants into repeats of one one-sided update
        key = (hk if h is not None else None, vk if v is not None else None)
        if key == (None, None) or key in seen:
            continue
        seen.add(key)
        cand = _quadrant(m, h, v, tau, c)
        if best is None or m.lt(cand, best, "fmm.quadrant_min"):
            best = cand
    return best


def solve(scenario: Scenario, mode: ScalarMode = PLAIN, early_exit: bool = False) -> ArrivalField:
    """Run fast marching from the start node over the whole grid.

    With ``early_exit`` the march stops as soon as the goal is accepted.
    """
    m = mode
    g = scenario.geometry
    nx, ny = g.nx, g.ny
    c = _Consts(m, g.dx, g.dy)
    taus = [m.const(float(v)) for v in scenario.grid.tau.ravel()]
    field_, queue, stamps = init(scenario, m)
    T, state, order = field_.T, field_.state, field_.accept_order
    goal = scenario.goal[1] * nx + scenario.goal[0]
    limit = 8 * nx * ny
    lt = m.lt
    while len(queue):
        _, k, stamp = queue.pop()
        if state[k] == ACCEPTED or stamp != stamps[k]:
            continue
        state[k] = ACCEPTED
        order.append(k)
        if early_exit and k == goal:
            break
        ix = k % nx
        iy = k // nx
        for nb, ok in ((k + 1, ix + 1 < nx), (k - 1, ix > 0), (k + nx, iy + 1 < ny), (k - nx, iy > 0)):
            if not ok or state[nb] == ACCEPTED:
                continue
            cand = update_node(field_, nb, taus[nb], c)
            if cand is None:
                continue
            if state[nb] == FAR or lt(cand, T[nb], "fmm.improve"):
                T[nb] = cand
                state[nb] = BAND
                stamps[nb] += 1
                queue.push((cand, nb, stamps[nb]))
                field_.pushes += 1
                if field_.pushes > limit:
                    raise SolverError("push-limit", f"more than {limit} heap pushes")
    if early_exit and state[goal] != ACCEPTED:
        raise SolverError("goal-unreachable", "queue exhausted before reaching the goal")
    return field_
