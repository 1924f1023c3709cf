"""Path extraction by pseudo-gradient descent on a solved arrival field.

From the goal, each step looks at a small set of grid segments around the
current point and moves to the segment point ``Q`` minimising
``(T(Q) - T(P)) / |Q - P|``, with ``T`` linear along each segment.  Points
stay on grid lines, so a point is a node, lies on a cell edge, or (only in
degenerate input) inside a cell.

Path geometry (coordinates and segment parameters) is plain float data; the
arrival values, slopes, cost integrand and every decision that depends on
them go through the scalar mode.  The per-segment parameter search runs on
float projections of the mode values, then the mode recomputes the slope at
the chosen parameter.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

from .errors import BacktraceError
from .fmm import ArrivalField, solve
from .grid import CostGrid, GridGeometry, Scenario
from .scalar import PLAIN, ScalarMode

N_SAMPLES = 65
GOLDEN_TOL = 1e-12
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_SNAP = 1e-9


@dataclass
class Path:
    points: list
    cost: object
    t_goal: object
    mode: ScalarMode

    @property
    def point_count(self) -> int:
        return len(self.points)

    @property
    def cost_float(self) -> float:
        return self.mode.to_float(self.cost)

    def length(self) -> float:
        return sum(math.dist(p, q) for p, q in zip(self.points, self.points[1:]))


@dataclass(frozen=True)
class Segment:
    """Grid segment between two adjacent nodes, given as ``(ix, iy)`` pairs."""

    a: tuple
    b: tuple


@dataclass(frozen=True)
class Location:
    kind: str  # "node", "hedge", "vedge" or "cell"
    ix: int
    iy: int


# -- locating points -----------------------------------------------------------


def _axis_index(m: ScalarMode, coord: float, origin: float, step: float, n: int, site: str) -> int:
    u = m.div(m.sub(m.const(coord), m.const(origin)), m.const(step))
    i = m.trunc(u, site)
    return min(i, n - 1)


def _snap(coord, i, origin, step, n, tol):
    # (index, on_line): the grid line within tol of the coordinate, if any
    for j in (i, i + 1, i - 1):
        if 0 <= j < n and abs(coord - (origin + j * step)) <= tol:
            return j, True
    return i, False


def locate(point, geometry: GridGeometry, mode: ScalarMode = PLAIN) -> Location:
    """Classify a point as node, horizontal edge, vertical edge or cell interior.

    The cell indices come from truncating ``(p - origin) / spacing`` in the
    scalar mode; the float position then decides whether the point sits on
    a grid line (within ``1e-9 * min(dx, dy)``).
    """
    g = geometry
    x, y = point
    tol = _SNAP * min(g.dx, g.dy)
    ix = _axis_index(mode, x, g.x_min, g.dx, g.nx, "backtrace.locate_x")
    iy = _axis_index(mode, y, g.y_min, g.dy, g.ny, "backtrace.locate_y")
    ix, on_x = _snap(x, ix, g.x_min, g.dx, g.nx, tol)
    iy, on_y = _snap(y, iy, g.y_min, g.dy, g.ny, tol)
    ix = min(ix, g.nx - 1 if on_x else g.nx - 2)
    iy = min(iy, g.ny - 1 if on_y else g.ny - 2)
    if on_x and on_y:
        return Location("node", ix, iy)
    if on_y:
        return Location("hedge", ix, iy)
    if on_x:
        return Location("vedge", ix, iy)
    return Location("cell", ix, iy)


_RING = ((-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0))


def _cell_edges(i, j):
    # bottom, right, top, left
    return [((i, j), (i + 1, j)), ((i + 1, j), (i + 1, j + 1)),
            ((i, j + 1), (i + 1, j + 1)), ((i, j), (i, j + 1))]


def candidate_segments(point, geometry: GridGeometry, mode: ScalarMode = PLAIN,
                       location: Location | None = None) -> list[Segment]:
    """Segments searched for the next path point, in a fixed order.

    Node: the ring through the 8 surrounding nodes.  Edge: the other edges
    of the two cells sharing it.  Cell interior: the cell's 4 edges.
    Segments leaving the grid are dropped.
    """
    g = geometry
    loc = location or locate(point, g, mode)
    i, j = loc.ix, loc.iy
    if loc.kind == "node":
        raw = []
        for r in range(8):
            di, dj = _RING[r]
            ei, ej = _RING[(r + 1) % 8]
            raw.append(((i + di, j + dj), (i + ei, j + ej)))
    elif loc.kind == "hedge":
        own = ((i, j), (i + 1, j))
        raw = [e for cell in ((i, j - 1), (i, j)) if 0 <= cell[1] < g.ny - 1
               for e in _cell_edges(*cell) if e != own]
    elif loc.kind == "vedge":
        own = ((i, j), (i, j + 1))
        raw = [e for cell in ((i - 1, j), (i, j)) if 0 <= cell[0] < g.nx - 1
               for e in _cell_edges(*cell) if e != own]
    else:
        raw = _cell_edges(i, j)
    return [Segment(a, b) for a, b in raw if g.contains(*a) and g.contains(*b)]


# -- interpolation ---------------------------------------------------------------


def interp_T(field: ArrivalField, point, mode: ScalarMode | None = None):
    """Bilinear interpolation of the arrival values at ``point``."""
    m = mode or field.mode
    g = field.geometry
    x, y = point
    tol = _SNAP * min(g.dx, g.dy)
    if not (g.x_min - tol <= x <= g.x_max + tol and g.y_min - tol <= y <= g.y_max + tol):
        raise BacktraceError("out-of-domain", f"({x!r}, {y!r}) outside the grid")
    u = (x - g.x_min) / g.dx
    v = (y - g.y_min) / g.dy
    i = min(max(int(math.floor(u)), 0), g.nx - 2)
    j = min(max(int(math.floor(v)), 0), g.ny - 2)
    for a, b in ((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)):
        if not field.is_accepted(a, b):
            raise BacktraceError("unaccepted-region", f"node ({a}, {b}) has no final value")
    fx = m.const(u - i)
    fy = m.const(v - j)
    one = m.const(1.0)
    t00, t10 = field.value(i, j), field.value(i + 1, j)
    t01, t11 = field.value(i, j + 1), field.value(i + 1, j + 1)
    lower = m.add(t00, m.mul(fx, m.sub(t10, t00)))
    upper = m.add(t01, m.mul(fx, m.sub(t11, t01)))
    return m.add(m.mul(m.sub(one, fy), lower), m.mul(fy, upper))


# -- steepest descent ------------------------------------------------------------


def _search_segment(pa, pb, ta, tb, tp, P):
    """Float minimiser ``(phi, t)`` of the slope along one segment."""
    px, py = P
    ax, ay = pa
    ex, ey = pb[0] - ax, pb[1] - ay
    dt = tb - ta

    def phi(t):
        d = math.hypot(ax + t * ex - px, ay + t * ey - py)
        if d == 0.0:
            return math.inf
        return (ta + t * dt - tp) / d

    n = N_SAMPLES - 1
    vals = [phi(k / n) for k in range(N_SAMPLES)]
    kbest = min(range(N_SAMPLES), key=lambda k: (vals[k], k))
    lo = max(kbest - 1, 0) / n
    hi = min(kbest + 1, n) / n
    best_t, best_v = kbest / n, vals[kbest]
    # golden-section refinement on the bracketing interval
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = phi(c), phi(d)
    while hi - lo > GOLDEN_TOL:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = phi(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = phi(d)
    t = c if fc <= fd else d
    v = min(fc, fd)
    if v < best_v:
        best_t, best_v = t, v
    return best_v, best_t


def _node_xy(g, node):
    return g.x(node[0]), g.y(node[1])


def steepest_point(field: ArrivalField, P, T_P, segments, mode: ScalarMode | None = None):
    """Next point ``(Q, T(Q), slope)`` of steepest descent from ``P``.

    Raises ``stagnation`` when no segment point has a lower value.
    """
    m = mode or field.mode
    g = field.geometry
    f = m.to_float
    tp = f(T_P)
    best = None
    for seg in segments:
        if not (field.is_accepted(*seg.a) and field.is_accepted(*seg.b)):
            continue
        pa, pb = _node_xy(g, seg.a), _node_xy(g, seg.b)
        Ta, Tb = field.value(*seg.a), field.value(*seg.b)
        _, t = _search_segment(pa, pb, f(Ta), f(Tb), tp, P)
        t = m.param(t, "backtrace.segment_param")
        if t == 0.0:
            q, Tq = pa, Ta
        elif t == 1.0:
            q, Tq = pb, Tb
        else:
            q = (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))
            Tq = m.add(Ta, m.mul(m.const(t), m.sub(Tb, Ta)))
        if q == P:
            continue
        ddx = m.sub(m.const(q[0]), m.const(P[0]))
        ddy = m.sub(m.const(q[1]), m.const(P[1]))
        dist = m.sqrt(m.add(m.mul(ddx, ddx), m.mul(ddy, ddy)))
        slope = m.div(m.sub(Tq, T_P), dist)
        if best is None or m.lt(slope, best[2], "backtrace.segment_argmin"):
            best = (q, Tq, slope)
    if best is None or not m.lt(best[2], m.const(0.0), "backtrace.descent"):
        raise BacktraceError("stagnation", f"no descent direction at {P!r}")
    return best


def extract_path(field: ArrivalField, scenario: Scenario, mode: ScalarMode | None = None) -> Path:
    """Descend from the goal until within one grid spacing of the start.

    The start point is appended last.  The step budget is ``10 * (nx + ny)``.
    """
    m = mode or field.mode
    g = scenario.geometry
    A = _node_xy(g, scenario.start)
    B = _node_xy(g, scenario.goal)
    if not field.is_accepted(*scenario.goal):
        raise BacktraceError("unaccepted-region", "goal has no final arrival value")
    T_B = field.value(*scenario.goal)
    radius = max(g.dx, g.dy)
    r2 = m.const(radius * radius)
    ax, ay = m.const(A[0]), m.const(A[1])

    def near_start(p):
        ddx = m.sub(m.const(p[0]), ax)
        ddy = m.sub(m.const(p[1]), ay)
        return m.le(m.add(m.mul(ddx, ddx), m.mul(ddy, ddy)), r2, "backtrace.termination")

    points = [B]
    P, T_P = B, T_B
    budget = 10 * (g.nx + g.ny)
    steps = 0
    while not near_start(P):
        if steps >= budget:
            raise BacktraceError("backtrace-diverged", f"no arrival within {budget} steps")
        segs = candidate_segments(P, g, m)
        P, T_P, _ = steepest_point(field, P, T_P, segs, m)
        points.append(P)
        steps += 1
    if points[-1] != A:
        points.append(A)
    cost = path_cost(points, scenario.grid, m)
    return Path(points, cost, T_B, m)


# -- cost integral ---------------------------------------------------------------


def tau_at_mode(grid: CostGrid, point, mode: ScalarMode):
    """Bilinear cost at ``point`` evaluated in the scalar mode."""
    m = mode
    g = grid.geometry
    x, y = point
    u = m.div(m.sub(m.const(x), m.const(g.x_min)), m.const(g.dx))
    v = m.div(m.sub(m.const(y), m.const(g.y_min)), m.const(g.dy))
    i = min(m.trunc(u, "grid.tau_cell_x"), g.nx - 2)
    j = min(m.trunc(v, "grid.tau_cell_y"), g.ny - 2)
    fx = m.sub(u, m.const(float(i)))
    fy = m.sub(v, m.const(float(j)))
    one = m.const(1.0)
    t = grid.tau
    t00, t10 = m.const(float(t[j, i])), m.const(float(t[j, i + 1]))
    t01, t11 = m.const(float(t[j + 1, i])), m.const(float(t[j + 1, i + 1]))
    gx = m.sub(one, fx)
    lower = m.add(m.mul(gx, t00), m.mul(fx, t10))
    upper = m.add(m.mul(gx, t01), m.mul(fx, t11))
    return m.add(m.mul(m.sub(one, fy), lower), m.mul(fy, upper))


def path_cost(points, grid: CostGrid, mode: ScalarMode = PLAIN):
    """Trapezoidal line integral of the bilinear cost along the polyline."""
    m = mode
    total = m.const(0.0)
    if len(points) < 2:
        return total
    half = m.const(0.5)
    taus = [tau_at_mode(grid, p, m) for p in points]
    for k in range(len(points) - 1):
        p, q = points[k], points[k + 1]
        ddx = m.sub(m.const(q[0]), m.const(p[0]))
        ddy = m.sub(m.const(q[1]), m.const(p[1]))
        seg = m.sqrt(m.add(m.mul(ddx, ddx), m.mul(ddy, ddy)))
        total = m.add(total, m.mul(m.mul(m.add(taus[k], taus[k + 1]), half), seg))
    return total


def path_to_csv(path) -> str:
    points = path.points if isinstance(path, Path) else path
    buf = io.StringIO()
    buf.write("x,y\n")
    for x, y in points:
        buf.write(f"{x!r},{y!r}\n")
    return buf.getvalue()


def run_pipeline(scenario: Scenario, mode: ScalarMode = PLAIN, early_exit: bool = False):
    """Solve then extract; returns ``(field, path)``."""
    field = solve(scenario, mode, early_exit=early_exit)
    return field, extract_path(field, scenario, mode)
