"""Cost grids, scenarios, the text scenario format and scenario generators.

Scenario text format, version 1 (whitespace separated, ``#`` starts a
comment)::

    fmmlab-scenario 1
    <name>
    <nx> <ny>
    <x_min> <y_min> <dx> <dy>
    <start_ix> <start_iy>
    <goal_ix> <goal_iy>
    <ny rows of nx cost values, row 0 at y = y_min>

Floats are written as shortest round-trip decimals, so ``load`` after
``write`` reproduces every value bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ScenarioError

MAGIC = "fmmlab-scenario 1"
PRESETS = ("uniform", "obstacles", "turbulence", "paper-like")


@dataclass(frozen=True)
class GridGeometry:
    nx: int
    ny: int
    x_min: float
    y_min: float
    dx: float
    dy: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ScenarioError("invalid-geometry", f"need at least 2x2 nodes, got {self.nx}x{self.ny}")
        for v in (self.x_min, self.y_min, self.dx, self.dy):
            if not math.isfinite(v):
                raise ScenarioError("invalid-geometry", "non-finite geometry value")
        if not (self.dx > 0 and self.dy > 0):
            raise ScenarioError("invalid-geometry", "spacings must be positive")

    def x(self, ix: int) -> float:
        return self.x_min + ix * self.dx

    def y(self, iy: int) -> float:
        return self.y_min + iy * self.dy

    def node_xy(self, ix: int, iy: int) -> tuple[float, float]:
        return self.x(ix), self.y(iy)

    @property
    def x_max(self) -> float:
        return self.x(self.nx - 1)

    @property
    def y_max(self) -> float:
        return self.y(self.ny - 1)

    def contains(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.nx and 0 <= iy < self.ny


class CostGrid:
    """Cost density sampled at the nodes; ``tau[iy, ix]`` is read-only."""

    def __init__(self, geometry: GridGeometry, tau):
        arr = np.array(tau, dtype=np.float64)
        if arr.shape != (geometry.ny, geometry.nx):
            raise ScenarioError("invalid-cost", f"expected {geometry.ny}x{geometry.nx} costs, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or not np.all(arr > 0):
            raise ScenarioError("invalid-cost", "costs must be finite and positive")
        arr.setflags(write=False)
        self.geometry = geometry
        self.tau = arr

    def __eq__(self, other):
        if not isinstance(other, CostGrid):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(self.tau, other.tau)


@dataclass(eq=False)
class Scenario:
    grid: CostGrid
    start: tuple[int, int]
    goal: tuple[int, int]
    name: str = "unnamed"

    def __post_init__(self):
        g = self.grid.geometry
        self.start = (int(self.start[0]), int(self.start[1]))
        self.goal = (int(self.goal[0]), int(self.goal[1]))
        if not g.contains(*self.start) or not g.contains(*self.goal):
            raise ScenarioError("invalid-endpoint", f"start {self.start} or goal {self.goal} outside the grid")
        if self.start == self.goal:
            raise ScenarioError("invalid-endpoint", "start and goal coincide")
        self.name = self.name.strip() or "unnamed"

    @property
    def geometry(self) -> GridGeometry:
        return self.grid.geometry

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.grid == other.grid and self.start == other.start
                and self.goal == other.goal and self.name == other.name)


# -- text format -------------------------------------------------------------


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield lineno, body


def _parse_error(lineno, msg):
    err = ScenarioError("parse-error", f"line {lineno}: {msg}")
    err.line = lineno
    return err


def _numbers(lineno, body, count, kind):
    parts = body.split()
    if len(parts) != count:
        raise _parse_error(lineno, f"expected {count} values, got {len(parts)}")
    try:
        return [kind(p) for p in parts]
    except ValueError:
        raise _parse_error(lineno, f"malformed number in {body!r}") from None


def load_scenario(text: str) -> Scenario:
    lines = list(_lines(text))
    if not lines:
        raise _parse_error(1, "empty scenario")
    lineno, magic = lines[0]
    if " ".join(magic.split()) != MAGIC:
        raise _parse_error(lineno, f"expected {MAGIC!r}")
    if len(lines) < 6:
        last = lines[-1][0]
        raise _parse_error(last + 1, "truncated header")
    name = lines[1][1]
    nx, ny = _numbers(*lines[2], 2, int)
    x_min, y_min, dx, dy = _numbers(*lines[3], 4, float)
    start = tuple(_numbers(*lines[4], 2, int))
    goal = tuple(_numbers(*lines[5], 2, int))
    if nx < 2 or ny < 2:
        raise _parse_error(lines[2][0], "grid needs at least 2x2 nodes")
    if not (dx > 0 and dy > 0) or not all(map(math.isfinite, (x_min, y_min, dx, dy))):
        raise _parse_error(lines[3][0], "invalid geometry")
    rows = lines[6:]
    if len(rows) != ny:
        at = rows[ny][0] if len(rows) > ny else (rows[-1][0] + 1 if rows else lines[5][0] + 1)
        raise _parse_error(at, f"expected {ny} cost rows, got {len(rows)}")
    tau = [_numbers(ln, body, nx, float) for ln, body in rows]
    for ln_row, row in zip(rows, tau):
        for v in row:
            if not (math.isfinite(v) and v > 0):
                raise ScenarioError("invalid-cost", f"line {ln_row[0]}: cost {v!r} is not finite and positive")
    geom = GridGeometry(nx, ny, x_min, y_min, dx, dy)
    return Scenario(CostGrid(geom, tau), start, goal, name)


def write_scenario(s: Scenario) -> str:
    g = s.geometry
    out = [
        MAGIC,
        s.name or "unnamed",
        f"{g.nx} {g.ny}",
        f"{g.x_min!r} {g.y_min!r} {g.dx!r} {g.dy!r}",
        f"{s.start[0]} {s.start[1]}",
        f"{s.goal[0]} {s.goal[1]}",
    ]
    for row in s.grid.tau:
        out.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


# -- interpolation -----------------------------------------------------------


def tau_at(grid: CostGrid, x: float, y: float) -> float:
    """Bilinear interpolation of the node costs at ``(x, y)``."""
    g = grid.geometry
    u = (x - g.x_min) / g.dx
    v = (y - g.y_min) / g.dy
    eps = 1e-9
    if not (-eps <= u <= g.nx - 1 + eps and -eps <= v <= g.ny - 1 + eps):
        raise ScenarioError("out-of-domain", f"({x!r}, {y!r}) outside the grid")
    ix = min(max(int(math.floor(u)), 0), g.nx - 2)
    iy = min(max(int(math.floor(v)), 0), g.ny - 2)
    fx = u - ix
    fy = v - iy
    t = grid.tau
    lower = (1.0 - fx) * t[iy, ix] + fx * t[iy, ix + 1]
    upper = (1.0 - fx) * t[iy + 1, ix] + fx * t[iy + 1, ix + 1]
    return float((1.0 - fy) * lower + fy * upper)


# -- generators --------------------------------------------------------------


def _bad(msg):
    return ScenarioError("invalid-generator-params", msg)


def _endpoint(p, nx, ny, default):
    if p is None:
        return default
    try:
        ix, iy = (int(v) for v in p)
    except (TypeError, ValueError):
        raise _bad(f"malformed endpoint {p!r}") from None
    return ix, iy


def _common(params, nx_default=51, ny_default=51):
    known = {"nx", "ny", "dx", "dy", "tau", "start", "goal", "x_min", "y_min",
             "blobs", "obstacles", "amplitude", "sigma", "obstacle_tau"}
    unknown = set(params) - known
    if unknown:
        raise _bad(f"unknown parameters {sorted(unknown)}")
    nx = params.get("nx", nx_default)
    ny = params.get("ny", ny_default)
    if not (isinstance(nx, int) and isinstance(ny, int)) or nx < 2 or ny < 2:
        raise _bad("nx and ny must be integers >= 2")
    dx = float(params.get("dx", 1.0 / (nx - 1)))
    dy = float(params.get("dy", 1.0 / (ny - 1)))
    if not (dx > 0 and dy > 0 and math.isfinite(dx) and math.isfinite(dy)):
        raise _bad("dx and dy must be positive")
    base = float(params.get("tau", 1.0))
    if not (base > 0 and math.isfinite(base)):
        raise _bad("tau must be finite and positive")
    x_min = float(params.get("x_min", 0.0))
    y_min = float(params.get("y_min", 0.0))
    geom = GridGeometry(nx, ny, x_min, y_min, dx, dy)
    start = _endpoint(params.get("start"), nx, ny, (0, ny // 2))
    goal = _endpoint(params.get("goal"), nx, ny, (nx - 1, ny // 2))
    if not geom.contains(*start) or not geom.contains(*goal) or start == goal:
        raise _bad(f"endpoints {start}, {goal} invalid for a {nx}x{ny} grid")
    return geom, base, start, goal


def _coords(geom):
    xs = geom.x_min + np.arange(geom.nx) * geom.dx
    ys = geom.y_min + np.arange(geom.ny) * geom.dy
    return np.meshgrid(xs, ys)


def _blob_field(geom, base, n_blobs, rng, amplitude, sigma):
    X, Y = _coords(geom)
    tau = np.full((geom.ny, geom.nx), base)
    w = geom.x_max - geom.x_min
    h = geom.y_max - geom.y_min
    scale = min(w, h)
    for _ in range(n_blobs):
        cx = geom.x_min + rng.uniform(0.15, 0.85) * w
        cy = geom.y_min + rng.uniform(0.15, 0.85) * h
        a = rng.uniform(*amplitude) * base
        s = rng.uniform(*sigma) * scale
        tau += a * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * s * s))
    return tau


def _range_param(params, key, default):
    lo, hi = params.get(key, default)
    lo, hi = float(lo), float(hi)
    if not (0 < lo <= hi and math.isfinite(hi)):
        raise _bad(f"{key} must be a positive range")
    return lo, hi


def _count_param(params, key, default):
    n = params.get(key, default)
    if not isinstance(n, int) or n < 0:
        raise _bad(f"{key} must be a non-negative integer")
    return n


def generate_scenario(preset: str, params: dict | None = None, seed: int = 0) -> Scenario:
    """Build a scenario from a named preset.

    ``uniform``: constant cost ``tau``.  ``obstacles``: axis-aligned blocks
    of cost ``obstacle_tau`` (default ``10 * tau``) over the base.
    ``turbulence``: Gaussian bumps added to the base, centres drawn from the
    seed.  ``paper-like``: fixed 200x200 grid with spacing 0.005, endpoints
    mid-height on the left and right edges, three bumps.
    """
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    if preset == "uniform":
        geom, base, start, goal = _common(params)
        tau = np.full((geom.ny, geom.nx), base)
    elif preset == "obstacles":
        geom, base, start, goal = _common(params)
        n = _count_param(params, "obstacles", 4)
        high = float(params.get("obstacle_tau", 10.0 * base))
        if not (high > 0 and math.isfinite(high)):
            raise _bad("obstacle_tau must be finite and positive")
        tau = np.full((geom.ny, geom.nx), base)
        for _ in range(n):
            w = int(rng.integers(max(1, geom.nx // 10), max(2, geom.nx // 4) + 1))
            h = int(rng.integers(max(1, geom.ny // 10), max(2, geom.ny // 3) + 1))
            x0 = int(rng.integers(1, max(2, geom.nx - w)))
            y0 = int(rng.integers(0, max(1, geom.ny - h)))
            tau[y0:y0 + h, x0:x0 + w] = high
    elif preset == "turbulence":
        geom, base, start, goal = _common(params)
        n = _count_param(params, "blobs", 3)
        tau = _blob_field(geom, base, n, rng, _range_param(params, "amplitude", (1.0, 3.0)),
                          _range_param(params, "sigma", (0.05, 0.15)))
    elif preset == "paper-like":
        fixed = {"nx", "ny", "dx", "dy", "x_min", "y_min", "start", "goal"}
        if fixed & set(params):
            raise _bad(f"paper-like fixes {sorted(fixed & set(params))}")
        params.setdefault("tau", 0.35)
        params.update(nx=200, ny=200, dx=0.005, dy=0.005, start=(0, 100), goal=(199, 100))
        geom, base, start, goal = _common(params)
        n = _count_param(params, "blobs", 3)
        tau = _blob_field(geom, base, n, rng, _range_param(params, "amplitude", (0.5, 1.5)),
                          _range_param(params, "sigma", (0.06, 0.12)))
    else:
        raise _bad(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    name = f"{preset}-{seed}"
    return Scenario(CostGrid(geom, tau), start, goal, name)


# -- images ------------------------------------------------------------------


def field_to_pgm(field) -> bytes:
    """Binary 8-bit PGM of a 2D field, rows in grid order (``y_min`` first).

    Finite values map affinely onto 0..255; ``+inf`` is drawn as 255 and a
    field without spread maps to 0.
    """
    if isinstance(field, CostGrid):
        arr = np.asarray(field.tau, dtype=np.float64)
    elif hasattr(field, "as_array"):
        arr = field.as_array()
    else:
        arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("field must be two-dimensional")
    ny, nx = arr.shape
    finite = np.isfinite(arr)
    out = np.full(arr.shape, 255, dtype=np.uint8)
    if finite.any():
        lo = float(arr[finite].min())
        hi = float(arr[finite].max())
        span = hi - lo
        if span > 0:
            scaled = np.rint((arr[finite] - lo) / span * 255.0)
            out[finite] = scaled.astype(np.uint8)
        else:
            out[finite] = 0
    header = f"P5\n{nx} {ny}\n255\n".encode("ascii")
    return header + out.tobytes()
