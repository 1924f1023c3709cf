"""
Arrival fields and optimal paths
================================

Generate a turbulent cost grid, march the arrival-time field out from the
start node and walk back down it from the goal.  The smooth path is compared
with the best 4-neighbour staircase on the same grid.
"""

import heapq

import numpy as np

from fmmlab.backtrace import run_pipeline
from fmmlab.grid import generate_scenario

scenario = generate_scenario("turbulence", {"nx": 61, "ny": 61}, seed=3)
g = scenario.geometry
print(f"{scenario.name}: {g.nx}x{g.ny}, tau in [{scenario.grid.tau.min():.3f}, "
      f"{scenario.grid.tau.max():.3f}]")

field, path = run_pipeline(scenario)
T = field.as_array()
print(f"T(goal) = {field.value(*scenario.goal):.6f}, path cost = {path.cost:.6f}, "
      f"{path.point_count} points, length {path.length():.4f}")

# The field grows away from the start; every node was accepted exactly once.
assert np.isfinite(T).all()
assert len(field.accept_order) == g.nx * g.ny


# A staircase walk can only move along grid edges, so it pays for every corner.
def staircase_cost(tau, h, start, goal):
    ny, nx = tau.shape
    best = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, (ix, iy) = heapq.heappop(heap)
        if (ix, iy) == goal:
            return d
        if d > best[(ix, iy)]:
            continue
        for jx, jy in ((ix + 1, iy), (ix - 1, iy), (ix, iy + 1), (ix, iy - 1)):
            if 0 <= jx < nx and 0 <= jy < ny:
                nd = d + h * 0.5 * (tau[iy, ix] + tau[jy, jx])
                if nd < best.get((jx, jy), np.inf):
                    best[(jx, jy)] = nd
                    heapq.heappush(heap, (nd, (jx, jy)))


stair = staircase_cost(scenario.grid.tau, g.dx, scenario.goal, scenario.start)
print(f"staircase cost {stair:.6f} vs smooth path {path.cost:.6f} "
      f"({100 * (stair - path.cost) / stair:.1f}% cheaper)")

# First and last few points: the walk starts at the goal and ends on the start node.
for x, y in path.points[:3]:
    print(f"  ({x:.4f}, {y:.4f})")
print("  ...")
for x, y in path.points[-3:]:
    print(f"  ({x:.4f}, {y:.4f})")
