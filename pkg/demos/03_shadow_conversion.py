"""
A cell index that rounding gets wrong
=====================================

The backtrace locates a point in the grid with ``floor((y - y_min) / dy)``.
With ``dy = 0.005`` and ``y = 0.5`` the float quotient rounds up to exactly
100 while the real quotient sits just below it, so float and ideal runs
disagree on the cell.  Shadow mode tracks the ideal value as an affine form
and reports the conversion.
"""

import math

from fmmlab.analysis import run_shadow
from fmmlab.grid import generate_scenario
from fmmlab.shadow import SYNC, ShadowConfig

print("float quotient", 0.5 / 0.005, "->", math.floor(0.5 / 0.005))

scenario = generate_scenario("uniform", {"nx": 5, "ny": 101, "dx": 0.005, "dy": 0.005,
                                         "start": (0, 100), "goal": (4, 100)})
report = run_shadow(scenario, ShadowConfig())
site = report.site("backtrace.locate_y")
print(f"site {site['site_id']} at {site['location']}")
for text in site["conversions"]:
    print("  ", text)
print(f"{report.flow_count} flows explored, merged error bound {report.error_bound:.3e}")

# Forcing every unstable site to follow the float run leaves a single flow.
synced = run_shadow(scenario, ShadowConfig(default_policy=SYNC))
print(f"all sites synchronised: {synced.flow_count} flow, "
      f"{synced.sync_events} synchronisation events")
