"""CLI invocations whose outputs are frozen under ``tests/golden``.

Run ``python -m tests.cli_cases`` from the repository root to regenerate the
golden files after an intentional output change.
"""

import pathlib

from fmmlab.cli import main

GOLDEN = pathlib.Path(__file__).parent / "golden"

# (argv template, output files); {d} is the output directory
CASES = [
    (["gen", "--preset", "uniform", "--nx", "6", "--ny", "5", "--out", "{d}/uniform.scn"],
     ["uniform.scn"]),
    (["gen", "--preset", "turbulence", "--nx", "11", "--ny", "9", "--seed", "3",
      "--out", "{d}/turb.scn"], ["turb.scn"]),
    (["solve", "--scenario", "{d}/turb.scn", "--out-path", "{d}/turb_path.csv",
      "--out-field", "{d}/turb_field.pgm"], ["turb_path.csv", "turb_field.pgm"]),
    (["analyze", "--mode", "stochastic", "--scenario", "{d}/turb.scn", "--seed", "5",
      "--report", "{d}/stochastic.json"], ["stochastic.json"]),
    (["analyze", "--mode", "multirun", "--scenario", "{d}/turb.scn", "--seed", "42",
      "--runs", "3", "--report", "{d}/multirun.json"], ["multirun.json"]),
    (["analyze", "--mode", "shadow", "--scenario", "{d}/turb.scn", "--seed", "1",
      "--max-paths", "2", "--mantissa-bits", "128", "--max-symbols", "30",
      "--report", "{d}/shadow.json"], ["shadow.json"]),
    (["refine", "--scenario", "{d}/uniform.scn", "--factor", "2", "--report", "{d}/refine.json"],
     ["refine.json"]),
]


def run_all(directory):
    for argv, _ in CASES:
        code = main([a.format(d=directory) for a in argv])
        if code != 0:
            raise RuntimeError(f"{argv[0]} exited with {code}")


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    run_all(str(GOLDEN))
