"""Command-line front end.

Exit status: 0 on success, 1 on a domain error (the error code is printed),
2 on a usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import analysis
from .backtrace import path_to_csv, run_pipeline
from .errors import FmmlabError
from .grid import PRESETS, field_to_pgm, generate_scenario, load_scenario, write_scenario
from .shadow import SPLIT, SYNC, ShadowConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fmmlab", description="Fast marching paths and their floating-point audits.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a scenario file")
    g.add_argument("--preset", required=True, choices=PRESETS)
    g.add_argument("--nx", type=int)
    g.add_argument("--ny", type=int)
    g.add_argument("--dx", type=float)
    g.add_argument("--dy", type=float)
    g.add_argument("--tau", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="solve and extract the optimal path")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out-path")
    s.add_argument("--out-field")
    s.add_argument("--early-exit", action="store_true")

    a = sub.add_parser("analyze", help="run a floating-point audit")
    a.add_argument("--mode", required=True, choices=("stochastic", "multirun", "shadow"))
    a.add_argument("--scenario", required=True)
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--runs", type=int, default=10)
    a.add_argument("--max-paths", type=_positive_int, default=4)
    a.add_argument("--mantissa-bits", type=_positive_int, default=319)
    a.add_argument("--max-symbols", type=_positive_int, default=30)
    a.add_argument("--sync-site", action="append", default=[], metavar="ID")
    a.add_argument("--sync-all", action="store_true", help="synchronise every site")
    a.add_argument("--jobs", type=_positive_int, default=1)
    a.add_argument("--report", required=True)

    r = sub.add_parser("refine", help="compare costs on a refined grid")
    r.add_argument("--scenario", required=True)
    r.add_argument("--factor", type=int, required=True, choices=(2, 4))
    r.add_argument("--report", required=True)
    return p


def _read_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def _write(path, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    kwargs = {} if isinstance(data, bytes) else {"encoding": "utf-8", "newline": "\n"}
    with open(path, mode, **kwargs) as fh:
        fh.write(data)


def _cmd_gen(args, parser):
    if args.preset != "uniform" and args.seed is None:
        parser.error(f"--seed is required for preset {args.preset}")
    params = {k: getattr(args, k) for k in ("nx", "ny", "dx", "dy", "tau")
              if getattr(args, k) is not None}
    scenario = generate_scenario(args.preset, params, args.seed or 0)
    _write(args.out, write_scenario(scenario))
    g = scenario.geometry
    print(f"{scenario.name}: {g.nx}x{g.ny} nodes, start {scenario.start}, goal {scenario.goal}")


def _cmd_solve(args, parser):
    scenario = _read_scenario(args.scenario)
    field, path = run_pipeline(scenario, early_exit=args.early_exit)
    if args.out_path:
        _write(args.out_path, path_to_csv(path))
    if args.out_field:
        _write(args.out_field, field_to_pgm(field))
    print(f"cost {path.cost!r} T(goal) {path.t_goal!r} points {path.point_count}")


def _cmd_analyze(args, parser):
    scenario = _read_scenario(args.scenario)
    if args.mode == "stochastic":
        rep = analysis.run_stochastic(scenario, args.seed)
        total = sum(rep.counters.values())
        summary = (f"cost mean {rep.mean!r} sigma {rep.sigma!r} digits {rep.digits:.2f} "
                   f"points {rep.point_count} instabilities {total}")
    elif args.mode == "multirun":
        rep = analysis.run_multirun(scenario, args.runs, args.seed, jobs=args.jobs)
        counts = ",".join(str(r.point_count) for r in rep.runs)
        summary = (f"cost mean {rep.mean!r} sigma {rep.sigma!r} reference {rep.reference_cost!r} "
                   f"within 4 sigma {rep.reference_within_4_sigma} points {counts}")
    else:
        config = ShadowConfig(max_paths=args.max_paths, mantissa_bits=args.mantissa_bits,
                              max_symbols=args.max_symbols,
                              policies={s: SYNC for s in args.sync_site},
                              default_policy=SYNC if args.sync_all else SPLIT)
        rep = analysis.run_shadow(scenario, config, seed=args.seed)
        hits = sum(s["hits"] for s in rep.unstable_sites)
        summary = (f"error bound {rep.error_bound!r} flows {rep.flow_count} "
                   f"points {rep.flows[0].path_point_count} unstable sites "
                   f"{len(rep.unstable_sites)} instabilities {hits}")
    _write(args.report, analysis.report_to_json(rep))
    print(summary)


def _cmd_refine(args, parser):
    scenario = _read_scenario(args.scenario)
    rep = analysis.compare_refinement(scenario, args.factor)
    _write(args.report, analysis.report_to_json(rep))
    a, b = rep.resolutions
    print(f"cost {a.cost!r} -> {b.cost!r} relative difference {rep.relative_difference!r} "
          f"points {a.point_count} -> {b.point_count}")


_COMMANDS = {"gen": _cmd_gen, "solve": _cmd_solve, "analyze": _cmd_analyze, "refine": _cmd_refine}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except FmmlabError as exc:
        print(f"fmmlab: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fmmlab: io-error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
