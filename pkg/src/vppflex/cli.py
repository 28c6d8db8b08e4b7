"""Command-line entry point.

    vppflex validate --scenario F
    vppflex run --scenario F --out DIR
    vppflex sweep-cost --scenario F --demand ID [--grid a:b:step] [--out DIR]
    vppflex sweep-tolerance --scenario F [--levels 0,10,20,30,40,50] [--out DIR]

Exit codes: 0 success, 1 infeasible or failed run, 2 bad input, 3 internal
limit (node or iteration limit).  ``VPPFLEX_NODE_LIMIT`` overrides the
branch-and-bound node limit.
"""

from __future__ import annotations

import argparse
import random
import sys

import numpy as np

from .analysis import cutoff_cost, per_mwh_cost, simultaneous_cost_sweep, tolerance_sweep
from .market import MarketError, run_market_day, settlement_report
from .model import validate_scenario
from .reports import emit_cutoffs, emit_reports
from .scenario_io import ScenarioFileError, parse_scenario
from .solver import SolverResourceError
from .solver.simplex import IterationLimit

EXIT_OK, EXIT_FAILED, EXIT_BAD_INPUT, EXIT_LIMIT = 0, 1, 2, 3


class BadInput(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` (inclusive of b when it lies on the grid) or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(np.floor((b - a) / step + 1e-9))
            return [round(a + i * step, 9) for i in range(n + 1)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise BadInput(f"bad grid {text!r}; expected a:b:step with step > 0 and b >= a") from None


def parse_levels(text: str) -> list[float]:
    try:
        levels = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise BadInput(f"bad levels {text!r}") from None
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 0:
        raise BadInput(f"levels must be non-negative and strictly increasing: {text!r}")
    return levels


def _load(path):
    try:
        return parse_scenario(path)
    except OSError as exc:
        raise BadInput(f"cannot read {path}: {exc.strerror or exc}") from None
    except ScenarioFileError as exc:
        raise BadInput("\n".join(f"{path}: {e}" for e in exc.errors)) from None


def cmd_validate(args) -> int:
    try:
        s = parse_scenario(args.scenario, validate=False)
    except OSError as exc:
        raise BadInput(f"cannot read {args.scenario}: {exc.strerror or exc}") from None
    except ScenarioFileError as exc:
        for e in exc.errors:
            print(f"{args.scenario}: {e}")
        return EXIT_BAD_INPUT
    violations = validate_scenario(s)
    for v in violations:
        print(f"{args.scenario}: {v}")
    if violations:
        return EXIT_BAD_INPUT
    print(f"{args.scenario}: ok ({s.horizon} periods, {len(s.network.buses)} buses, "
          f"{len(s.market.idm_sessions)} IDM sessions)")
    return EXIT_OK


def cmd_run(args) -> int:
    s = _load(args.scenario)
    state = run_market_day(s)
    for path in emit_reports(state, args.out):
        print(path)
    rep = settlement_report(state)
    print(f"DAM profit {rep.dam_profit:.2f} EUR, final profit {rep.final_profit:.2f} EUR, "
          f"uplift {100 * rep.uplift:.2f}%")
    return EXIT_OK


def cmd_sweep_cost(args) -> int:
    s = _load(args.scenario)
    try:
        d = s.demand(args.demand)
    except KeyError:
        raise BadInput(f"unknown demand {args.demand!r}") from None
    grid = parse_grid(args.grid)
    cutoffs = []
    for p in d.profiles:
        if p.id == d.default_profile:
            continue
        c = cutoff_cost(s, d.id, p.id)
        per = per_mwh_cost(s, d.id, p.id, c.value if c.value is not None else 0.0)
        cutoffs.append((c, per))
        shown = "not profitable" if c.value is None else f"{c.value:.2f} EUR/day"
        print(f"{d.id}/{p.id}: cutoff {shown}, {per.shifted_mwh:.3f} MWh shifted")
    paths = emit_cutoffs(cutoffs, args.out)
    report = simultaneous_cost_sweep(s, grid)
    paths += emit_reports(report, args.out)
    for path in paths:
        print(path)
    return EXIT_OK if all(r.ok for r in report.rows) else EXIT_FAILED


def cmd_sweep_tolerance(args) -> int:
    s = _load(args.scenario)
    report = tolerance_sweep(s, parse_levels(args.levels), workers=args.workers)
    for r in report.rows:
        shown = "failed" if r.profit is None else f"{r.profit:.2f} EUR"
        print(f"tolerance {r.value:g}%: {shown}")
    for path in emit_reports(report, args.out):
        print(path)
    if any(r.status.startswith("failed: limit") for r in report.rows):
        return EXIT_LIMIT
    return EXIT_OK if all(r.ok for r in report.rows) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vppflex", description="VPP day-ahead and intraday market simulator")
    ap.add_argument("--seed", type=int, default=0, help="seed for any randomised instance generation")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="check a scenario file and list violations")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate the DAM and all IDM sessions and write reports")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-cost", help="profile cutoff costs and a simultaneous cost sweep")
    p.add_argument("--scenario", required=True)
    p.add_argument("--demand", required=True)
    p.add_argument("--grid", default="0:600:50", help="profile cost grid a:b:step in EUR (default 0:600:50)")
    p.add_argument("--out", default=".", help="report directory (default .)")
    p.set_defaults(func=cmd_sweep_cost)

    p = sub.add_parser("sweep-tolerance", help="total profit per symmetric tolerance level")
    p.add_argument("--scenario", required=True)
    p.add_argument("--levels", default="0,10,20,30,40,50", help="percent levels (default 0,10,20,30,40,50)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".", help="report directory (default .)")
    p.set_defaults(func=cmd_sweep_tolerance)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)  # exits with 2 and usage text on bad input
    random.seed(args.seed)
    np.random.seed(args.seed)
    try:
        return args.func(args)
    except BadInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except MarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (SolverResourceError, IterationLimit) as exc:
        print(f"error: internal limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
