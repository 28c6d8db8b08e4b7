"""Run one market day and print the settlement ledger.

    python scripts/run_day.py [--scenario PATH] [--out DIR] [--abs-cost]
"""

import argparse

from vppflex.formulation import FormulationOptions
from vppflex.market import run_market_day, settlement_report
from vppflex.reports import emit_reports, fmt
from vppflex.scenario_io import bundled_scenario_path, parse_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(bundled_scenario_path()))
    ap.add_argument("--out", help="also write the CSV bundle here")
    ap.add_argument("--abs-cost", action="store_true", help="charge IDM variable cost on |adjustment|")
    args = ap.parse_args()

    s = parse_scenario(args.scenario)
    state = run_market_day(s, FormulationOptions(abs_variable_cost=args.abs_cost))
    rep = settlement_report(state)
    print(f"{'stage':<8}{'revenue':>14}{'cost':>14}{'profit':>14}")
    for row in rep.rows:
        print(f"{row.stage:<8}" + "".join(f"{fmt(x, 2):>14}" for x in (row.revenue, row.cost, row.profit)))
    print(f"profiles: {state.settled.profiles}")
    print(f"uplift over DAM: {100 * rep.uplift:.2f}%")
    if args.out:
        for p in emit_reports(state, args.out):
            print(p)


if __name__ == "__main__":
    main()
