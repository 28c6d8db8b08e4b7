"""Profit against IDM tolerance band, as a table and optional CSV.

    python scripts/tolerance_curve.py [--scenario PATH] [--levels 0:50:5] [--workers N] [--out DIR]
"""

import argparse

from vppflex.analysis import tolerance_sweep
from vppflex.cli import parse_grid
from vppflex.reports import emit_reports
from vppflex.scenario_io import bundled_scenario_path, parse_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(bundled_scenario_path()))
    ap.add_argument("--levels", default="0:50:5", help="percent, a:b:step or comma list")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    rep = tolerance_sweep(parse_scenario(args.scenario), parse_grid(args.levels), workers=args.workers)
    print(f"{'tol %':>6}{'profit':>12}{'uplift %':>10}  profiles")
    for r in rep.rows:
        if r.profit is None:
            print(f"{r.value:>6g}{'':>12}{'':>10}  {r.status}")
            continue
        picks = ";".join(f"{d}={p}" for d, p in sorted(r.profiles.items()))
        print(f"{r.value:>6g}{r.profit:>12.2f}{100 * r.uplift:>10.2f}  {picks}")
    if args.out:
        print(*emit_reports(rep, args.out))


if __name__ == "__main__":
    main()
