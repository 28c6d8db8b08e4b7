"""Cutoff payment and EUR per shifted MWh for every non-default profile.

    python scripts/cutoff_table.py [--scenario PATH] [--out DIR]
"""

import argparse

from vppflex.analysis import cutoff_cost, per_mwh_cost
from vppflex.reports import emit_cutoffs
from vppflex.scenario_io import bundled_scenario_path, parse_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(bundled_scenario_path()))
    ap.add_argument("--out")
    args = ap.parse_args()

    s = parse_scenario(args.scenario)
    rows = []
    print(f"{'demand':<14}{'profile':<14}{'cutoff EUR':>12}{'shifted MWh':>13}{'EUR/MWh':>10}")
    for d in s.demands:
        for p in d.profiles:
            if p.id == d.default_profile:
                continue
            c = cutoff_cost(s, d.id, p.id)
            per = per_mwh_cost(s, d.id, p.id, c.value or 0.0)
            rows.append((c, per))
            if c.value is None:
                print(f"{d.id:<14}{p.id:<14}{'not profitable':>12}")
                continue
            ratio = f"{per.eur_per_mwh:.2f}" if per.defined else "undefined"
            flag = "" if c.certified else "  (uncertified)"
            print(f"{d.id:<14}{p.id:<14}{c.value:>12.2f}{per.shifted_mwh:>13.3f}{ratio:>10}{flag}")
    if args.out:
        print(*emit_cutoffs(rows, args.out))


if __name__ == "__main__":
    main()
