"""Regenerate the bundled 12-node scenario file.

Topology, asset placement, capacities and minimum energies are fixed by
the reference layout; line data, prices, forecasts and profile shapes are
synthetic and illustrative only.

    python scripts/make_twelve_node.py [--out PATH]
"""

import argparse
import math

import numpy as np

from vppflex.model import (
    Bus, Demand, DemandProfile, DispatchableUnit, IdmSession, Line, MarketStructure, Network,
    NonDispatchableUnit, PccLimit, Scenario, StorageThermalUnit, validate_scenario, equal_energy_check,
)
from vppflex.scenario_io import bundled_scenario_path, write_scenario

T = 24
HOURS = np.arange(1, T + 1)

# Clear-day price shape: solar valley at midday, evening peak.
DAM_PRICES = [58.0, 54.0, 51.0, 49.0, 49.0, 52.0, 58.0, 50.0, 44.0, 38.0, 33.0, 30.0,
              29.0, 30.0, 33.0, 38.0, 46.0, 58.0, 72.0, 85.0, 90.0, 82.0, 70.0, 63.0]

SESSIONS = [(1, 1), (2, 5), (3, 8), (4, 12), (5, 16)]


def bump(center, width, height):
    return height * np.exp(-0.5 * ((HOURS - center) / width) ** 2)


def profile(base, bumps, energy):
    """Base level plus Gaussian peaks, scaled to ``energy`` MWh with 3-decimal values."""
    shape = np.full(T, float(base))
    for c, w, h in bumps:
        shape += bump(c, w, h)
    shape *= energy / shape.sum()
    vals = np.round(shape, 3)
    i = int(np.argmax(vals))
    vals[i] = round(vals[i] + (energy - vals.sum()), 3)
    return tuple(float(v) for v in vals)


def ramps(power):
    return max(abs(a - b) for a, b in zip(power[1:], power[:-1]))


def series(values):
    return tuple(round(float(v), 3) for v in values)


def build() -> Scenario:
    buses = tuple(Bus(i) for i in range(1, 13))
    ring = [(i, i % 12 + 1) for i in range(1, 13)]
    chords = [(5, 10)]
    lines = tuple(Line(f"L{n + 1}", a, b, 400.0 if n % 2 == 0 else 350.0, 120.0)
                  for n, (a, b) in enumerate(ring + chords))
    network = Network(buses, lines, pcc_buses=(5,), slack_bus=5)

    hydro = DispatchableUnit("hydro", 6, p_min=10.0, p_max=111.0, variable_cost=35.0,
                             startup_cost=300.0, shutdown_cost=150.0, initial_on=True)

    wind_da = series(30 + 12 * np.cos((HOURS - 3) / 24 * 2 * math.pi) - 6 * np.exp(-0.5 * ((HOURS - 14) / 3) ** 2))
    solar_da = series(np.clip(48 * np.sin((HOURS - 6.5) / 14 * math.pi), 0, None) * (HOURS >= 7) * (HOURS <= 20))
    wind = NonDispatchableUnit("wind", 4, tuple(0.0 for _ in range(T)), wind_da)
    solar = NonDispatchableUnit("solar", 8, tuple(0.0 for _ in range(T)), solar_da)

    thermal = series(np.clip(70 * np.sin((HOURS - 7) / 12 * math.pi), 0, None) * (HOURS >= 8) * (HOURS <= 18))
    stu = StorageThermalUnit("stu", 1, p_max=50.0, energy_capacity=300.0, charge_limit=60.0,
                             efficiency=0.9, initial_energy=50.0, thermal_input=thermal)

    tol = tuple(0.2 for _ in range(T))
    industrial = Demand(
        "industrial", 3,
        profiles=(
            DemandProfile("basecase", profile(18, [(11, 2.0, 22), (16, 2.0, 20)], 800.0), 0.0),
            DemandProfile("early_peak", profile(18, [(9.5, 2.0, 22), (13, 2.0, 20)], 800.0), 320.0),
            DemandProfile("late_peak", profile(18, [(14, 2.0, 22), (19, 2.0, 20)], 800.0), 320.0),
        ),
        min_energy=800.0, ramp_up=15.0, ramp_down=15.0, tolerance_down=tol, tolerance_up=tol,
        default_profile="basecase")
    airport = Demand(
        "airport", 9,
        profiles=(
            DemandProfile("basecase", profile(16, [(8, 1.5, 14), (18, 2.0, 12)], 580.0), 0.0),
            DemandProfile("early_peak", profile(16, [(10, 1.5, 14), (16, 2.0, 12)], 580.0), 500.0),
            DemandProfile("late_peak", profile(16, [(12, 1.5, 14), (18, 2.0, 12)], 580.0), 305.0),
        ),
        min_energy=580.0, ramp_up=12.0, ramp_down=12.0, tolerance_down=tol, tolerance_up=tol,
        default_profile="basecase")
    residential = Demand(
        "residential", 12,
        profiles=(
            DemandProfile("basecase", profile(18, [(9, 1.5, 14), (20, 1.5, 20)], 600.0), 0.0),
            DemandProfile("early_peak", profile(18, [(7, 1.5, 14), (21, 1.5, 20)], 600.0), 180.0),
            DemandProfile("late_peak", profile(18, [(11, 1.5, 14), (22, 1.5, 20)], 600.0), 180.0),
        ),
        min_energy=600.0, ramp_up=15.0, ramp_down=15.0, tolerance_down=tol, tolerance_up=tol,
        default_profile="basecase")

    rng = np.random.default_rng(20230501)
    sessions = []
    for k, tau in SESSIONS:
        width = T - tau + 1
        noise = rng.normal(0.0, 4.0, size=width)
        prices = tuple(round(p + n, 2) for p, n in zip(DAM_PRICES[tau - 1:], noise))
        updates = []
        if k == 2:
            updates.append(("wind", series(np.array(wind_da[tau - 1:]) * 0.85)))
        if k == 4:
            updates.append(("wind", series(np.clip(np.array(wind_da[tau - 1:]) * 1.1, 0, 50))))
            updates.append(("solar", series(np.array(solar_da[tau - 1:]) * 0.9)))
        sessions.append(IdmSession(k, tau, prices, tuple(updates)))
    market = MarketStructure(T, 1.0, tuple(DAM_PRICES), tuple(sessions))

    s = Scenario(
        network, (hydro,), (wind, solar), (stu,), (industrial, airport, residential), market,
        (PccLimit(5, 200.0),),
        name="twelve-node-clear-day",
        description=("12-node RES-based VPP: PCC at bus 5; industrial/airport/residential demands at buses "
                     "3/9/12; hydro 111 MW at bus 6; wind 50 MW at bus 4; solar PV 50 MW at bus 8; "
                     "solar thermal unit 50 MW at bus 1. Line data, prices, forecasts and profile shapes "
                     "are synthetic and illustrative only."),
    )
    for d in s.demands:
        assert equal_energy_check(d, 1.0), d.id
        for p in d.profiles:
            assert ramps(p.power) <= min(d.ramp_up, d.ramp_down), (d.id, p.id, ramps(p.power))
    assert not validate_scenario(s), validate_scenario(s)
    return s


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(bundled_scenario_path()))
    args = ap.parse_args()
    write_scenario(build(), args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
