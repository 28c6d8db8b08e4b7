"""Profile-payment cutoffs and tolerance sweeps.

Profile-cost overrides are applied to the DAM program's objective rather
than to the Scenario, so the "all alternatives free" baseline does not have
to pass the one-zero-cost-profile validation rule.
"""

from __future__ import annotations

import datetime as _dt
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .formulation import FormulationOptions, VariableCatalog, build_dam_program, chosen_profiles
from .market import MarketError, run_market_day
from .model import Scenario
from .solver import MixedIntegerProgram, SolverResourceError, solve_milp
from .solver.simplex import IterationLimit

CERT_STEP = 0.01  # EUR


@dataclass(frozen=True)
class SweepRow:
    value: float
    profit: float | None
    profiles: dict[str, str]
    uplift: float | None = None
    dam_profit: float | None = None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class SweepReport:
    parameter: str
    rows: tuple[SweepRow, ...]
    scenario: str = ""
    timestamp: str = ""

    def __post_init__(self):
        values = [r.value for r in self.rows]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"{self.parameter} values must be strictly increasing: {values}")

    def profits(self) -> list[float | None]:
        return [r.profit for r in self.rows]


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _cost_override(program: MixedIntegerProgram, cat: VariableCatalog, s: Scenario,
                   costs: dict[tuple[str, str], float]) -> MixedIntegerProgram:
    return program.with_objective({cat["u_dp", d, p]: -c for (d, p), c in costs.items()})


def _free_alternatives(s: Scenario, value: float = 0.0) -> dict[tuple[str, str], float]:
    return {(d.id, p.id): value for d in s.demands for p in d.profiles if p.id != d.default_profile}


def _solve_choice(program: MixedIntegerProgram, cat: VariableCatalog, s: Scenario):
    sol = solve_milp(program)
    if not sol.optimal:
        return None, None
    return sol.objective_value, chosen_profiles(s, cat, sol.values)


@dataclass(frozen=True)
class Cutoff:
    demand: str
    profile: str
    value: float | None  # None: never worth choosing, even for free
    forced_profit: float | None
    alternative_profit: float | None
    certified: bool

    @property
    def profitable(self) -> bool:
        return self.value is not None


def cutoff_cost(s: Scenario, demand_id: str, profile_id: str,
                options: FormulationOptions = FormulationOptions()) -> Cutoff:
    """Largest daily payment for ``profile_id`` at which the DAM still picks it.

    Baseline: every non-default profile of every demand is free.  The cutoff
    is the DAM profit with the profile forced minus the best DAM profit with it
    excluded; it is then checked by re-solving at cutoff -/+ CERT_STEP.
    """
    d = s.demand(demand_id)
    if profile_id == d.default_profile:
        raise ValueError("the default profile has no cutoff cost")
    d.profile(profile_id)
    program, cat = build_dam_program(s, options)
    base = _cost_override(program, cat, s, _free_alternatives(s))
    j = cat["u_dp", demand_id, profile_id]
    forced = solve_milp(base.with_bounds({j: (1.0, 1.0)}))
    excluded = solve_milp(base.with_bounds({j: (0.0, 0.0)}))
    if not forced.optimal:
        return Cutoff(demand_id, profile_id, None, None,
                      excluded.objective_value if excluded.optimal else None, True)
    if not excluded.optimal:
        raise ValueError(f"{demand_id}: no feasible DAM without profile {profile_id}")
    gap = forced.objective_value - excluded.objective_value
    if gap < -1e-6:
        return Cutoff(demand_id, profile_id, None, forced.objective_value, excluded.objective_value, True)
    value = round(max(gap, 0.0), 6)
    below = _cost_override(program, cat, s, {**_free_alternatives(s), (demand_id, profile_id): value - CERT_STEP})
    above = _cost_override(program, cat, s, {**_free_alternatives(s), (demand_id, profile_id): value + CERT_STEP})
    _, pick_below = _solve_choice(below, cat, s)
    _, pick_above = _solve_choice(above, cat, s)
    certified = (pick_below is not None and pick_below[demand_id] == profile_id
                 and pick_above is not None and pick_above[demand_id] != profile_id)
    return Cutoff(demand_id, profile_id, value, forced.objective_value, excluded.objective_value, certified)


@dataclass(frozen=True)
class PerMwh:
    shifted_mwh: float
    eur_per_mwh: float | None  # None when nothing is shifted

    @property
    def defined(self) -> bool:
        return self.eur_per_mwh is not None


def shifted_energy(s: Scenario, demand_id: str, profile_id: str) -> float:
    """Half the L1 distance between a profile and the demand's default profile (MWh)."""
    d = s.demand(demand_id)
    ref = d.profile(d.default_profile).power
    alt = d.profile(profile_id).power
    return 0.5 * math.fsum(abs(a - b) for a, b in zip(alt, ref)) * s.market.dt


def per_mwh_cost(s: Scenario, demand_id: str, profile_id: str, cutoff: float) -> PerMwh:
    shifted = shifted_energy(s, demand_id, profile_id)
    if shifted <= 1e-9:
        return PerMwh(shifted, None)
    return PerMwh(shifted, cutoff / shifted)


def simultaneous_cost_sweep(s: Scenario, grid, options: FormulationOptions = FormulationOptions()
                            ) -> SweepReport:
    """One DAM per grid value, with every non-default profile priced at that value."""
    program, cat = build_dam_program(s, options)
    rows = []
    for value in grid:
        value = float(value)
        profit, picks = _solve_choice(_cost_override(program, cat, s, _free_alternatives(s, value)), cat, s)
        if profit is None:
            rows.append(SweepRow(value, None, {}, status="failed: infeasible"))
        else:
            rows.append(SweepRow(value, profit, picks, dam_profit=profit))
    return SweepReport("profile_cost_eur", tuple(rows), s.name, _now())


def with_tolerance(s: Scenario, pct: float) -> Scenario:
    frac = pct / 100.0
    tol = tuple(frac for _ in range(s.horizon))
    return replace(s, demands=tuple(replace(d, tolerance_down=tol, tolerance_up=tol) for d in s.demands))


def _tolerance_point(args) -> SweepRow:
    s, pct, options = args
    try:
        state = run_market_day(with_tolerance(s, pct), options)
    except (SolverResourceError, IterationLimit) as exc:
        return SweepRow(pct, None, {}, status=f"failed: limit: {exc}")
    except (MarketError, ValueError) as exc:
        return SweepRow(pct, None, {}, status=f"failed: {exc}")
    dam = state.dam_profit
    uplift = (state.profit - dam) / abs(dam) if dam else 0.0
    return SweepRow(pct, state.profit, dict(state.settled.profiles), uplift, dam)


def tolerance_sweep(s: Scenario, levels=(0, 10, 20, 30, 40, 50),
                    options: FormulationOptions = FormulationOptions(), workers: int = 1) -> SweepReport:
    """Full market day per symmetric tolerance level (percent) applied to every demand."""
    jobs = [(s, float(pct), options) for pct in levels]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_tolerance_point, jobs))
    else:
        rows = [_tolerance_point(j) for j in jobs]
    return SweepReport("tolerance_pct", tuple(rows), s.name, _now())
