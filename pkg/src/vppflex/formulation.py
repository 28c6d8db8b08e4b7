"""Day-ahead and intraday MILPs for the VPP.

Sign conventions: ``p_m`` (trade at a PCC) and ``p_da`` / ``p_id`` are
positive when the VPP sells to the grid.  Line flow is positive from
``from_bus`` to ``to_bus``.  Period indices in the catalog are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .model import Scenario, require_valid
from .solver import EQ, GE, LE, MixedIntegerProgram, ProgramBuilder, Solution

DAM = 0


@dataclass(frozen=True)
class FormulationOptions:
    # Charge |dp| instead of signed dp in the intraday variable-cost term.
    abs_variable_cost: bool = False


class VariableCatalog:
    """Maps ``(family, entity, period)`` handles to program variable indices."""

    def __init__(self, stage: int, periods: range):
        self.stage = stage
        self.periods = periods
        self._handles: dict[tuple, int] = {}

    def add(self, key: tuple, j: int) -> int:
        if key in self._handles:
            raise KeyError(f"duplicate handle {key}")
        self._handles[key] = j
        return j

    def __getitem__(self, key: tuple) -> int:
        return self._handles[key]

    def __contains__(self, key: tuple) -> bool:
        return key in self._handles

    def __len__(self) -> int:
        return len(self._handles)

    def items(self):
        return self._handles.items()

    def family(self, name: str) -> dict[tuple, int]:
        return {k[1:]: j for k, j in self._handles.items() if k[0] == name}

    def series(self, values, name: str, entity=None) -> dict[int, float]:
        """Values of one family/entity over the catalog's periods."""
        out = {}
        for t in self.periods:
            key = (name, t) if entity is None else (name, entity, t)
            if key in self._handles:
                out[t] = float(values[self._handles[key]])
        return out


@dataclass(frozen=True)
class SettledState:
    """Market results fixed by the stages solved so far.

    ``schedule`` holds the latest physical schedule per family and entity over
    the full horizon; ``p_id[k]`` is zero before session k's first period.
    """

    stages: tuple[int, ...]
    p_da: tuple[float, ...]
    profiles: dict[str, str]
    schedule: dict[str, dict]
    p_id: dict[int, tuple[float, ...]] = field(default_factory=dict)

    def traded(self, t: int, upto: int | None = None) -> float:
        """Committed trade ``p_da + sum of p_id`` for sessions ``< upto`` (all if None)."""
        total = self.p_da[t]
        for k, series in self.p_id.items():
            if upto is None or k < upto:
                total += series[t]
        return total


@dataclass
class _Ctx:
    b: ProgramBuilder
    cat: VariableCatalog
    s: Scenario
    k: int
    settled: SettledState | None
    options: FormulationOptions

    @property
    def dt(self) -> float:
        return self.s.market.dt

    @property
    def periods(self) -> range:
        return self.cat.periods

    @property
    def first(self) -> int:
        return self.periods.start

    def v(self, *key) -> int:
        return self.cat[key]

    def new(self, key: tuple, lb: float, ub: float, binary: bool = False) -> int:
        name = "_".join(str(x) for x in key)
        return self.cat.add(key, self.b.var(name, lb, ub, binary))


def _angle_bound(s: Scenario) -> float:
    return 1.0 + math.fsum(ln.flow_limit / ln.susceptance for ln in s.network.lines)


def _declare(ctx: _Ctx) -> None:
    """Create every stage variable with its physical bounds."""
    s = ctx.s
    net = s.network
    theta_max = _angle_bound(s)
    total_trade = math.fsum(lim.p_max_trade for lim in s.pcc_limits)
    for t in ctx.periods:
        for c in s.dispatchables:
            ctx.new(("p_c", c.id, t), 0.0, c.p_max)
            ctx.new(("u_c", c.id, t), 0.0, 1.0, binary=True)
            ctx.new(("c0", c.id, t), 0.0, c.shutdown_cost)
            ctx.new(("c1", c.id, t), 0.0, c.startup_cost)
            if ctx.k != DAM:
                ctx.new(("dp_c", c.id, t), -c.p_max, c.p_max)
                if ctx.options.abs_variable_cost:
                    ctx.new(("dp_pos", c.id, t), 0.0, c.p_max)
                    ctx.new(("dp_neg", c.id, t), 0.0, c.p_max)
        for d in s.demands:
            ctx.new(("p_d", d.id, t), 0.0, max(max(p.power) for p in d.profiles) * 2.0)
        for r in s.nondispatchables:
            ctx.new(("p_r", r.id, t), 0.0, max(max(s.available(r, k)) for k in range(len(s.market.idm_sessions) + 1)))
        for th in s.stus:
            ctx.new(("p_stu", th.id, t), 0.0, th.p_max)
            ctx.new(("charge_stu", th.id, t), 0.0, min(th.charge_limit, th.thermal_input[t]))
            ctx.new(("energy_stu", th.id, t), 0.0, th.energy_capacity)
        for ln in net.lines:
            ctx.new(("flow", ln.id, t), -ln.flow_limit, ln.flow_limit)
        for bus in net.bus_ids:
            fixed = bus == net.slack_bus
            ctx.new(("angle", bus, t), 0.0 if fixed else -theta_max, 0.0 if fixed else theta_max)
        for bus in net.pcc_buses:
            ctx.new(("p_m", bus, t), -total_trade, total_trade)
        if ctx.k == DAM:
            ctx.new(("p_da", t), -total_trade, total_trade)
        else:
            prior = ctx.settled.traded(t, upto=ctx.k)
            ctx.new(("p_id", t), -total_trade - prior, total_trade - prior)
    if ctx.k == DAM:
        for d in s.demands:
            for p in d.profiles:
                ctx.new(("u_dp", d.id, p.id), 0.0, 1.0, binary=True)


def _bus_injections(ctx: _Ctx, t: int, bus: int) -> list[tuple[int, float]]:
    s = ctx.s
    terms = []
    for c in s.dispatchables:
        if c.bus == bus:
            terms.append((ctx.v("p_c", c.id, t), 1.0))
    for r in s.nondispatchables:
        if r.bus == bus:
            terms.append((ctx.v("p_r", r.id, t), 1.0))
    for th in s.stus:
        if th.bus == bus:
            terms.append((ctx.v("p_stu", th.id, t), 1.0))
    for ln in s.network.lines:
        if ln.from_bus == bus:
            terms.append((ctx.v("flow", ln.id, t), -1.0))
        if ln.to_bus == bus:
            terms.append((ctx.v("flow", ln.id, t), 1.0))
    for d in s.demands:
        if d.bus == bus:
            terms.append((ctx.v("p_d", d.id, t), -1.0))
    return terms


def add_pcc_balance(ctx: _Ctx, t: int, bus: int) -> int:
    """Generation + net line inflow = traded power + local demand at a PCC bus."""
    terms = _bus_injections(ctx, t, bus) + [(ctx.v("p_m", bus, t), -1.0)]
    return ctx.b.row(f"balance_pcc_{bus}_{t}", terms, EQ, 0.0)


def add_nonpcc_balance(ctx: _Ctx, t: int, bus: int) -> int:
    return ctx.b.row(f"balance_{bus}_{t}", _bus_injections(ctx, t, bus), EQ, 0.0)


def add_trade_bounds(ctx: _Ctx, t: int, bus: int) -> None:
    lim = ctx.s.pcc_limit(bus)
    ctx.b.set_bounds(ctx.v("p_m", bus, t), -lim, lim)


def add_dam_trade_link(ctx: _Ctx, t: int) -> int:
    terms = [(ctx.v("p_da", t), 1.0)] + [(ctx.v("p_m", bus, t), -1.0) for bus in ctx.s.network.pcc_buses]
    return ctx.b.row(f"dam_link_{t}", terms, EQ, 0.0)


def add_idm_trade_link(ctx: _Ctx, t: int) -> int:
    """p_da* + earlier p_id* + p_id = sum of PCC trades."""
    terms = [(ctx.v("p_id", t), 1.0)] + [(ctx.v("p_m", bus, t), -1.0) for bus in ctx.s.network.pcc_buses]
    return ctx.b.row(f"idm_link_{ctx.k}_{t}", terms, EQ, -ctx.settled.traded(t, upto=ctx.k))


def add_network_constraints(ctx: _Ctx, t: int) -> list[int]:
    """DC flow rows; flow limits and the slack angle are variable bounds."""
    rows = []
    for ln in ctx.s.network.lines:
        rows.append(ctx.b.row(
            f"dcflow_{ln.id}_{t}",
            [(ctx.v("flow", ln.id, t), 1.0),
             (ctx.v("angle", ln.from_bus, t), -ln.susceptance),
             (ctx.v("angle", ln.to_bus, t), ln.susceptance)],
            EQ, 0.0))
    return rows


def _prev_commitment(ctx: _Ctx, unit, t: int):
    """(variable index, None) inside the window, or (None, settled value) at its edge."""
    if t > ctx.first:
        return ctx.v("u_c", unit.id, t - 1), None
    if t == 0:
        return None, 1.0 if unit.initial_on else 0.0
    return None, ctx.settled.schedule["u_c"][unit.id][t - 1]


def add_dres_constraints(ctx: _Ctx, t: int, unit) -> list[int]:
    b = ctx.b
    p, u = ctx.v("p_c", unit.id, t), ctx.v("u_c", unit.id, t)
    c0, c1 = ctx.v("c0", unit.id, t), ctx.v("c1", unit.id, t)
    rows = [
        b.row(f"pmax_{unit.id}_{t}", [(p, 1.0), (u, -unit.p_max)], LE, 0.0),
        b.row(f"pmin_{unit.id}_{t}", [(p, -1.0), (u, unit.p_min)], LE, 0.0),
    ]
    prev_j, prev_val = _prev_commitment(ctx, unit, t)
    # c1 >= C1 (u_t - u_{t-1});  c0 >= C0 (u_{t-1} - u_t)
    up = [(c1, 1.0), (u, -unit.startup_cost)]
    down = [(c0, 1.0), (u, unit.shutdown_cost)]
    if prev_j is None:
        rows.append(b.row(f"startup_{unit.id}_{t}", up, GE, -unit.startup_cost * prev_val))
        rows.append(b.row(f"shutdown_{unit.id}_{t}", down, GE, unit.shutdown_cost * prev_val))
    else:
        rows.append(b.row(f"startup_{unit.id}_{t}", up + [(prev_j, unit.startup_cost)], GE, 0.0))
        rows.append(b.row(f"shutdown_{unit.id}_{t}", down + [(prev_j, -unit.shutdown_cost)], GE, 0.0))
    return rows


def add_ndres_bounds(ctx: _Ctx, t: int, unit, vintage: int) -> None:
    avail = ctx.s.available(unit, vintage)
    ctx.b.set_bounds(ctx.v("p_r", unit.id, t), unit.p_min_profile[t], avail[t])


def _prev_energy(ctx: _Ctx, unit, t: int):
    if t > ctx.first:
        return ctx.v("energy_stu", unit.id, t - 1), None
    if t == 0:
        return None, unit.initial_energy
    return None, ctx.settled.schedule["energy_stu"][unit.id][t - 1]


def add_stu_constraints(ctx: _Ctx, t: int, unit) -> int:
    """energy_t = energy_{t-1} + (eff * charge_t - p_t) * dt."""
    dt = ctx.dt
    e = ctx.v("energy_stu", unit.id, t)
    terms = [(e, 1.0), (ctx.v("charge_stu", unit.id, t), -unit.efficiency * dt),
             (ctx.v("p_stu", unit.id, t), dt)]
    prev_j, prev_val = _prev_energy(ctx, unit, t)
    if prev_j is None:
        return ctx.b.row(f"stu_energy_{unit.id}_{t}", terms, EQ, prev_val)
    return ctx.b.row(f"stu_energy_{unit.id}_{t}", terms + [(prev_j, -1.0)], EQ, 0.0)


def add_profile_selection(ctx: _Ctx, d) -> list[int]:
    b = ctx.b
    rows = []
    for t in ctx.periods:
        terms = [(ctx.v("p_d", d.id, t), 1.0)]
        terms += [(ctx.v("u_dp", d.id, p.id), -p.power[t]) for p in d.profiles]
        rows.append(b.row(f"profile_{d.id}_{t}", terms, EQ, 0.0))
    rows.append(b.row(f"one_profile_{d.id}", [(ctx.v("u_dp", d.id, p.id), 1.0) for p in d.profiles], EQ, 1.0))
    return rows


def _chosen_power(ctx: _Ctx, d) -> tuple[float, ...]:
    return d.profile(ctx.settled.profiles[d.id]).power


def add_demand_tolerance(ctx: _Ctx, d, t: int) -> None:
    ref = _chosen_power(ctx, d)[t]
    ctx.b.set_bounds(ctx.v("p_d", d.id, t), (1.0 - d.tolerance_down[t]) * ref, (1.0 + d.tolerance_up[t]) * ref)


def add_demand_ramps(ctx: _Ctx, d, t: int) -> list[int]:
    if t == 0:
        return []
    b = ctx.b
    dt = ctx.dt
    cur = ctx.v("p_d", d.id, t)
    if t > ctx.first:
        prev = ctx.v("p_d", d.id, t - 1)
        return [
            b.row(f"ramp_up_{d.id}_{t}", [(cur, 1.0), (prev, -1.0)], LE, d.ramp_up * dt),
            b.row(f"ramp_down_{d.id}_{t}", [(prev, 1.0), (cur, -1.0)], LE, d.ramp_down * dt),
        ]
    settled = ctx.settled.schedule["p_d"][d.id][t - 1]
    return [
        b.row(f"ramp_up_{d.id}_{t}", [(cur, 1.0)], LE, d.ramp_up * dt + settled),
        b.row(f"ramp_down_{d.id}_{t}", [(cur, -1.0)], LE, d.ramp_down * dt - settled),
    ]


def add_min_energy(ctx: _Ctx, d) -> int:
    dt = ctx.dt
    before = math.fsum(ctx.settled.schedule["p_d"][d.id][t] for t in range(ctx.first)) * dt
    terms = [(ctx.v("p_d", d.id, t), dt) for t in ctx.periods]
    return ctx.b.row(f"min_energy_{d.id}", terms, GE, d.min_energy - before)


def _physical(ctx: _Ctx, vintage: int) -> None:
    s = ctx.s
    pcc = set(s.network.pcc_buses)
    for t in ctx.periods:
        for bus in s.network.bus_ids:
            if bus in pcc:
                add_pcc_balance(ctx, t, bus)
                add_trade_bounds(ctx, t, bus)
            else:
                add_nonpcc_balance(ctx, t, bus)
        add_network_constraints(ctx, t)
        for c in s.dispatchables:
            add_dres_constraints(ctx, t, c)
        for r in s.nondispatchables:
            add_ndres_bounds(ctx, t, r, vintage)
        for th in s.stus:
            add_stu_constraints(ctx, t, th)


def build_dam_program(s: Scenario, options: FormulationOptions = FormulationOptions()
                      ) -> tuple[MixedIntegerProgram, VariableCatalog]:
    """Day-ahead profit maximisation over the whole horizon."""
    require_valid(s)
    ctx = _Ctx(ProgramBuilder("dam"), VariableCatalog(DAM, range(s.horizon)), s, DAM, None, options)
    _declare(ctx)
    _physical(ctx, vintage=0)
    b, dt = ctx.b, ctx.dt
    for t in ctx.periods:
        add_dam_trade_link(ctx, t)
        b.add_objective(ctx.v("p_da", t), s.market.dam_prices[t] * dt)
        for c in s.dispatchables:
            b.add_objective(ctx.v("p_c", c.id, t), -c.variable_cost * dt)
            b.add_objective(ctx.v("c0", c.id, t), -1.0)
            b.add_objective(ctx.v("c1", c.id, t), -1.0)
    for d in s.demands:
        add_profile_selection(ctx, d)
        for p in d.profiles:
            b.add_objective(ctx.v("u_dp", d.id, p.id), -p.cost)
    return b.build(), ctx.cat


def commitment_cost(unit, trajectory, start: int, prev: float) -> float:
    """Start-up plus shut-down cost of ``trajectory[start:]`` given the value before ``start``."""
    total = 0.0
    for t in range(start, len(trajectory)):
        u = trajectory[t]
        total += unit.startup_cost * max(u - prev, 0.0) + unit.shutdown_cost * max(prev - u, 0.0)
        prev = u
    return total


def _settled_prev_u(s: Scenario, settled: SettledState, unit, first: int) -> float:
    if first == 0:
        return 1.0 if unit.initial_on else 0.0
    return settled.schedule["u_c"][unit.id][first - 1]


def build_idm_program(s: Scenario, k: int, settled: SettledState,
                      options: FormulationOptions = FormulationOptions()
                      ) -> tuple[MixedIntegerProgram, VariableCatalog]:
    """Intraday session ``k``: adjustments for periods ``tau_k..horizon``.

    Commitment costs are charged incrementally: the new trajectory's start/stop
    costs inside the window minus those of the settled trajectory (a constant).
    """
    require_valid(s)
    if settled is None or settled.stages != tuple(range(k)):
        have = None if settled is None else settled.stages
        raise ValueError(f"IDM session {k} needs settled stages {tuple(range(k))}, have {have}")
    session = s.market.session(k)
    first = session.tau - 1
    ctx = _Ctx(ProgramBuilder(f"idm{k}"), VariableCatalog(k, range(first, s.horizon)), s, k, settled, options)
    _declare(ctx)
    _physical(ctx, vintage=k)
    b, dt = ctx.b, ctx.dt
    for t in ctx.periods:
        add_idm_trade_link(ctx, t)
        b.add_objective(ctx.v("p_id", t), session.prices[t - first] * dt)
        for c in s.dispatchables:
            dp = ctx.v("dp_c", c.id, t)
            b.row(f"dp_{c.id}_{t}", [(dp, 1.0), (ctx.v("p_c", c.id, t), -1.0)], EQ,
                  -settled.schedule["p_c"][c.id][t])
            if options.abs_variable_cost:
                pos, neg = ctx.v("dp_pos", c.id, t), ctx.v("dp_neg", c.id, t)
                b.row(f"dp_split_{c.id}_{t}", [(dp, 1.0), (pos, -1.0), (neg, 1.0)], EQ, 0.0)
                b.add_objective(pos, -c.variable_cost * dt)
                b.add_objective(neg, -c.variable_cost * dt)
            else:
                b.add_objective(dp, -c.variable_cost * dt)
            b.add_objective(ctx.v("c0", c.id, t), -1.0)
            b.add_objective(ctx.v("c1", c.id, t), -1.0)
    for c in s.dispatchables:
        b.constant += commitment_cost(c, settled.schedule["u_c"][c.id], first,
                                      _settled_prev_u(s, settled, c, first))
    for d in s.demands:
        for t in ctx.periods:
            add_demand_tolerance(ctx, d, t)
            add_demand_ramps(ctx, d, t)
        add_min_energy(ctx, d)
    return b.build(), ctx.cat


_SCHEDULE_FAMILIES = {
    "p_c": lambda s: [c.id for c in s.dispatchables],
    "u_c": lambda s: [c.id for c in s.dispatchables],
    "p_d": lambda s: [d.id for d in s.demands],
    "p_r": lambda s: [r.id for r in s.nondispatchables],
    "p_stu": lambda s: [th.id for th in s.stus],
    "charge_stu": lambda s: [th.id for th in s.stus],
    "energy_stu": lambda s: [th.id for th in s.stus],
    "flow": lambda s: [ln.id for ln in s.network.lines],
    "angle": lambda s: list(s.network.bus_ids),
    "p_m": lambda s: list(s.network.pcc_buses),
}


def _merge_schedule(s: Scenario, cat: VariableCatalog, values, base: dict | None) -> dict:
    out = {}
    for fam, ids in _SCHEDULE_FAMILIES.items():
        out[fam] = {}
        for e in ids(s):
            series = list(base[fam][e]) if base is not None else [0.0] * s.horizon
            for t, v in cat.series(values, fam, e).items():
                series[t] = round(v) if fam == "u_c" else v
            out[fam][e] = tuple(float(x) for x in series)
    return out


def chosen_profiles(s: Scenario, cat: VariableCatalog, values) -> dict[str, str]:
    out = {}
    for d in s.demands:
        picked = [p.id for p in d.profiles if values[cat["u_dp", d.id, p.id]] > 0.5]
        out[d.id] = picked[0]
    return out


def settle_dam(s: Scenario, sol: Solution, cat: VariableCatalog) -> SettledState:
    x = sol.values
    return SettledState(
        stages=(DAM,),
        p_da=tuple(float(x[cat["p_da", t]]) for t in range(s.horizon)),
        profiles=chosen_profiles(s, cat, x),
        schedule=_merge_schedule(s, cat, x, None),
    )


def settle_idm(s: Scenario, k: int, sol: Solution, cat: VariableCatalog, prev: SettledState) -> SettledState:
    x = sol.values
    series = [0.0] * s.horizon
    for t, v in cat.series(x, "p_id").items():
        series[t] = v
    p_id = dict(prev.p_id)
    p_id[k] = tuple(series)
    return replace(prev, stages=prev.stages + (k,), p_id=p_id,
                   schedule=_merge_schedule(s, cat, x, prev.schedule))


@dataclass(frozen=True)
class StageTerms:
    """Objective of one stage split into its accounting terms (EUR)."""

    revenue: float
    variable_cost: float
    commitment_cost: float
    profile_payment: float = 0.0

    @property
    def profit(self) -> float:
        return self.revenue - self.variable_cost - self.commitment_cost - self.profile_payment


def dam_terms(s: Scenario, cat: VariableCatalog, values) -> StageTerms:
    dt = s.market.dt
    rev = math.fsum(s.market.dam_prices[t] * values[cat["p_da", t]] * dt for t in cat.periods)
    var = math.fsum(c.variable_cost * values[cat["p_c", c.id, t]] * dt
                    for t in cat.periods for c in s.dispatchables)
    com = math.fsum(values[cat["c0", c.id, t]] + values[cat["c1", c.id, t]]
                    for t in cat.periods for c in s.dispatchables)
    pay = math.fsum(p.cost * values[cat["u_dp", d.id, p.id]] for d in s.demands for p in d.profiles)
    return StageTerms(rev, var, com, pay)


def idm_terms(s: Scenario, k: int, cat: VariableCatalog, values, settled: SettledState,
              options: FormulationOptions = FormulationOptions()) -> StageTerms:
    dt = s.market.dt
    session = s.market.session(k)
    first = session.tau - 1
    rev = math.fsum(session.prices[t - first] * values[cat["p_id", t]] * dt for t in cat.periods)
    if options.abs_variable_cost:
        var = math.fsum(c.variable_cost * (values[cat["dp_pos", c.id, t]] + values[cat["dp_neg", c.id, t]]) * dt
                        for t in cat.periods for c in s.dispatchables)
    else:
        var = math.fsum(c.variable_cost * values[cat["dp_c", c.id, t]] * dt
                        for t in cat.periods for c in s.dispatchables)
    com = math.fsum(values[cat["c0", c.id, t]] + values[cat["c1", c.id, t]]
                    for t in cat.periods for c in s.dispatchables)
    com -= math.fsum(commitment_cost(c, settled.schedule["u_c"][c.id], first,
                                     _settled_prev_u(s, settled, c, first)) for c in s.dispatchables)
    return StageTerms(rev, var, com)
