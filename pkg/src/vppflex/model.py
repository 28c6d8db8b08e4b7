"""Domain types for a RES-based virtual power plant instance.

Units: power in MW, energy in MWh, prices in EUR/MWh, costs in EUR.
Periods are 0-based internally; IDM first-delivery periods (``tau``) are
1-based, as they appear in scenario files.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any

EQ_TOL = 1e-6


@dataclass(frozen=True)
class Bus:
    id: int
    name: str = ""


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: int
    to_bus: int
    susceptance: float  # MW per rad, per-unit base folded in
    flow_limit: float


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    pcc_buses: tuple[int, ...]
    slack_bus: int

    @property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)


@dataclass(frozen=True)
class DispatchableUnit:
    """Dispatchable renewable unit (hydro) with commitment."""

    id: str
    bus: int
    p_min: float
    p_max: float
    variable_cost: float
    startup_cost: float
    shutdown_cost: float
    initial_on: bool = True


@dataclass(frozen=True)
class NonDispatchableUnit:
    """Wind or PV plant; ``available_profile`` is the day-ahead forecast."""

    id: str
    bus: int
    p_min_profile: tuple[float, ...]
    available_profile: tuple[float, ...]


@dataclass(frozen=True)
class StorageThermalUnit:
    """Solar thermal unit with a single thermal store.

    Thermal charging is limited by ``min(charge_limit, thermal_input[t])`` and
    scaled by ``efficiency`` on the way in; discharge is lossless.
    """

    id: str
    bus: int
    p_max: float
    energy_capacity: float
    charge_limit: float
    efficiency: float
    initial_energy: float
    thermal_input: tuple[float, ...]


@dataclass(frozen=True)
class DemandProfile:
    id: str
    power: tuple[float, ...]
    cost: float = 0.0

    def energy(self, dt: float) -> float:
        return sum(self.power) * dt


@dataclass(frozen=True)
class Demand:
    id: str
    bus: int
    profiles: tuple[DemandProfile, ...]
    min_energy: float
    ramp_up: float
    ramp_down: float
    tolerance_down: tuple[float, ...]
    tolerance_up: tuple[float, ...]
    default_profile: str

    def profile(self, profile_id: str) -> DemandProfile:
        for p in self.profiles:
            if p.id == profile_id:
                return p
        raise KeyError(f"demand {self.id!r} has no profile {profile_id!r}")


@dataclass(frozen=True)
class IdmSession:
    """One intraday auction session.

    ``prices`` and every forecast update cover periods ``tau..horizon``
    (``horizon - tau + 1`` values).
    """

    k: int
    tau: int
    prices: tuple[float, ...]
    forecast_update: tuple[tuple[str, tuple[float, ...]], ...] = ()

    def update_for(self, unit_id: str) -> tuple[float, ...] | None:
        for uid, values in self.forecast_update:
            if uid == unit_id:
                return values
        return None


@dataclass(frozen=True)
class MarketStructure:
    horizon: int
    dt: float
    dam_prices: tuple[float, ...]
    idm_sessions: tuple[IdmSession, ...] = ()

    def session(self, k: int) -> IdmSession:
        for s in self.idm_sessions:
            if s.k == k:
                return s
        raise KeyError(f"no IDM session k={k}")


@dataclass(frozen=True)
class PccLimit:
    bus: int
    p_max_trade: float


@dataclass(frozen=True)
class Scenario:
    network: Network
    dispatchables: tuple[DispatchableUnit, ...] = ()
    nondispatchables: tuple[NonDispatchableUnit, ...] = ()
    stus: tuple[StorageThermalUnit, ...] = ()
    demands: tuple[Demand, ...] = ()
    market: MarketStructure = field(default_factory=lambda: MarketStructure(1, 1.0, (0.0,)))
    pcc_limits: tuple[PccLimit, ...] = ()
    name: str = ""
    description: str = ""

    @property
    def horizon(self) -> int:
        return self.market.horizon

    def pcc_limit(self, bus: int) -> float:
        for lim in self.pcc_limits:
            if lim.bus == bus:
                return lim.p_max_trade
        raise KeyError(f"no trade limit for PCC bus {bus}")

    def demand(self, demand_id: str) -> Demand:
        for d in self.demands:
            if d.id == demand_id:
                return d
        raise KeyError(f"no demand {demand_id!r}")

    def available(self, unit: NonDispatchableUnit, k: int = 0) -> tuple[float, ...]:
        """Availability forecast vintage ``k`` (0 = day-ahead) over the full horizon.

        Sessions without an update for ``unit`` inherit the previous vintage.
        """
        values = list(unit.available_profile)
        for session in self.market.idm_sessions:
            if session.k > k:
                break
            update = session.update_for(unit.id)
            if update is not None:
                values[session.tau - 1:] = update
        return tuple(values)


@dataclass(frozen=True)
class Violation:
    entity: str
    invariant: str
    value: Any = None

    def __str__(self) -> str:
        return f"{self.entity}: {self.invariant} (got {self.value!r})"


def _connected(network: Network) -> bool:
    ids = set(network.bus_ids)
    if not ids:
        return False
    adj: dict[int, set[int]] = {b: set() for b in ids}
    for ln in network.lines:
        if ln.from_bus in ids and ln.to_bus in ids:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
    start = next(iter(sorted(ids)))
    seen = {start}
    queue = deque([start])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return seen == ids


def _check_network(net: Network, out: list[Violation]) -> None:
    ids = net.bus_ids
    if len(set(ids)) != len(ids):
        out.append(Violation("network", "bus ids unique", sorted(ids)))
    bus_set = set(ids)
    line_ids = [ln.id for ln in net.lines]
    if len(set(line_ids)) != len(line_ids):
        out.append(Violation("network", "line ids unique", line_ids))
    for ln in net.lines:
        ent = f"line {ln.id}"
        for end in (ln.from_bus, ln.to_bus):
            if end not in bus_set:
                out.append(Violation(ent, "endpoint references an existing bus", end))
        if ln.from_bus == ln.to_bus:
            out.append(Violation(ent, "from_bus != to_bus", ln.from_bus))
        if not ln.susceptance > 0:
            out.append(Violation(ent, "susceptance > 0", ln.susceptance))
        if not ln.flow_limit > 0:
            out.append(Violation(ent, "flow_limit > 0", ln.flow_limit))
    if not net.pcc_buses:
        out.append(Violation("network", "pcc_buses nonempty", list(net.pcc_buses)))
    for b in net.pcc_buses:
        if b not in bus_set:
            out.append(Violation("network", "pcc bus exists", b))
    if net.slack_bus not in bus_set:
        out.append(Violation("network", "slack bus exists", net.slack_bus))
    if bus_set and not _connected(net):
        out.append(Violation("network", "network is connected", None))


def _check_series(ent: str, name: str, values, n: int, out: list[Violation]) -> bool:
    if len(values) != n:
        out.append(Violation(ent, f"{name} length equals horizon {n}", len(values)))
        return False
    return True


def validate_scenario(s: Scenario) -> list[Violation]:
    """Return every invariant violation of ``s``; empty means valid."""
    out: list[Violation] = []
    mkt = s.market
    T = mkt.horizon
    if T < 1:
        out.append(Violation("market", "horizon >= 1", T))
    if not mkt.dt > 0:
        out.append(Violation("market", "dt > 0", mkt.dt))
    _check_series("market", "dam_prices", mkt.dam_prices, T, out)
    last_tau = 0
    for sess in mkt.idm_sessions:
        ent = f"idm session {sess.k}"
        if sess.tau <= last_tau:
            out.append(Violation(ent, "tau strictly increasing", sess.tau))
        if not 1 <= sess.tau <= T:
            out.append(Violation(ent, "1 <= tau <= horizon", sess.tau))
            last_tau = max(last_tau, sess.tau)
            continue
        last_tau = sess.tau
        width = T - sess.tau + 1
        if len(sess.prices) != width:
            out.append(Violation(ent, f"prices defined for periods {sess.tau}..{T}", len(sess.prices)))
        for uid, values in sess.forecast_update:
            if len(values) != width:
                out.append(Violation(ent, f"forecast update for {uid} covers periods {sess.tau}..{T}", len(values)))
    ks = [sess.k for sess in mkt.idm_sessions]
    if ks != list(range(1, len(ks) + 1)):
        out.append(Violation("market", "session indices are 1..K in order", ks))

    net = s.network
    _check_network(net, out)
    bus_set = set(net.bus_ids)

    seen_ids: set[str] = set()

    def asset_common(kind: str, aid: str, bus: int) -> str:
        ent = f"{kind} {aid}"
        if aid in seen_ids:
            out.append(Violation(ent, "asset ids unique", aid))
        seen_ids.add(aid)
        if bus not in bus_set:
            out.append(Violation(ent, "bus exists", bus))
        return ent

    for c in s.dispatchables:
        ent = asset_common("dres", c.id, c.bus)
        if not 0 <= c.p_min <= c.p_max:
            out.append(Violation(ent, "0 <= p_min <= p_max", (c.p_min, c.p_max)))
        for name in ("variable_cost", "startup_cost", "shutdown_cost"):
            if getattr(c, name) < 0:
                out.append(Violation(ent, f"{name} >= 0", getattr(c, name)))

    unit_ids = {r.id for r in s.nondispatchables}
    for sess in mkt.idm_sessions:
        for uid, _ in sess.forecast_update:
            if uid not in unit_ids:
                out.append(Violation(f"idm session {sess.k}", "forecast update names an NDRES", uid))
    for r in s.nondispatchables:
        ent = asset_common("ndres", r.id, r.bus)
        ok = _check_series(ent, "p_min_profile", r.p_min_profile, T, out)
        ok &= _check_series(ent, "available_profile", r.available_profile, T, out)
        if not ok or T < 1:
            continue
        for k in range(len(mkt.idm_sessions) + 1):
            try:
                avail = s.available(r, k)
            except (TypeError, ValueError):
                continue
            if len(avail) != T:
                continue
            for t in range(T):
                if not 0 <= r.p_min_profile[t] <= avail[t]:
                    out.append(Violation(ent, f"0 <= p_min <= available (vintage {k}, period {t + 1})",
                                         (r.p_min_profile[t], avail[t])))
                    break

    for th in s.stus:
        ent = asset_common("stu", th.id, th.bus)
        if th.p_max < 0 or th.energy_capacity < 0 or th.charge_limit < 0:
            out.append(Violation(ent, "p_max, energy_capacity, charge_limit >= 0",
                                 (th.p_max, th.energy_capacity, th.charge_limit)))
        if not 0 <= th.initial_energy <= th.energy_capacity:
            out.append(Violation(ent, "0 <= initial_energy <= energy_capacity", th.initial_energy))
        if not 0 < th.efficiency <= 1:
            out.append(Violation(ent, "0 < efficiency <= 1", th.efficiency))
        if _check_series(ent, "thermal_input", th.thermal_input, T, out):
            if any(v < 0 for v in th.thermal_input):
                out.append(Violation(ent, "thermal_input >= 0", min(th.thermal_input)))

    for d in s.demands:
        ent = asset_common("demand", d.id, d.bus)
        if not d.profiles:
            out.append(Violation(ent, "profiles nonempty", 0))
            continue
        pids = [p.id for p in d.profiles]
        if len(set(pids)) != len(pids):
            out.append(Violation(ent, "profile ids unique", pids))
        zero_cost = [p.id for p in d.profiles if p.cost == 0]
        if len(zero_cost) != 1:
            out.append(Violation(ent, "exactly one profile has cost 0", zero_cost))
        if d.default_profile not in pids:
            out.append(Violation(ent, "default_profile names a profile", d.default_profile))
        elif d.profile(d.default_profile).cost != 0:
            out.append(Violation(ent, "default profile has cost 0", d.profile(d.default_profile).cost))
        if d.ramp_up < 0 or d.ramp_down < 0:
            out.append(Violation(ent, "ramps >= 0", (d.ramp_up, d.ramp_down)))
        for name in ("tolerance_down", "tolerance_up"):
            tol = getattr(d, name)
            if _check_series(ent, name, tol, T, out) and any(not 0 <= v < 1 for v in tol):
                out.append(Violation(ent, f"{name} in [0, 1)", tol))
        lengths_ok = True
        for p in d.profiles:
            pent = f"{ent} profile {p.id}"
            lengths_ok &= _check_series(pent, "power", p.power, T, out)
            if any(v < 0 for v in p.power):
                out.append(Violation(pent, "power >= 0", min(p.power)))
            if p.cost < 0:
                out.append(Violation(pent, "cost >= 0", p.cost))
        if lengths_ok and mkt.dt > 0:
            least = min(p.energy(mkt.dt) for p in d.profiles)
            if d.min_energy > least + EQ_TOL:
                out.append(Violation(ent, "min_energy <= energy of every profile", (d.min_energy, least)))

    limited = {lim.bus for lim in s.pcc_limits}
    for b in net.pcc_buses:
        if b not in limited:
            out.append(Violation(f"pcc {b}", "every pcc bus has a trade limit", None))
    for lim in s.pcc_limits:
        if lim.bus not in net.pcc_buses:
            out.append(Violation(f"pcc {lim.bus}", "trade limit refers to a pcc bus", lim.bus))
        if not lim.p_max_trade >= 0:
            out.append(Violation(f"pcc {lim.bus}", "p_max_trade >= 0", lim.p_max_trade))
    return out


def equal_energy_check(d: Demand, dt: float = 1.0) -> bool:
    """True iff every profile of ``d`` carries the same energy within 1e-6 MWh."""
    energies = [p.energy(dt) for p in d.profiles]
    return max(energies) - min(energies) <= EQ_TOL if energies else True


class InvalidScenario(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__(f"invalid scenario: {violations[0]}" + (
            f" (+{len(violations) - 1} more)" if len(violations) > 1 else ""))


def require_valid(s: Scenario) -> None:
    violations = validate_scenario(s)
    if violations:
        raise InvalidScenario(violations)
