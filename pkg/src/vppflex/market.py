"""Sequential market day: DAM, then each IDM session with the latest forecasts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .formulation import (
    DAM,
    FormulationOptions,
    SettledState,
    StageTerms,
    VariableCatalog,
    build_dam_program,
    build_idm_program,
    dam_terms,
    idm_terms,
    settle_dam,
    settle_idm,
)
from .model import Scenario, require_valid
from .solver import MixedIntegerProgram, Solution, solve_milp


class MarketError(RuntimeError):
    """A market stage could not be solved to optimality."""

    def __init__(self, stage: int, status: str, detail: str = ""):
        self.stage = stage
        self.status = status
        name = "DAM" if stage == DAM else f"IDM session {stage}"
        super().__init__(f"{name}: {status}" + (f" ({detail})" if detail else ""))


@dataclass
class StageResult:
    stage: int
    program: MixedIntegerProgram
    catalog: VariableCatalog
    solution: Solution
    terms: StageTerms

    @property
    def name(self) -> str:
        return "dam" if self.stage == DAM else f"idm{self.stage}"


@dataclass
class MarketDayState:
    scenario: Scenario
    settled: SettledState
    stages: list[StageResult] = field(default_factory=list)
    options: FormulationOptions = FormulationOptions()

    @property
    def dam_profit(self) -> float:
        return self.stages[0].terms.profit

    @property
    def profit(self) -> float:
        return math.fsum(st.terms.profit for st in self.stages)

    @property
    def complete(self) -> bool:
        return len(self.stages) == len(self.scenario.market.idm_sessions) + 1

    def final_trade(self) -> list[float]:
        return [self.settled.traded(t) for t in range(self.scenario.horizon)]


def _solve(stage: int, program: MixedIntegerProgram, node_limit: int | None) -> Solution:
    sol = solve_milp(program, node_limit=node_limit)
    if not sol.optimal:
        raise MarketError(stage, sol.status.value, f"program {program.name}: {program.n} vars, {program.m} rows")
    return sol


def run_dam(s: Scenario, options: FormulationOptions = FormulationOptions(),
            node_limit: int | None = None) -> MarketDayState:
    require_valid(s)
    program, cat = build_dam_program(s, options)
    sol = _solve(DAM, program, node_limit)
    terms = dam_terms(s, cat, sol.values)
    return MarketDayState(s, settle_dam(s, sol, cat), [StageResult(DAM, program, cat, sol, terms)], options)


def run_idm_session(state: MarketDayState, k: int, node_limit: int | None = None) -> MarketDayState:
    s = state.scenario
    program, cat = build_idm_program(s, k, state.settled, state.options)
    sol = _solve(k, program, node_limit)
    terms = idm_terms(s, k, cat, sol.values, state.settled, state.options)
    return replace(state, settled=settle_idm(s, k, sol, cat, state.settled),
                   stages=state.stages + [StageResult(k, program, cat, sol, terms)])


def run_market_day(s: Scenario, options: FormulationOptions = FormulationOptions(),
                   node_limit: int | None = None) -> MarketDayState:
    state = run_dam(s, options, node_limit)
    for session in s.market.idm_sessions:
        state = run_idm_session(state, session.k, node_limit)
    return state


@dataclass(frozen=True)
class SettlementRow:
    stage: str
    revenue: float
    dres_cost: float
    profile_payment: float
    profit: float

    @property
    def cost(self) -> float:
        return self.dres_cost + self.profile_payment


@dataclass(frozen=True)
class SettlementReport:
    rows: tuple[SettlementRow, ...]
    dam_profit: float
    final_profit: float

    @property
    def uplift(self) -> float:
        """Relative profit gain of the whole day over the DAM result."""
        if self.dam_profit == 0:
            return 0.0
        return (self.final_profit - self.dam_profit) / abs(self.dam_profit)


def settlement_report(state: MarketDayState) -> SettlementReport:
    rows = []
    for st in state.stages:
        t = st.terms
        rows.append(SettlementRow(st.name, t.revenue, t.variable_cost + t.commitment_cost,
                                  t.profile_payment, t.profit))
    total = SettlementRow(
        "total",
        math.fsum(r.revenue for r in rows),
        math.fsum(r.dres_cost for r in rows),
        math.fsum(r.profile_payment for r in rows),
        math.fsum(r.profit for r in rows),
    )
    return SettlementReport(tuple(rows) + (total,), state.dam_profit, state.profit)
