import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import factories as f
from audit import audit_day
from vppflex.analysis import with_tolerance
from vppflex.formulation import build_idm_program
from vppflex.market import MarketError, run_dam, run_idm_session, run_market_day, settlement_report
from vppflex.model import InvalidScenario
from vppflex.scenario_io import load_bundled
from vppflex.solver import enumerate_binaries, solve_milp


def test_single_generator_day_profit():
    # 10 MW x 24 h x (50 - 10) EUR/MWh, initially on, no commitment cost
    s = f.one_bus([50.0] * 24, dres=[f.hydro(p_max=10.0, cv=10.0, on=True)])
    state = run_market_day(s)
    assert state.profit == pytest.approx(9600.0, abs=1e-9)
    assert settlement_report(state).rows[-1].profit == pytest.approx(9600.0, abs=1e-9)


def test_empty_portfolio_profit_zero():
    assert run_market_day(f.one_bus([30.0, 10.0])).profit == 0.0


def test_no_sessions_is_dam_only():
    s = f.shift_instance()
    a, b = run_market_day(s), run_dam(s)
    assert a.profit == b.profit and len(a.stages) == 1
    assert settlement_report(a).uplift == 0.0


def test_zero_adjustment_fixed_point():
    s = f.zero_adjust_instance()
    state = run_market_day(s)
    for st_ in state.stages[1:]:
        assert all(v == pytest.approx(0.0, abs=1e-9) for v in st_.catalog.series(st_.solution.values, "p_id").values())
        assert st_.terms.profit == pytest.approx(0.0, abs=1e-9)
        oracle = enumerate_binaries(st_.program)
        assert oracle.objective_value == pytest.approx(0.0, abs=1e-9)
    assert state.profit == pytest.approx(state.dam_profit, abs=1e-9)
    assert audit_day(state) == []


def test_forecast_drop_forces_buyback():
    s = f.one_bus([50.0, 50.0], ndres=[f.wind(1, [30.0, 30.0])],
                  sessions=[f.session(1, 1, [60.0, 60.0], [("w", (20.0, 20.0))])])
    state = run_market_day(s)
    idm = state.stages[1]
    assert list(idm.catalog.series(idm.solution.values, "p_id").values()) == pytest.approx([-10.0, -10.0])
    assert idm.terms.profit == pytest.approx(-1200.0)
    assert state.final_trade() == pytest.approx([20.0, 20.0])


def test_last_period_session_covers_one_period():
    s = f.one_bus([50.0, 50.0, 50.0], ndres=[f.wind(1, [30.0, 30.0, 30.0])],
                  sessions=[f.session(1, 3, [70.0])])
    state = run_market_day(s)
    assert list(state.stages[1].catalog.periods) == [2]


def test_session_beyond_horizon_rejected():
    s = f.one_bus([50.0, 50.0], sessions=[f.session(1, 3, [1.0])])
    with pytest.raises(InvalidScenario):
        run_market_day(s)


def test_sessions_must_run_in_order():
    s = f.zero_adjust_instance()
    state = run_dam(s)
    with pytest.raises(ValueError):
        run_idm_session(state, 2)


def test_tight_band_and_min_energy_abort_the_day():
    # DAM: 5 MW wind + 5 MW import serve 10 MW; in the IDM the wind forecast drops to 0 and the
    # 6 MW import limit cannot cover a demand that min energy pins at 10 MW per hour
    d = f.demand("d", 1, [(10.0, 10.0)], min_energy=20.0, tol=0.5)
    s = f.one_bus([50.0, 50.0], ndres=[f.wind(1, [5.0, 5.0])], demands=[d], trade=6.0,
                  sessions=[f.session(1, 1, [50.0, 50.0], [("w", (0.0, 0.0))])])
    with pytest.raises(MarketError) as err:
        run_market_day(s)
    assert err.value.stage == 1 and err.value.status == "infeasible"
    # with a looser energy floor the band absorbs the loss
    run_market_day(replace(s, demands=(replace(d, min_energy=12.0),)))


def test_bundled_day_audit_and_ledger():
    state = run_market_day(load_bundled())
    assert state.complete and len(state.stages) == 6
    assert audit_day(state) == []
    rep = settlement_report(state)
    total = rep.rows[-1]
    assert total.stage == "total"
    assert total.profit == pytest.approx(math.fsum(st_.solution.objective_value for st_ in state.stages),
                                         abs=1e-6 * (1 + abs(total.profit)))
    assert rep.final_profit == state.profit


def test_no_forecast_change_never_loses_money():
    s = load_bundled()
    sessions = tuple(replace(sn, forecast_update=()) for sn in s.market.idm_sessions)
    state = run_market_day(replace(s, market=replace(s.market, idm_sessions=sessions)))
    assert all(st_.terms.profit >= -1e-6 for st_ in state.stages[1:])
    assert state.profit >= state.dam_profit - 1e-6


def test_final_consumption_stays_in_band():
    s = load_bundled()
    state = run_market_day(s)
    for d in s.demands:
        ref = d.profile(state.settled.profiles[d.id]).power
        final = state.settled.schedule["p_d"][d.id]
        for t in range(s.horizon):
            assert (1 - d.tolerance_down[t]) * ref[t] - 1e-6 <= final[t] <= (1 + d.tolerance_up[t]) * ref[t] + 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_random_days_pass_audit(seed):
    s = f.random_scenario(np.random.default_rng(seed), one_profile=False)
    state = run_market_day(s)
    assert audit_day(state) == []
    assert state.profit == pytest.approx(math.fsum(x.solution.objective_value for x in state.stages),
                                         abs=1e-6 * (1 + abs(state.profit)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 0.4), st.floats(0.0, 0.4))
def test_session_objective_monotone_in_tolerance(seed, a, extra):
    s = f.random_scenario(np.random.default_rng(seed), one_profile=False)
    if not s.market.idm_sessions:
        return
    settled = run_dam(s).settled  # the DAM ignores tolerances
    lo = solve_milp(build_idm_program(with_tolerance(s, 100 * a), 1, settled)[0])
    hi = solve_milp(build_idm_program(with_tolerance(s, 100 * (a + extra)), 1, settled)[0])
    if lo.optimal:
        assert hi.optimal and hi.objective_value >= lo.objective_value - 1e-6
