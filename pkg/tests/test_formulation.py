from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import factories as f
from vppflex.formulation import (
    FormulationOptions, build_dam_program, build_idm_program, commitment_cost, dam_terms, idm_terms,
    settle_dam,
)
from vppflex.market import run_dam, run_market_day
from vppflex.model import Bus, Line, Network, PccLimit
from vppflex.scenario_io import load_bundled
from vppflex.solver import Status, max_residual, solve_lp, solve_milp


@pytest.fixture(scope="module")
def bundled():
    return load_bundled()


@pytest.fixture(scope="module")
def bundled_dam(bundled):
    return build_dam_program(bundled)


def rows(p):
    return {c.name: c for c in p.constraints}


def row_vars(p, cat, name):
    names = {j: key for key, j in cat.items()}
    return {names[j] for j in rows(p)[name].indices}


def value(sol, cat, *key):
    return sol.values[cat[key]]


# -- structure --------------------------------------------------------------------

def test_one_exactly_one_row_per_demand(bundled_dam):
    p, _ = bundled_dam
    assert sorted(n for n in rows(p) if n.startswith("one_profile_")) == [
        "one_profile_airport", "one_profile_industrial", "one_profile_residential"]


def test_empty_portfolio_objective_is_zero():
    s = f.one_bus([30.0, 40.0])
    p, _ = build_dam_program(s)
    # trade terms remain in the objective but balance pins them to 0: max = min = 0
    best = solve_milp(p)
    worst = solve_milp(p.with_objective({j: -c for j, c in p.objective}))
    assert best.objective_value == 0.0 and worst.objective_value == 0.0


def ledger_instance():
    g = f.hydro(p_min=2.0, p_max=10.0, cv=10.0, c1=5.0, c0=3.0)
    d = f.demand("d", 1, [(4.0, 6.0), (6.0, 4.0)], costs=[0.0, 2.0], tol=0.1)
    return f.one_bus([20.0, 30.0], dres=[g], demands=[d], sessions=[f.session(1, 1, [25.0, 35.0])])


def test_dam_count_ledger():
    # Written by hand from the families, per period:
    #   variables p_c u_c c0 c1 p_d angle p_m p_da = 8, plus u_dp for 2 profiles  -> 2*8 + 2 = 18
    #   rows: pcc balance 1, dres 4 (pmax pmin startup shutdown), dam link 1, profile 1 = 7
    #   plus one exactly-one row                                                   -> 2*7 + 1 = 15
    #   binaries: u_c per period + 2 u_dp                                           -> 4
    p, cat = build_dam_program(ledger_instance())
    assert (p.n, p.m, len(p.binaries())) == (18, 15, 4)
    assert len(cat) == p.n


def test_idm_count_ledger():
    # per period: p_c u_c c0 c1 dp_c p_d angle p_m p_id = 9 variables  -> 18
    # rows per period: balance 1, dres 4, idm link 1, dp 1 = 7 -> 14; ramp rows only at t=1 (2); min energy 1
    s = ledger_instance()
    state = run_dam(s)
    p, cat = build_idm_program(s, 1, state.settled)
    assert (p.n, p.m, len(p.binaries())) == (18, 17, 2)


def test_idm_needs_prior_stages():
    s = ledger_instance()
    with pytest.raises(ValueError):
        build_idm_program(s, 1, None)


# -- balance and network ------------------------------------------------------------

def test_bus5_row_references_incident_lines(bundled, bundled_dam):
    p, cat = bundled_dam
    incident = {ln.id for ln in bundled.network.lines if 5 in (ln.from_bus, ln.to_bus)}
    used = row_vars(p, cat, "balance_pcc_5_0")
    assert {k[1] for k in used if k[0] == "flow"} == incident
    assert ("p_m", 5, 0) in used


def test_bus6_row_has_hydro_and_incident_lines(bundled, bundled_dam):
    p, cat = bundled_dam
    incident = {("flow", ln.id, 0) for ln in bundled.network.lines if 6 in (ln.from_bus, ln.to_bus)}
    assert row_vars(p, cat, "balance_6_0") == incident | {("p_c", "hydro", 0)}


def test_empty_bus_row_is_flows_only():
    s = f.two_bus([10.0], demands=[])
    p, cat = build_dam_program(s)
    assert row_vars(p, cat, "balance_2_0") == {("flow", "L1", 0)}
    assert row_vars(p, cat, "balance_pcc_1_0") == {("flow", "L1", 0), ("p_m", 1, 0)}


def test_islanded_pcc_generator_exports_everything():
    s = f.one_bus([5.0], dres=[f.hydro(p_max=10.0, cv=1.0)])
    p, cat = build_dam_program(s)
    sol = solve_milp(p.with_bounds({cat["p_c", "g", 0]: (10.0, 10.0)}))
    assert value(sol, cat, "p_m", 1, 0) == pytest.approx(10.0, abs=1e-9)


def test_load_only_bus_draws_over_the_line():
    s = f.two_bus([10.0], demands=[f.demand("d", 2, [(7.0,)])])
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert value(sol, cat, "flow", "L1", 0) == pytest.approx(7.0, abs=1e-9)
    assert value(sol, cat, "p_m", 1, 0) == pytest.approx(-7.0, abs=1e-9)


def test_generator_only_bus_pushes_over_the_line():
    s = f.two_bus([50.0], dres=[f.hydro(bus=2, p_max=8.0, cv=1.0)])
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert value(sol, cat, "p_c", "g", 0) == pytest.approx(8.0, abs=1e-9)
    assert value(sol, cat, "flow", "L1", 0) == pytest.approx(-8.0, abs=1e-9)


def test_radial_chain_carries_injection_on_both_lines():
    net = Network((Bus(1), Bus(2), Bus(3)), (Line("a", 1, 2, 10.0, 100.0), Line("b", 2, 3, 20.0, 100.0)),
                  pcc_buses=(1,), slack_bus=1)
    s = replace(f.one_bus([40.0], dres=[f.hydro(bus=3, p_min=5.0, p_max=5.0, cv=1.0)]), network=net)
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert value(sol, cat, "flow", "a", 0) == pytest.approx(-5.0, abs=1e-9)
    assert value(sol, cat, "flow", "b", 0) == pytest.approx(-5.0, abs=1e-9)
    # angles reproduce the flows: theta_3 - theta_1 = 5/20 + 5/10
    assert value(sol, cat, "angle", 3, 0) == pytest.approx(0.75, abs=1e-9)


def test_dc_flow_row_is_linear_in_angle_difference():
    s = replace(f.two_bus([0.0]), network=Network((Bus(1), Bus(2)), (Line("L1", 1, 2, 10.0, 5.0),), (1,), 1))
    p, cat = build_dam_program(s)
    x = np.zeros(p.n)
    x[cat["angle", 2, 0]] = -0.1
    x[cat["flow", "L1", 0]] = 1.0
    dc = rows(p)["dcflow_L1_0"]
    assert sum(c * x[j] for j, c in zip(dc.indices, dc.coefs)) == pytest.approx(dc.rhs, abs=1e-12)
    x[cat["angle", 2, 0]] = 0.0
    x[cat["flow", "L1", 0]] = 0.0
    assert sum(c * x[j] for j, c in zip(dc.indices, dc.coefs)) == 0.0


def test_congested_line_limits_flow():
    s = f.two_bus([50.0], dres=[f.hydro(bus=2, p_max=8.0, cv=1.0)], limit=3.0)
    sol = solve_milp(build_dam_program(s)[0])
    assert sol.objective_value == pytest.approx(3.0 * 49.0, abs=1e-9)


# -- trade --------------------------------------------------------------------------

def test_bundled_trade_bounds(bundled_dam):
    p, cat = bundled_dam
    lb, ub = p.bounds()
    j = cat["p_m", 5, 0]
    assert (lb[j], ub[j]) == (-200.0, 200.0)


def test_zero_trade_limit_forces_zero_trade():
    s = f.one_bus([50.0], dres=[f.hydro(p_max=10.0, cv=1.0)], trade=0.0)
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert sol.objective_value == 0.0 and value(sol, cat, "p_da", 0) == 0.0


def test_trade_bound_can_make_day_infeasible():
    s = f.one_bus([50.0], demands=[f.demand("d", 1, [(10.0,)])], trade=5.0)
    assert solve_milp(build_dam_program(s)[0]).status is Status.INFEASIBLE


def test_dam_link_sums_pccs():
    net = Network((Bus(1), Bus(2)), (Line("L1", 1, 2, 100.0, 100.0),), pcc_buses=(1, 2), slack_bus=1)
    s = replace(f.one_bus([10.0], dres=[f.hydro(p_max=20.0, cv=1.0)]), network=net,
                pcc_limits=(PccLimit(1, 50.0), PccLimit(2, 50.0)))
    p, cat = build_dam_program(s)
    sol = solve_milp(p.with_bounds({cat["p_m", 1, 0]: (3.0, 3.0), cat["p_m", 2, 0]: (4.0, 4.0)}))
    assert value(sol, cat, "p_da", 0) == pytest.approx(7.0, abs=1e-12)


# -- DRES -----------------------------------------------------------------------------

def test_unit_off_forces_zero_output():
    s = f.one_bus([50.0, 50.0], dres=[f.hydro(p_min=2.0, p_max=10.0)])
    p, cat = build_dam_program(s)
    sol = solve_milp(p.with_bounds({cat["u_c", "g", t]: (0.0, 0.0) for t in range(2)}))
    assert all(value(sol, cat, "p_c", "g", t) == 0.0 for t in range(2))


def test_staying_on_costs_nothing():
    s = f.one_bus([50.0, 50.0, 50.0], dres=[f.hydro(c1=30.0, c0=20.0, on=True)])
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert all(value(sol, cat, "c1", "g", t) == 0.0 and value(sol, cat, "c0", "g", t) == 0.0 for t in range(3))


def test_off_on_off_pays_start_and_stop():
    # p_min 5 at -10 EUR/MWh loses 50 per hour > stop cost 20, so it runs only in the 100 EUR hour
    g = f.hydro(p_min=5.0, p_max=10.0, cv=0.0, c1=30.0, c0=20.0, on=False)
    s = f.one_bus([-10.0, 100.0, -10.0], dres=[g])
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert [value(sol, cat, "u_c", "g", t) for t in range(3)] == [0.0, 1.0, 0.0]
    paid = sum(value(sol, cat, "c1", "g", t) + value(sol, cat, "c0", "g", t) for t in range(3))
    assert paid == pytest.approx(50.0, abs=1e-9)
    assert commitment_cost(g, [0, 1, 0], 0, 0.0) == 50.0
    assert sol.objective_value == pytest.approx(1000.0 - 50.0, abs=1e-9)


# -- NDRES and STU -------------------------------------------------------------------------

def test_zero_forecast_forces_zero_output():
    s = f.one_bus([50.0], ndres=[f.wind(1, [0.0])])
    p, cat = build_dam_program(s)
    lb, ub = p.bounds()
    assert ub[cat["p_r", "w", 0]] == 0.0


def test_negative_price_curtails():
    s = f.one_bus([-20.0], ndres=[f.wind(1, [10.0])])
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert value(sol, cat, "p_r", "w", 0) == 0.0 and sol.objective_value == 0.0


def test_bundled_wind_capped_at_50(bundled, bundled_dam):
    p, cat = bundled_dam
    lb, ub = p.bounds()
    assert max(ub[cat["p_r", "wind", t]] for t in range(24)) <= 50.0


def test_empty_store_produces_nothing():
    s = f.one_bus([50.0, 80.0], stus=[f.stu(1, [0.0, 0.0], e0=0.0)])
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert [value(sol, cat, "p_stu", "st", t) for t in range(2)] == [0.0, 0.0]


def test_lossless_store_conserves_energy():
    s = f.one_bus([1.0, 1.0], stus=[f.stu(1, [10.0, 10.0], p_max=100.0, eff=1.0)])
    sol = solve_milp(build_dam_program(s)[0])
    assert sol.objective_value == pytest.approx(20.0, abs=1e-9)


def test_store_shifts_output_to_peak():
    s = f.one_bus([10.0, 20.0, 50.0], stus=[f.stu(1, [10.0, 10.0, 10.0], p_max=30.0, eff=1.0)])
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert [value(sol, cat, "p_stu", "st", t) for t in range(3)] == pytest.approx([0.0, 0.0, 30.0], abs=1e-9)
    assert sol.objective_value == pytest.approx(1500.0, abs=1e-9)


# -- demand -------------------------------------------------------------------------------

def test_single_profile_is_forced():
    s = f.one_bus([10.0], demands=[f.demand("d", 1, [(3.0,)])])
    p, cat = build_dam_program(s)
    sol = solve_milp(p)
    assert value(sol, cat, "u_dp", "d", "basecase") == 1.0


def test_huge_profile_cost_selects_default():
    d = f.demand("d", 1, [(5.0, 10.0), (10.0, 5.0)], costs=[0.0, 1e6])
    p, cat = build_dam_program(f.one_bus([40.0, 50.0], demands=[d]))
    sol = solve_milp(p)
    assert value(sol, cat, "u_dp", "d", "basecase") == 1.0


def idm_for(profile, tol, ramp=f.BIG, min_energy=None, tau=1):
    d = f.demand("d", 1, [profile], tol=tol, ramp=ramp, min_energy=min_energy)
    T = len(profile)
    prices = [30.0] * T
    s = f.one_bus(prices, demands=[d], sessions=[f.session(1, tau, [30.0 + 5 * t for t in range(tau - 1, T)])])
    state = run_dam(s)
    return s, state, build_idm_program(s, 1, state.settled)


def test_tolerance_band_bounds():
    _, _, (p, cat) = idm_for((40.0, 0.0), 0.5)
    lb, ub = p.bounds()
    assert (lb[cat["p_d", "d", 0]], ub[cat["p_d", "d", 0]]) == (20.0, 60.0)
    assert (lb[cat["p_d", "d", 1]], ub[cat["p_d", "d", 1]]) == (0.0, 0.0)


def test_zero_tolerance_fixes_consumption():
    _, _, (p, cat) = idm_for((40.0, 30.0), 0.0)
    lb, ub = p.bounds()
    assert all(lb[cat["p_d", "d", t]] == ub[cat["p_d", "d", t]] for t in range(2))


def test_zero_ramp_forces_flat_consumption():
    _, _, (p, cat) = idm_for((10.0, 10.0, 10.0), 0.5, ramp=0.0, min_energy=15.0)
    sol = solve_milp(p)
    series = [value(sol, cat, "p_d", "d", t) for t in range(3)]
    assert max(series) - min(series) <= 1e-9


def test_ramp_boundary_uses_settled_value():
    s, state, (p, cat) = idm_for((10.0, 12.0, 14.0), 0.5, ramp=3.0, min_energy=20.0, tau=2)
    settled = state.settled.schedule["p_d"]["d"][0]
    r = rows(p)["ramp_up_d_1"]
    assert r.indices == (cat["p_d", "d", 1],) and r.rhs == pytest.approx(3.0 + settled)
    assert rows(p)["ramp_down_d_1"].rhs == pytest.approx(3.0 - settled)


def test_min_energy_row_accounts_for_settled_periods():
    s, state, (p, cat) = idm_for((10.0, 12.0, 14.0), 0.5, min_energy=30.0, tau=2)
    r = rows(p)["min_energy_d"]
    assert r.rhs == pytest.approx(30.0 - 10.0)
    assert len(r.indices) == 2


def test_bundled_min_energy_rhs(bundled):
    state = run_dam(bundled)
    p, _ = build_idm_program(bundled, 1, state.settled)
    assert rows(p)["min_energy_industrial"].rhs == 800.0


# -- objective -------------------------------------------------------------------------------

def test_dam_objective_decomposes(bundled, bundled_dam):
    p, cat = bundled_dam
    sol = solve_milp(p)
    terms = dam_terms(bundled, cat, sol.values)
    assert terms.profit == pytest.approx(sol.objective_value, abs=1e-6)


def test_abs_variable_cost_variant():
    g = f.hydro(p_max=10.0, cv=10.0)
    s = f.one_bus([50.0, 50.0], dres=[g], sessions=[f.session(1, 1, [5.0, 5.0])])
    signed = run_market_day(s)
    opts = FormulationOptions(abs_variable_cost=True)
    absolute = run_market_day(s, opts)
    # IDM price 5 < C^V 10: with signed cost, backing down credits 10 EUR/MWh and buying back costs 5
    assert signed.settled.schedule["p_c"]["g"] == (0.0, 0.0)
    assert signed.stages[1].terms.variable_cost == pytest.approx(-200.0)
    assert signed.stages[1].terms.profit == pytest.approx(100.0)
    # with |dp| the decrease is charged too, so no adjustment pays
    assert absolute.settled.schedule["p_c"]["g"] == (10.0, 10.0)
    assert absolute.stages[1].terms.profit == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_random_stage_objectives_decompose(seed):
    s = f.random_scenario(np.random.default_rng(seed), one_profile=False)
    state = run_market_day(s)
    for stage in state.stages:
        assert stage.terms.profit == pytest.approx(stage.solution.objective_value, abs=1e-6)
        assert max_residual(stage.program, stage.solution.values) <= 1e-6
    if state.stages[1:]:
        st1 = state.stages[1]
        again = idm_terms(s, st1.stage, st1.catalog, st1.solution.values, settle_dam(s, state.stages[0].solution,
                                                                                      state.stages[0].catalog))
        assert again.profit == pytest.approx(st1.solution.objective_value, abs=1e-6)


def test_lp_relaxation_bounds_dam(bundled_dam):
    p, _ = bundled_dam
    assert solve_lp(p).objective_value >= solve_milp(p).objective_value - 1e-6
