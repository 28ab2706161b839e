"""Unit tests for the outer fractional-programming loop and the baseline."""

import numpy as np
import pytest

from swipt_ee import (
    InfeasibleProblemError,
    OuterOptions,
    SystemParams,
    baseline_capacity_solve,
    dinkelbach_solve,
    energy_efficiency,
    feasibility_check,
    generate_channel,
    solve_inner_over_rho,
    system_capacity,
    total_power,
)

PARAMS = SystemParams()
CH = generate_channel(PARAMS, 5)


def test_outer_trace_monotone_and_fixed_point():
    r = dinkelbach_solve(CH, PARAMS)
    assert r.feasible
    trace = np.asarray(r.outer_trace)
    assert np.all(np.diff(trace) >= -1e-12 * trace[:-1])
    assert trace[-1] == pytest.approx(r.q_star)
    # fixed point: U - q* U_TP vanishes relative to U
    assert abs(r.capacity_bps - r.q_star * r.u_tp_w) < 1e-4 * r.capacity_bps


def test_result_consistent_with_objective_functions():
    r = dinkelbach_solve(CH, PARAMS)
    assert system_capacity(r.alloc, CH, PARAMS) == pytest.approx(
        r.capacity_bps, rel=1e-9)
    assert total_power(r.alloc, CH, PARAMS) == pytest.approx(r.u_tp_w, rel=1e-9)
    assert energy_efficiency(r.alloc, CH, PARAMS) == pytest.approx(
        r.q_star, rel=1e-9)


def test_proposed_at_least_baseline_efficiency():
    for seed in range(5):
        ch = generate_channel(PARAMS, seed)
        rp = dinkelbach_solve(ch, PARAMS)
        rb = baseline_capacity_solve(ch, PARAMS)
        assert rp.q_star >= rb.q_star * (1 - 1e-9)
        assert rb.capacity_bps >= rp.capacity_bps * (1 - 1e-9)


def test_baseline_is_q_zero_solution():
    rb = baseline_capacity_solve(CH, PARAMS)
    sol, rho = solve_inner_over_rho(0.0, CH, PARAMS)
    assert rb.capacity_bps == pytest.approx(sol.objective, rel=1e-9)
    assert rb.alloc.rho == rho


def test_nesting_orders_agree():
    opts_a = OuterOptions(rho_grid_m=20, nesting="rho_in_q")
    opts_b = OuterOptions(rho_grid_m=20, nesting="q_in_rho")
    ra = dinkelbach_solve(CH, PARAMS, opts_a)
    rb = dinkelbach_solve(CH, PARAMS, opts_b)
    assert ra.feasible and rb.feasible
    assert ra.q_star == pytest.approx(rb.q_star, rel=2e-3)


def test_infeasible_reported_not_raised():
    params = PARAMS.with_(p_max_w=1e-6)
    ch = generate_channel(params, 5)
    r = dinkelbach_solve(ch, params)
    assert not r.feasible
    assert r.q_star == 0.0 and r.capacity_bps == 0.0
    assert np.all(np.isnan(r.rho_trace))
    assert not feasibility_check(ch, params)
    with pytest.raises(InfeasibleProblemError):
        solve_inner_over_rho(0.0, ch, params)


def test_rho_trace_marks_usable_columns():
    r = baseline_capacity_solve(CH, PARAMS)
    finite = np.isfinite(r.rho_trace)
    assert finite.any()
    # the chosen rho is the argmax of the final trace
    j = int(np.nanargmax(r.rho_trace))
    assert r.alloc.rho == pytest.approx(j / PARAMS.rho_grid_m)


def test_outer_options_validation():
    with pytest.raises(ValueError):
        OuterOptions(l_max=0)
    with pytest.raises(ValueError):
        OuterOptions(eps=0.0)
    with pytest.raises(ValueError):
        OuterOptions(nesting="sideways")
