"""Unit tests for the fixed-(q, rho) dual solver and the rho-grid machinery."""

import numpy as np
import pytest

from swipt_ee import (
    InnerOptions,
    Multipliers,
    SystemParams,
    generate_channel,
    kkt_check,
    lambda_factor,
    sinr_factors,
    solve_fixed_q_rho,
    update_multipliers,
    waterfill,
)
from swipt_ee.innersolver import RhoGrid, default_p_cap, dual_bound, solve_grid
from swipt_ee.objective import LN2, ConstraintResiduals

PARAMS = SystemParams()
CH = generate_channel(PARAMS, 2)


def test_multipliers_nonnegative():
    with pytest.raises(ValueError):
        Multipliers(alpha=-1.0)
    m = Multipliers(alpha=1.0, beta=2.0, gamma=3.0, lambda_=4.0, theta=5.0)
    assert np.array_equal(m.as_array(), [1.0, 2.0, 3.0, 4.0, 5.0])
    assert Multipliers.from_array(m.as_array()) == m


def test_waterfill_closed_form():
    q, rho = 1e6, 0.25
    mults = Multipliers(beta=5e5)
    p = waterfill(q, rho, mults, CH, PARAMS, InnerOptions())
    g = sinr_factors(rho, CH, PARAMS)
    w = PARAMS.subcarrier_bw_hz
    for i in (0, 40, 127):
        lam = lambda_factor(q, rho, mults, CH, PARAMS, i)
        expect = max(w / (LN2 * lam) - 1.0 / g[i], 0.0)
        assert p[i] == pytest.approx(expect, rel=1e-12)
    assert np.all(p >= 0.0)


def test_waterfill_caps_when_price_vanishes():
    # with q = 0 and no multipliers the subproblem is unbounded; the
    # allocation must fall back on the cap
    p = waterfill(0.0, 0.2, Multipliers(), CH, PARAMS, InnerOptions())
    assert np.all(p == default_p_cap(PARAMS))


def test_update_multipliers_projects():
    opts = InnerOptions(step_c=(1.0, 1.0, 1.0, 1.0, 1.0))
    res = ConstraintResiduals(c1_lo=10.0, c1_hi=-3.0, c2=0.5, c3=2.0,
                              c4=-1.0, feasible=False)
    m0 = Multipliers(alpha=1.0, beta=0.1, gamma=0.0, lambda_=0.0, theta=0.0)
    m1 = update_multipliers(m0, res, m=0, opts=opts)
    assert m1.alpha == 0.0                       # 1 - 10 projected to 0
    assert m1.beta == 0.0                        # 0.1 - 0.5 projected
    assert m1.gamma == pytest.approx(1.0)        # rate slack negative: grows
    assert m1.theta == pytest.approx(3.0)        # harvest over ceiling: grows
    # step shrinks with the iteration counter
    m2 = update_multipliers(m0, res, m=9, opts=opts)
    assert m2.gamma == pytest.approx(0.1)


def test_update_multipliers_requires_steps():
    with pytest.raises(ValueError):
        update_multipliers(Multipliers(), ConstraintResiduals(
            0.0, 0.0, 0.0, 0.0, 0.0, True), 0, InnerOptions())


def test_solve_fixed_q_rho_converges_and_passes_kkt():
    for q, rho in ((0.0, 0.2), (2.5e6, 0.2), (3.0e6, 0.5)):
        sol = solve_fixed_q_rho(q, rho, CH, PARAMS)
        assert sol.converged
        assert sol.residuals.feasible
        report = kkt_check(sol, q, rho, CH, PARAMS)
        assert report.max_violation < 1e-4


def test_grid_matches_scalar_api():
    grid = RhoGrid(CH, PARAMS, np.array([0.1, 0.2, 0.3]), InnerOptions())
    res = solve_grid(2.0e6, grid)
    for j, rho in enumerate((0.1, 0.2, 0.3)):
        sol = solve_fixed_q_rho(2.0e6, rho, CH, PARAMS)
        assert res.objective[j] == pytest.approx(sol.objective, rel=1e-9)


def test_prescreen_rejects_hopeless_columns():
    # a tiny budget cannot reach the harvest floor anywhere
    params = PARAMS.with_(p_max_w=1e-6)
    grid = RhoGrid(generate_channel(params, 2), params,
                   np.linspace(0, 1, 101), InnerOptions())
    assert not grid.prescreen_ok.any()
    # rho = 1 never carries information, so the rate floor kills it
    grid2 = RhoGrid(CH, PARAMS, np.linspace(0, 1, 101), InnerOptions())
    assert not grid2.prescreen_ok[-1]
    assert grid2.prescreen_ok[20]


def test_dual_bound_dominates_primal():
    grid = RhoGrid(CH, PARAMS, np.linspace(0, 1, 101), InnerOptions())
    for q in (0.0, 1.5e6, 3.0e6):
        res = solve_grid(q, grid)
        bound = dual_bound(q, grid, res.mult)
        feas = res.usable
        # weak duality: the bound sits above every achieved objective
        assert np.all(bound[feas] >= res.objective[feas] - 1e-6 * np.abs(res.objective[feas]) - 1e-3)


def test_stalled_columns_still_feasible():
    # 14 dBm budget puts every rho column on a thin feasibility sliver;
    # the bisection rescue must still deliver feasible, converged columns
    params = PARAMS.with_(p_max_w=10 ** ((14 - 30) / 10))
    ch = generate_channel(params, 2)
    grid = RhoGrid(ch, params, np.linspace(0, 1, 101), InnerOptions())
    res = solve_grid(0.0, grid)
    assert res.feasible.any()
    ok = res.usable
    assert np.all(res.converged[ok])
    assert np.all(res.psum[ok] <= params.p_max_w * (1 + 1e-9))
    assert np.all(res.harvest[ok] >= params.p_min_req_w * (1 - 1e-6))


def test_rescued_columns_pass_kkt():
    from swipt_ee.innersolver import column_solution

    params = PARAMS.with_(p_max_w=10 ** ((14 - 30) / 10))
    ch = generate_channel(params, 2)
    grid = RhoGrid(ch, params, np.linspace(0, 1, 101), InnerOptions())
    res = solve_grid(0.0, grid)
    for j in np.flatnonzero(res.usable)[::7]:
        sol = column_solution(res, int(j), params)
        report = kkt_check(sol, 0.0, float(res.rhos[j]), ch, params)
        assert report.max_violation < 1e-4
