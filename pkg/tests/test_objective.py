"""Unit tests for capacity, power dissipation, efficiency, and slacks."""

import numpy as np
import pytest

from swipt_ee import (
    NonPhysicalPowerError,
    PowerAllocation,
    SystemParams,
    constraint_residuals,
    energy_efficiency,
    generate_channel,
    harvested_power,
    sinr_factor,
    sinr_factors,
    subcarrier_capacity,
    system_capacity,
    total_power,
)

PARAMS = SystemParams()
CH = generate_channel(PARAMS, 1)


def test_allocation_validates_c5_c6():
    with pytest.raises(ValueError):
        PowerAllocation(p_w=np.array([-1e-9] * 128), rho=0.5)
    with pytest.raises(ValueError):
        PowerAllocation(p_w=np.zeros(128), rho=1.5)
    alloc = PowerAllocation(p_w=np.zeros(128), rho=1.0)
    with pytest.raises(ValueError):
        alloc.p_w[0] = 1.0


def test_sinr_factor_matches_vector():
    g = sinr_factors(0.3, CH, PARAMS)
    for i in (0, 17, 127):
        assert sinr_factor(0.3, CH, PARAMS, i) == pytest.approx(float(g[i]))


def test_sinr_factor_edges():
    # all received power to the harvester: nothing left for decoding
    assert np.all(sinr_factors(1.0, CH, PARAMS) == 0.0)
    # no splitting: plain SINR against both noise sources
    g0 = sinr_factors(0.0, CH, PARAMS)
    expect = CH.path_gain_lin * CH.h2 / (PARAMS.sigma_za_w + CH.sigma_i_w
                                         + PARAMS.sigma_zs_w)
    assert np.allclose(g0, expect)


def test_subcarrier_capacity_value():
    # 1 + P * Gamma = 2 gives exactly W bits/s
    assert subcarrier_capacity(2.0, 0.5, 7812.5) == pytest.approx(7812.5)
    assert subcarrier_capacity(0.0, 1e13, 7812.5) == 0.0


def test_system_capacity_sums_subcarriers():
    rng = np.random.default_rng(0)
    alloc = PowerAllocation(p_w=rng.uniform(0, 1e-3, 128), rho=0.2)
    g = sinr_factors(alloc.rho, CH, PARAMS)
    manual = sum(subcarrier_capacity(float(alloc.p_w[i]), float(g[i]),
                                     PARAMS.subcarrier_bw_hz) for i in range(128))
    assert system_capacity(alloc, CH, PARAMS) == pytest.approx(manual, rel=1e-12)


def test_harvested_power_components():
    alloc = PowerAllocation(p_w=np.full(128, 1e-3), rho=0.4)
    p_d, p_i = harvested_power(alloc, CH, PARAMS)
    assert p_d == pytest.approx(
        PARAMS.eta * 0.4 * 1e-3 * CH.path_gain_lin * CH.h2.sum())
    assert p_i == pytest.approx(
        PARAMS.eta * 0.4 * np.sum(PARAMS.sigma_za_w + CH.sigma_i_w))
    # harvesting scales linearly in rho
    p_d2, p_i2 = harvested_power(PowerAllocation(alloc.p_w, 0.8), CH, PARAMS)
    assert p_d2 == pytest.approx(2 * p_d)
    assert p_i2 == pytest.approx(2 * p_i)


def test_total_power_and_efficiency():
    alloc = PowerAllocation(p_w=np.full(128, 1e-3), rho=0.2)
    u_tp = total_power(alloc, CH, PARAMS)
    p_d, p_i = harvested_power(alloc, CH, PARAMS)
    assert u_tp == pytest.approx(PARAMS.p_c_w + PARAMS.epsilon * 0.128 - p_d - p_i)
    assert energy_efficiency(alloc, CH, PARAMS) == pytest.approx(
        system_capacity(alloc, CH, PARAMS) / u_tp)


def test_total_power_rejects_nonphysical():
    # huge harvest credit with negligible circuit power drives U_TP negative
    params = PARAMS.with_(p_c_w=1e-12, p_max_req_w=1e6, epsilon=1.0, eta=1.0)
    alloc = PowerAllocation(p_w=np.full(128, 10.0), rho=1.0)
    ch = generate_channel(params.with_(antenna_gain_db=80.0), 1)
    with pytest.raises(NonPhysicalPowerError):
        total_power(alloc, ch, params)
    assert total_power(alloc, ch, params, check=False) < 0.0


def test_constraint_residuals_feasibility():
    # zero power: violates the harvest floor and the rate floor
    zero = PowerAllocation(p_w=np.zeros(128), rho=0.5)
    r = constraint_residuals(zero, CH, PARAMS)
    assert not r.feasible
    assert r.c1_lo < 0 and r.c4 < 0 and r.c2 > 0 and r.c3 > 0

    # over budget
    fat = PowerAllocation(p_w=np.full(128, 1.0), rho=0.5)
    assert constraint_residuals(fat, CH, PARAMS).c2 < 0

    # boundary tolerance: a budget overshoot far below tol * P_max still
    # counts as feasible, but not once the tolerance is turned off
    p_even = PARAMS.p_max_w / 128
    tight = PowerAllocation(p_w=np.full(128, p_even * (1 + 1e-8)), rho=0.3)
    r = constraint_residuals(tight, CH, PARAMS)
    assert r.c2 < 0.0 and r.feasible
    assert not constraint_residuals(tight, CH, PARAMS, tol=0.0).feasible
