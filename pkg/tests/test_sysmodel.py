"""Unit tests for scenario parameters, conversions, and channel generation."""

import numpy as np
import pytest

from swipt_ee import (
    SystemParams,
    dbm_to_watt,
    generate_channel,
    path_loss_gain,
    watt_to_dbm,
)


def test_dbm_watt_round_trip():
    for dbm in (-130.0, -30.0, 0.0, 22.0, 50.0):
        assert watt_to_dbm(dbm_to_watt(dbm)) == pytest.approx(dbm, abs=1e-12)
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert dbm_to_watt(0.0) == pytest.approx(1e-3)


def test_watt_to_dbm_rejects_nonpositive():
    with pytest.raises(ValueError):
        watt_to_dbm(0.0)
    with pytest.raises(ValueError):
        watt_to_dbm(-1.0)


def test_subcarrier_bandwidth_derived():
    p = SystemParams()
    assert p.subcarrier_bw_hz == pytest.approx(1e6 / 128)
    q = p.with_(n_subcarriers=4)
    assert q.subcarrier_bw_hz == pytest.approx(2.5e5)


def test_param_validation():
    with pytest.raises(ValueError):
        SystemParams(eta=1.5)
    with pytest.raises(ValueError):
        SystemParams(epsilon=0.5)
    with pytest.raises(ValueError):
        SystemParams(p_max_req_w=1e-6, p_min_req_w=1e-3)
    with pytest.raises(ValueError):
        SystemParams(n_subcarriers=0)


def test_path_loss_monotone_and_continuous():
    p = SystemParams()
    gains = [path_loss_gain(p.with_(distance_m=d)) for d in (1, 3, 5, 8, 10, 20)]
    assert all(g1 > g2 for g1, g2 in zip(gains, gains[1:]))
    # continuity across the breakpoint
    lo = path_loss_gain(p.with_(distance_m=p.pathloss_breakpoint_m * (1 - 1e-9)))
    hi = path_loss_gain(p.with_(distance_m=p.pathloss_breakpoint_m * (1 + 1e-9)))
    assert lo == pytest.approx(hi, rel=1e-6)


def test_channel_deterministic_and_normalized():
    p = SystemParams(n_subcarriers=4096)
    a = generate_channel(p, 3)
    b = generate_channel(p, 3)
    assert np.array_equal(a.h2, b.h2)
    assert np.array_equal(a.sigma_i_w, b.sigma_i_w)
    c = generate_channel(p, 4)
    assert not np.array_equal(a.h2, c.h2)
    # unit average fading power, by construction of the Rician draw
    assert a.h2.mean() == pytest.approx(1.0, rel=0.05)


def test_interference_scales_with_inr():
    p = SystemParams(n_subcarriers=4096)
    low = generate_channel(p.with_(inr_db=0.0), 5)
    high = generate_channel(p.with_(inr_db=20.0), 5)
    assert high.sigma_i_w.mean() / low.sigma_i_w.mean() == pytest.approx(100.0, rel=0.2)
    assert low.sigma_i_w.mean() == pytest.approx(p.sigma_zs_w, rel=0.1)


def test_channel_arrays_read_only():
    ch = generate_channel(SystemParams(), 0)
    with pytest.raises(ValueError):
        ch.h2[0] = 1.0
