"""Scenario parameters, unit conversions, path loss, and fading generation.

All powers are kept in Watt internally; dBm appears only at I/O boundaries.
"""

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "SystemParams",
    "ChannelRealization",
    "dbm_to_watt",
    "watt_to_dbm",
    "path_loss_gain",
    "generate_channel",
]

_SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(x_dbm: float) -> float:
    """Convert dBm to Watt."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(x_w: float) -> float:
    """Convert Watt to dBm. Raises on non-positive input."""
    if x_w <= 0.0:
        raise ValueError(f"cannot express non-positive power {x_w} W in dBm")
    return 10.0 * np.log10(x_w) + 30.0


@dataclass(frozen=True)
class SystemParams:
    """All scenario constants of the OFDM link with a power-splitting receiver.

    Defaults follow the indoor 470 MHz scenario: 1 MHz total bandwidth over
    128 subcarriers, -128 dBm antenna noise and -125 dBm signal processing
    noise per subcarrier, 40 dBm circuit power, amplifier inefficiency
    1/0.38, harvesting efficiency 0.8, and a 10 Mbit/s rate requirement.
    """

    bandwidth_hz: float = 1e6
    n_subcarriers: int = 128
    subcarrier_bw_hz: float = field(default=0.0)  # derived when left at 0
    sigma_za_w: float = dbm_to_watt(-128.0)
    sigma_zs_w: float = dbm_to_watt(-125.0)
    inr_db: float = 10.0
    p_c_w: float = dbm_to_watt(40.0)
    epsilon: float = 1.0 / 0.38
    eta: float = 0.8
    p_max_w: float = dbm_to_watt(22.0)
    p_pg_w: float = dbm_to_watt(50.0)
    p_min_req_w: float = dbm_to_watt(0.0)
    p_max_req_w: float = dbm_to_watt(20.0)
    r_min_bps: float = 1e7
    carrier_hz: float = 470e6
    distance_m: float = 10.0
    antenna_gain_db: float = 40.0  # combined Tx+Rx directional gains
    shadowing_lin: float = 1.0
    rician_k_db: float = 6.0
    rho_grid_m: int = 100
    # Log-distance path loss: free-space style slope up to the breakpoint,
    # steeper slope beyond it.
    pathloss_breakpoint_m: float = 5.0
    pathloss_exp_near: float = 2.0
    pathloss_exp_far: float = 4.5

    def __post_init__(self) -> None:
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if self.subcarrier_bw_hz == 0.0:
            object.__setattr__(
                self, "subcarrier_bw_hz", self.bandwidth_hz / self.n_subcarriers
            )
        if self.subcarrier_bw_hz * self.n_subcarriers != self.bandwidth_hz:
            raise ValueError("subcarrier_bw_hz * n_subcarriers must equal bandwidth_hz")
        if self.epsilon < 1.0:
            raise ValueError("amplifier inefficiency epsilon must be >= 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("harvesting efficiency eta must lie in [0, 1]")
        for name in ("bandwidth_hz", "sigma_za_w", "sigma_zs_w", "p_c_w",
                     "p_max_w", "p_pg_w", "p_max_req_w", "carrier_hz",
                     "distance_m", "shadowing_lin"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.p_min_req_w < 0.0:
            raise ValueError("p_min_req_w must be >= 0")
        if self.p_max_req_w < self.p_min_req_w:
            raise ValueError("p_max_req_w must be >= p_min_req_w")
        if self.r_min_bps < 0.0:
            raise ValueError("r_min_bps must be >= 0")
        if self.rho_grid_m < 1:
            raise ValueError("rho_grid_m must be >= 1")

    def with_(self, **changes) -> "SystemParams":
        """Return a copy with the given fields replaced."""
        if "bandwidth_hz" in changes or "n_subcarriers" in changes:
            changes.setdefault("subcarrier_bw_hz", 0.0)
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelRealization:
    """One multipath fading draw: per-subcarrier power gains and interference."""

    path_gain_lin: float          # composite l * g * antenna gains (linear)
    h2: np.ndarray                # |H_i|^2, unit average power
    sigma_i_w: np.ndarray         # interference variance per subcarrier (Watt)
    seed: int

    def __post_init__(self) -> None:
        self.h2.setflags(write=False)
        self.sigma_i_w.setflags(write=False)
        if self.path_gain_lin <= 0.0:
            raise ValueError("path_gain_lin must be > 0")
        if np.any(self.h2 < 0.0) or np.any(self.sigma_i_w < 0.0):
            raise ValueError("channel gains and interference variances must be >= 0")


def path_loss_gain(params: SystemParams) -> float:
    """Linear path loss gain l (<= 1) at the configured distance.

    Log-distance model: exponent `pathloss_exp_near` referenced to the
    1 m free-space loss up to the breakpoint, `pathloss_exp_far` beyond.
    """
    d = params.distance_m
    d_bp = params.pathloss_breakpoint_m
    wavelength = _SPEED_OF_LIGHT / params.carrier_hz
    # free-space loss at 1 m reference
    loss_db = 20.0 * np.log10(4.0 * np.pi / wavelength)
    near = min(d, d_bp)
    loss_db += 10.0 * params.pathloss_exp_near * np.log10(near)
    if d > d_bp:
        loss_db += 10.0 * params.pathloss_exp_far * np.log10(d / d_bp)
    return float(10.0 ** (-loss_db / 10.0))


def generate_channel(params: SystemParams, seed: int) -> ChannelRealization:
    """Draw one channel realization; bit-identical for identical (params, seed).

    |H_i|^2 is Rician with a fixed zero-phase LOS component normalized to
    unit average power; interference powers are exponential (Rayleigh
    envelope squared) with mean set by the INR.
    """
    rng = np.random.default_rng(seed)
    n = params.n_subcarriers
    k_lin = 10.0 ** (params.rician_k_db / 10.0)
    los = np.sqrt(k_lin / (k_lin + 1.0))
    scatter_std = np.sqrt(1.0 / (2.0 * (k_lin + 1.0)))
    re = los + scatter_std * rng.standard_normal(n)
    im = scatter_std * rng.standard_normal(n)
    h2 = re * re + im * im

    inr_lin = 10.0 ** (params.inr_db / 10.0) if np.isfinite(params.inr_db) else 0.0
    mean_sigma_i = inr_lin * params.sigma_zs_w
    if mean_sigma_i > 0.0:
        sigma_i = rng.exponential(mean_sigma_i, size=n)
    else:
        sigma_i = np.zeros(n)

    gain = (path_loss_gain(params)
            * params.shadowing_lin
            * 10.0 ** (params.antenna_gain_db / 10.0))
    return ChannelRealization(path_gain_lin=gain, h2=h2, sigma_i_w=sigma_i, seed=seed)
