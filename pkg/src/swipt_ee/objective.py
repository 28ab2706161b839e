"""Link-level objective quantities: SINR factors, capacity, power dissipation,
energy efficiency, and constraint slacks C1-C6.

Everything here is a pure function of a power allocation, a channel
realization, and the system parameters.
"""

from dataclasses import dataclass

import numpy as np

from .sysmodel import ChannelRealization, SystemParams

__all__ = [
    "PowerAllocation",
    "ConstraintResiduals",
    "NonPhysicalPowerError",
    "sinr_factor",
    "sinr_factors",
    "subcarrier_capacity",
    "system_capacity",
    "harvested_power",
    "total_power",
    "energy_efficiency",
    "constraint_residuals",
    "residual_scales",
]

LN2 = np.log(2.0)


class NonPhysicalPowerError(ValueError):
    """Total power dissipation came out non-positive; the parameterization is
    outside the regime where the consumption model makes sense."""


@dataclass(frozen=True)
class PowerAllocation:
    """Decision variables: per-subcarrier transmit powers and splitting ratio."""

    p_w: np.ndarray   # transmit power per subcarrier (Watt)
    rho: float        # fraction of received power routed to the harvester

    def __post_init__(self) -> None:
        p = np.asarray(self.p_w, dtype=float)
        object.__setattr__(self, "p_w", p)
        p.setflags(write=False)
        if np.any(p < 0.0):
            raise ValueError("transmit powers must be >= 0 (C5)")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("splitting ratio must lie in [0, 1] (C6)")


@dataclass(frozen=True)
class ConstraintResiduals:
    """Signed slacks of C1-C4; positive means satisfied with margin."""

    c1_lo: float   # P_D + P_I - P_min^req            (Watt)
    c1_hi: float   # P_max^req - P_D - P_I            (Watt)
    c2: float      # P_max - sum P_i                  (Watt)
    c3: float      # P_PG - P_C - eps * sum P_i       (Watt)
    c4: float      # sum C_i - R_min                  (bit/s)
    feasible: bool


def sinr_factors(rho: float, ch: ChannelRealization, params: SystemParams) -> np.ndarray:
    """Per-subcarrier SINR per transmit Watt for splitting ratio rho."""
    num = (1.0 - rho) * ch.path_gain_lin * ch.h2
    den = (1.0 - rho) * (params.sigma_za_w + ch.sigma_i_w) + params.sigma_zs_w
    return num / den


def sinr_factor(rho: float, ch: ChannelRealization, params: SystemParams, i: int) -> float:
    """SINR per transmit Watt on subcarrier i."""
    return float(sinr_factors(rho, ch, params)[i])


def subcarrier_capacity(p_i: float, gamma_i: float, w_hz: float) -> float:
    """Shannon capacity of one subcarrier: W * log2(1 + P * Gamma)."""
    return w_hz * np.log2(1.0 + p_i * gamma_i)


def system_capacity(alloc: PowerAllocation, ch: ChannelRealization,
                    params: SystemParams) -> float:
    """Total delivered rate over all subcarriers (bit/s)."""
    g = sinr_factors(alloc.rho, ch, params)
    return float(params.subcarrier_bw_hz * np.sum(np.log2(1.0 + alloc.p_w * g)))


def harvested_power(alloc: PowerAllocation, ch: ChannelRealization,
                    params: SystemParams) -> tuple[float, float]:
    """Harvested power (P_D from the desired signal, P_I from interference
    and antenna noise), both in Watt."""
    p_d = params.eta * alloc.rho * float(
        np.sum(alloc.p_w * ch.path_gain_lin * ch.h2))
    p_i = params.eta * alloc.rho * float(
        np.sum(params.sigma_za_w + ch.sigma_i_w))
    return p_d, p_i


def total_power(alloc: PowerAllocation, ch: ChannelRealization,
                params: SystemParams, check: bool = True) -> float:
    """Net system power dissipation: circuit power plus amplifier draw minus
    harvesting credits."""
    p_d, p_i = harvested_power(alloc, ch, params)
    u_tp = params.p_c_w + params.epsilon * float(np.sum(alloc.p_w)) - p_d - p_i
    if check and u_tp <= 0.0:
        raise NonPhysicalPowerError(
            f"total power dissipation {u_tp} W <= 0; check circuit power, "
            "harvesting efficiency, and path gain")
    return u_tp


def energy_efficiency(alloc: PowerAllocation, ch: ChannelRealization,
                      params: SystemParams) -> float:
    """Delivered bits per Joule: system capacity over total dissipation."""
    return system_capacity(alloc, ch, params) / total_power(alloc, ch, params)


def residual_scales(params: SystemParams) -> np.ndarray:
    """Magnitude of each constraint, used for relative feasibility tests.

    Order: (c1_lo, c1_hi, c2, c3, c4).
    """
    c1 = max(params.p_min_req_w, params.p_max_req_w)
    c4 = max(params.r_min_bps, params.n_subcarriers * params.subcarrier_bw_hz)
    return np.array([c1, c1, params.p_max_w, params.p_pg_w, c4])


def constraint_residuals(alloc: PowerAllocation, ch: ChannelRealization,
                         params: SystemParams, tol: float = 1e-6) -> ConstraintResiduals:
    """Signed slacks of C1-C4 plus a feasibility verdict.

    A slack counts as satisfied when it is >= -tol times the constraint's
    own magnitude, since subgradient solutions land on boundaries inexactly.
    """
    p_d, p_i = harvested_power(alloc, ch, params)
    harvested = p_d + p_i
    p_sum = float(np.sum(alloc.p_w))
    slacks = np.array([
        harvested - params.p_min_req_w,
        params.p_max_req_w - harvested,
        params.p_max_w - p_sum,
        params.p_pg_w - params.p_c_w - params.epsilon * p_sum,
        system_capacity(alloc, ch, params) - params.r_min_bps,
    ])
    feasible = bool(np.all(slacks >= -tol * residual_scales(params)))
    return ConstraintResiduals(
        c1_lo=float(slacks[0]), c1_hi=float(slacks[1]), c2=float(slacks[2]),
        c3=float(slacks[3]), c4=float(slacks[4]), feasible=feasible)
