"""Monte-Carlo experiment engine: seeded trial loops, sweeps over the
transmit-power and interference axes, convergence traces, and the
exhaustive-grid oracle used by the verification tests.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dinkelbach import (
    InfeasibleProblemError,
    OuterOptions,
    SolveResult,
    baseline_capacity_solve,
    dinkelbach_solve,
)
from .innersolver import default_p_cap
from .objective import LN2, PowerAllocation, residual_scales
from .sysmodel import ChannelRealization, SystemParams, generate_channel, watt_to_dbm

__all__ = [
    "SweepConfig",
    "SweepRow",
    "run_trials",
    "sweep",
    "convergence_trace",
    "brute_force_solve",
    "resolve_workers",
]

_WORKERS_ENV = "SWIPT_EE_WORKERS"

SCHEMES = ("proposed", "baseline")


@dataclass(frozen=True)
class SweepConfig:
    params: SystemParams
    p_max_dbm_grid: tuple[float, ...]
    inr_db_list: tuple[float, ...]
    n_trials: int = 1000
    base_seed: int = 0
    scheme: str = "both"                    # proposed | baseline | both
    outer: OuterOptions = field(default_factory=OuterOptions)

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if not self.p_max_dbm_grid or not self.inr_db_list:
            raise ValueError("sweep grids must be non-empty")
        if self.scheme not in ("proposed", "baseline", "both"):
            raise ValueError("scheme must be proposed, baseline, or both")

    def schemes(self) -> tuple[str, ...]:
        return SCHEMES if self.scheme == "both" else (self.scheme,)


@dataclass(frozen=True)
class SweepRow:
    p_max_dbm: float
    inr_db: float
    scheme: str
    avg_ee_bit_per_joule: float    # zeros included for infeasible trials
    avg_capacity_bps: float        # zeros included for infeasible trials
    avg_harvested_dbm: float       # mean Watt over all trials, then dBm
    avg_rho: float                 # feasible trials only (NaN if none)
    feasibility_rate: float
    n_trials: int


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(_WORKERS_ENV)
    return max(1, int(env)) if env else 1


def _solve_scheme(ch: ChannelRealization, params: SystemParams, scheme: str,
                  opts: OuterOptions) -> SolveResult:
    if scheme == "proposed":
        return dinkelbach_solve(ch, params, opts)
    return baseline_capacity_solve(ch, params, opts)


def _trial_worker(args) -> tuple[float, float, float, float, bool]:
    params, seed, scheme, opts = args
    ch = generate_channel(params, seed)
    r = _solve_scheme(ch, params, scheme, opts)
    if not r.feasible:
        return 0.0, 0.0, 0.0, np.nan, False
    return r.q_star, r.capacity_bps, r.harvested_w, r.alloc.rho, True


def _map_jobs(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    chunk = max(1, len(jobs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


def _point_params(params: SystemParams, p_max_dbm: float, inr_db: float) -> SystemParams:
    return params.with_(p_max_w=10.0 ** ((p_max_dbm - 30.0) / 10.0), inr_db=inr_db)


def run_trials(cfg: SweepConfig, point: tuple[float, float, str],
               workers: int | None = None) -> SweepRow:
    """Average one (P_max, INR, scheme) grid point over seeded fading trials.

    Trial t uses seed base_seed + t; infeasible trials count as zero
    efficiency and capacity, and are excluded from the rho average.
    """
    p_max_dbm, inr_db, scheme = point
    params = _point_params(cfg.params, p_max_dbm, inr_db)
    jobs = [(params, cfg.base_seed + t, scheme, cfg.outer)
            for t in range(cfg.n_trials)]
    rows = _map_jobs(_trial_worker, jobs, resolve_workers(workers))

    ee = np.array([r[0] for r in rows])
    cap = np.array([r[1] for r in rows])
    harvested = np.array([r[2] for r in rows])
    rho = np.array([r[3] for r in rows])
    feas = np.array([r[4] for r in rows])

    mean_harvest_w = float(harvested.mean())
    return SweepRow(
        p_max_dbm=p_max_dbm,
        inr_db=inr_db,
        scheme=scheme,
        avg_ee_bit_per_joule=float(ee.mean()),
        avg_capacity_bps=float(cap.mean()),
        avg_harvested_dbm=(watt_to_dbm(mean_harvest_w)
                           if mean_harvest_w > 0.0 else float("-inf")),
        avg_rho=float(np.nanmean(rho)) if feas.any() else float("nan"),
        feasibility_rate=float(feas.mean()),
        n_trials=cfg.n_trials,
    )


def sweep(cfg: SweepConfig, workers: int | None = None) -> list[SweepRow]:
    """Cross product of P_max grid x INR list x schemes, one SweepRow each."""
    return [
        run_trials(cfg, (p, inr, scheme), workers=workers)
        for p in cfg.p_max_dbm_grid
        for inr in cfg.inr_db_list
        for scheme in cfg.schemes()
    ]


def _trace_worker(args) -> np.ndarray:
    params, seed, opts, l_max = args
    ch = generate_channel(params, seed)
    r = dinkelbach_solve(ch, params, opts)
    out = np.zeros(l_max)
    if r.feasible and r.outer_trace:
        k = min(len(r.outer_trace), l_max)
        out[:k] = r.outer_trace[:k]
        out[k:] = r.outer_trace[k - 1]       # carry forward after convergence
    return out


def convergence_trace(params: SystemParams, inr_db: float, p_max_dbm: float,
                      n_trials: int, seed: int,
                      opts: OuterOptions | None = None,
                      workers: int | None = None) -> np.ndarray:
    """Trial-averaged energy efficiency after each outer iteration."""
    opts = opts if opts is not None else OuterOptions()
    point = _point_params(params, p_max_dbm, inr_db)
    jobs = [(point, seed + t, opts, opts.l_max) for t in range(n_trials)]
    traces = _map_jobs(_trace_worker, jobs, resolve_workers(workers))
    return np.mean(traces, axis=0)


# ---------------------------------------------------------------------------
# Exhaustive-grid oracle
# ---------------------------------------------------------------------------

def _eval_rho(ch: ChannelRealization, params: SystemParams, rho: float):
    one_minus = 1.0 - rho
    num = one_minus * ch.path_gain_lin * ch.h2
    den = one_minus * (params.sigma_za_w + ch.sigma_i_w) + params.sigma_zs_w
    gamma = num / den
    a = params.eta * rho * ch.path_gain_lin * ch.h2
    p_i_const = params.eta * rho * float(np.sum(params.sigma_za_w + ch.sigma_i_w))
    return gamma, a, p_i_const


def _best_on_box(pgrid_axes, gamma, a, p_i_const, params, tol_slack):
    """Evaluate U_eff on the cartesian product of the per-carrier axes and
    return (best index tuple -> powers, best value) among feasible points."""
    n = len(pgrid_axes)
    mesh = np.meshgrid(*pgrid_axes, indexing="ij")
    p = np.stack([m.ravel() for m in mesh], axis=1)       # (G, n)
    w = params.subcarrier_bw_hz
    rate = w * np.log1p(p * gamma[None, :]).sum(axis=1) / LN2
    psum = p.sum(axis=1)
    harvest = p @ a + p_i_const
    utp = params.p_c_w + params.epsilon * psum - harvest
    feasible = (
        (harvest >= params.p_min_req_w - tol_slack[0])
        & (harvest <= params.p_max_req_w + tol_slack[1])
        & (psum <= params.p_max_w + tol_slack[2])
        & (params.epsilon * psum <= params.p_pg_w - params.p_c_w + tol_slack[3])
        & (rate >= params.r_min_bps - tol_slack[4])
        & (utp > 0.0)
    )
    if not feasible.any():
        return None, -np.inf
    ueff = np.where(feasible, rate / utp, -np.inf)
    k = int(np.argmax(ueff))
    return p[k], float(ueff[k])


def brute_force_solve(ch: ChannelRealization, params: SystemParams,
                      grid_steps: int = 15, rho_grid_m: int | None = None,
                      refine_rounds: int = 4) -> tuple[PowerAllocation, float]:
    """Exhaustive-grid maximizer of U_eff over the powers and the rho grid.

    Intended as an independent oracle for few-subcarrier instances (the
    grid grows as grid_steps**n_F). Each refinement round re-grids a
    shrinking box around the incumbent, which is safe because U_eff is
    unimodal in the powers for fixed rho. Raises InfeasibleProblemError
    when no grid point satisfies C1-C6.
    """
    n = params.n_subcarriers
    if n > 4:
        raise ValueError("oracle cost grows as grid_steps**n_F; use n_F <= 4")
    m = rho_grid_m if rho_grid_m is not None else params.rho_grid_m
    rhos = np.linspace(0.0, 1.0, m + 1)
    p_cap = default_p_cap(params)
    scales = residual_scales(params)
    tol_slack = 1e-9 * scales[[0, 1, 2, 3, 4]]

    best_val = -np.inf
    best_p = None
    best_rho = None
    for rho in rhos:
        gamma, a, p_i_const = _eval_rho(ch, params, rho)
        lo = np.zeros(n)
        hi = np.full(n, p_cap)
        incumbent = None
        for _ in range(refine_rounds):
            axes = [np.linspace(lo[i], hi[i], grid_steps) for i in range(n)]
            p, val = _best_on_box(axes, gamma, a, p_i_const, params, tol_slack)
            if p is None:
                break
            incumbent = (p, val)
            span = (hi - lo) / (grid_steps - 1)
            lo = np.clip(p - 1.5 * span, 0.0, p_cap)
            hi = np.clip(p + 1.5 * span, 0.0, p_cap)
        if incumbent is not None and incumbent[1] > best_val:
            best_p, best_val = incumbent
            best_rho = rho

    if best_p is None:
        raise InfeasibleProblemError("no feasible point on the oracle grid")
    return PowerAllocation(p_w=best_p, rho=float(best_rho)), best_val
