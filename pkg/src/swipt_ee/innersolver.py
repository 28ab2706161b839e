"""Inner solver for fixed (q, rho): per-subcarrier water-filling coordinated
by projected-gradient updates of the five dual multipliers.

The workhorse is a grid solver that treats every rho value as an independent
column and iterates all of them simultaneously; the scalar API wraps a
one-column grid.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import iterate_columns, rescue_columns
from .objective import LN2, ConstraintResiduals, PowerAllocation, residual_scales, sinr_factors
from .sysmodel import ChannelRealization, SystemParams

__all__ = [
    "Multipliers",
    "InnerOptions",
    "InnerSolution",
    "KKTReport",
    "lambda_factor",
    "waterfill",
    "update_multipliers",
    "solve_fixed_q_rho",
    "kkt_check",
    "RhoGrid",
    "GridSolveResult",
    "solve_grid",
    "dual_bound",
    "default_p_cap",
]

# multiplier array column order
_ALPHA, _BETA, _GAMMA, _LAMBDA, _THETA = range(5)


@dataclass(frozen=True)
class Multipliers:
    """Dual variables: alpha/theta for the harvest window C1, beta for the
    transmit mask C2, gamma for the rate floor C4, lambda_ for the grid cap C3."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    lambda_: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma, self.lambda_, self.theta) < 0.0:
            raise ValueError("multipliers must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.lambda_, self.theta])

    @staticmethod
    def from_array(arr: np.ndarray) -> "Multipliers":
        a, b, g, l, t = (float(x) for x in arr)
        return Multipliers(alpha=a, beta=b, gamma=g, lambda_=l, theta=t)


@dataclass(frozen=True)
class InnerOptions:
    """Knobs of the two-layer dual solver.

    step_c holds the five step constants c_u of the diminishing schedule
    xi_u(m) = c_u / (1 + m); when None they are derived from the instance
    (approximate inverse curvature of the dual, times step_gain).
    """

    max_iters: int = 5000
    step_c: tuple[float, float, float, float, float] | None = None
    step_gain: float = 4.0
    tol_residual: float = 1e-6
    tol_dual: float = 1e-7
    p_cap_w: float | None = None
    # Near-degenerate columns (two constraints binding at a knife edge)
    # oscillate instead of converging; after stall_iters they are handed to
    # the active-set bisection rescue, which is exact where the gradient
    # loop zigzags.
    stall_iters: int = 100

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_c is not None and min(self.step_c) <= 0.0:
            raise ValueError("step constants must be positive")
        if self.step_gain <= 0.0:
            raise ValueError("step_gain must be positive")
        if self.stall_iters < 1:
            raise ValueError("stall_iters must be >= 1")


@dataclass(frozen=True)
class InnerSolution:
    alloc: PowerAllocation
    mults: Multipliers
    objective: float          # U - q * U_TP at the returned allocation
    iterations: int
    converged: bool
    residuals: ConstraintResiduals


@dataclass(frozen=True)
class KKTReport:
    stationarity_rel: float       # max relative gradient error over P_i > 0
    boundary_rel: float           # max positive-gradient excess over P_i = 0
    comp_slackness_rel: float     # max normalized |mu_u * slack_u|
    primal_feasible: bool
    dual_feasible: bool

    @property
    def max_violation(self) -> float:
        v = max(self.stationarity_rel, self.boundary_rel, self.comp_slackness_rel)
        if not (self.primal_feasible and self.dual_feasible):
            return float("inf")
        return v


def default_p_cap(params: SystemParams) -> float:
    """Largest per-subcarrier power any feasible allocation could carry."""
    return min(params.p_max_w, (params.p_pg_w - params.p_c_w) / params.epsilon)


def lambda_factor(q: float, rho: float, mults: Multipliers,
                  ch: ChannelRealization, params: SystemParams, i: int) -> float:
    """Denominator of the water level on subcarrier i."""
    a_i = params.eta * rho * ch.path_gain_lin * ch.h2[i]
    return (q * (params.epsilon - a_i) + mults.lambda_ * params.epsilon
            + mults.beta + (mults.theta - mults.alpha) * a_i)


def waterfill(q: float, rho: float, mults: Multipliers, ch: ChannelRealization,
              params: SystemParams, opts: InnerOptions) -> np.ndarray:
    """Closed-form Layer-1 maximizer of the Lagrangian over the powers.

    P_i = [W(1+gamma) / (ln2 * Lambda_i) - 1/Gamma_i]^+ when Lambda_i > 0;
    capped at opts.p_cap_w when Lambda_i <= 0 (the subproblem is unbounded
    there, and the cap forces the master problem to push back).
    """
    a = params.eta * rho * ch.path_gain_lin * ch.h2
    lam = (q * (params.epsilon - a) + mults.lambda_ * params.epsilon
           + mults.beta + (mults.theta - mults.alpha) * a)
    g = sinr_factors(rho, ch, params)
    p_cap = opts.p_cap_w if opts.p_cap_w is not None else default_p_cap(params)
    with np.errstate(divide="ignore", invalid="ignore"):
        level = params.subcarrier_bw_hz * (1.0 + mults.gamma) / (LN2 * lam)
        p = np.maximum(level - 1.0 / g, 0.0)
    p = np.where(lam > 0.0, np.nan_to_num(p, nan=0.0, posinf=0.0), p_cap)
    return p


def update_multipliers(mults: Multipliers, residuals: ConstraintResiduals,
                       m: int, opts: InnerOptions) -> Multipliers:
    """One projected-gradient step on the dual with step xi_u(m) = c_u/(1+m).

    Each multiplier moves against its own constraint slack and is projected
    back onto the non-negative orthant.
    """
    if opts.step_c is None:
        raise ValueError("update_multipliers needs resolved step constants")
    c = np.asarray(opts.step_c)
    slacks = np.array([residuals.c1_lo, residuals.c2, residuals.c4,
                       residuals.c3, residuals.c1_hi])
    new = np.maximum(mults.as_array() - c / (1.0 + m) * slacks, 0.0)
    return Multipliers.from_array(new)


# ---------------------------------------------------------------------------
# Vectorized grid solver
# ---------------------------------------------------------------------------

class RhoGrid:
    """q-independent per-rho precomputation shared across outer iterations."""

    def __init__(self, ch: ChannelRealization, params: SystemParams,
                 rhos: np.ndarray, opts: InnerOptions):
        rhos = np.asarray(rhos, dtype=float)
        n = params.n_subcarriers
        w = params.subcarrier_bw_hz
        self.rhos = rhos
        self.params = params
        self.ch = ch
        self.opts = opts
        self.p_cap = opts.p_cap_w if opts.p_cap_w is not None else default_p_cap(params)
        self.p_ref = default_p_cap(params)

        one_minus = (1.0 - rhos)[:, None]
        num = one_minus * (ch.path_gain_lin * ch.h2)[None, :]
        den = one_minus * (params.sigma_za_w + ch.sigma_i_w)[None, :] + params.sigma_zs_w
        self.gamma_f = num / den                      # (R, n) SINR per Watt
        with np.errstate(divide="ignore"):
            self.inv_gamma = np.where(self.gamma_f > 0.0, 1.0 / self.gamma_f, np.inf)
        self.a = (params.eta * ch.path_gain_lin) * rhos[:, None] * ch.h2[None, :]
        self.p_i_const = (params.eta * float(np.sum(params.sigma_za_w + ch.sigma_i_w))) * rhos

        # feasibility pre-screen: cheap necessary conditions per column
        scales = residual_scales(params)
        with np.errstate(over="ignore"):
            rate_ub = w * np.sum(np.log2(1.0 + self.p_ref * self.gamma_f), axis=1)
        harvest_ub = self.p_i_const + self.a.max(axis=1) * self.p_ref
        tol = opts.tol_residual
        self.prescreen_ok = (
            (rate_ub >= params.r_min_bps - tol * scales[4])
            & (harvest_ub >= params.p_min_req_w - tol * scales[0])
            & (self.p_i_const <= params.p_max_req_w + tol * scales[1])
            & (self.p_ref > 0.0)
        )

        # step constants from approximate dual curvature
        finite = np.isfinite(self.inv_gamma)
        n_eff = np.maximum(finite.sum(axis=1), 1)
        inv_sum = np.where(finite, self.inv_gamma, 0.0).sum(axis=1)
        self.level0 = (self.p_ref + inv_sum) / n_eff          # typical water level
        k = opts.step_gain
        c_beta = k * w / (LN2 * n_eff * self.level0 ** 2)
        abar = np.maximum(self.a.mean(axis=1), 1e-30)
        c_alpha = np.minimum(c_beta / abar ** 2, 1e280)
        c_gamma = k * LN2 / (n_eff * w)
        c_lambda = c_beta / params.epsilon ** 2
        if opts.step_c is not None:
            self.step_c = np.tile(np.asarray(opts.step_c), (rhos.size, 1))
        else:
            self.step_c = np.column_stack([c_alpha, c_beta, c_gamma, c_lambda, c_alpha])

        lam_scale = w / (LN2 * self.level0)
        self.mult_scale = np.column_stack([
            lam_scale / abar, lam_scale, np.ones_like(lam_scale),
            lam_scale / params.epsilon, lam_scale / abar,
        ])
        # slack scales in multiplier column order (alpha, beta, gamma, lambda, theta)
        self.slack_scale = scales[[0, 2, 4, 3, 1]]

    def beta_init(self, q: float) -> np.ndarray:
        """Analytic warm start for beta: places the initial water level near
        the full-budget level so the first iterates are bounded."""
        w = self.params.subcarrier_bw_hz
        eps_eff = self.params.epsilon - self.a.mean(axis=1)
        return np.maximum(w / (LN2 * self.level0) - q * eps_eff, 0.0)


@dataclass
class GridSolveResult:
    """Per-rho-column outcome of one inner grid solve."""

    rhos: np.ndarray
    p: np.ndarray            # (R, n_F)
    mult: np.ndarray         # (R, 5)
    rate: np.ndarray         # U per column (bit/s)
    psum: np.ndarray
    harvest: np.ndarray      # P_D + P_I
    utp: np.ndarray
    objective: np.ndarray    # U - q * U_TP
    feasible: np.ndarray     # residuals within tolerance
    converged: np.ndarray
    iterations: np.ndarray
    prescreen_ok: np.ndarray

    @property
    def usable(self) -> np.ndarray:
        return self.prescreen_ok & self.feasible & (self.utp > 0.0)


def solve_grid(q: float, grid: RhoGrid, opts: InnerOptions | None = None,
               warm_mult: np.ndarray | None = None,
               col_mask: np.ndarray | None = None) -> GridSolveResult:
    """Run the two-layer dual solver on every pre-screened rho column.

    Columns are frozen the moment they converge (feasible residuals, tiny
    complementary slackness, and dual movement below tolerance), so the
    scalar and grid paths produce identical results. col_mask restricts the
    solve to a subset of columns; skipped columns come back infeasible.
    """
    opts = opts if opts is not None else grid.opts
    params = grid.params
    n_rho = grid.rhos.size
    n = params.n_subcarriers

    out_p = np.zeros((n_rho, n))
    out_mult = np.zeros((n_rho, 5))
    out_rate = np.zeros(n_rho)
    out_psum = np.zeros(n_rho)
    out_harvest = np.zeros(n_rho)
    out_iters = np.zeros(n_rho, dtype=int)
    out_conv = np.zeros(n_rho, dtype=bool)
    out_feas = np.zeros(n_rho, dtype=bool)

    active_mask = grid.prescreen_ok if col_mask is None \
        else grid.prescreen_ok & col_mask
    active = np.flatnonzero(active_mask)
    if active.size:
        na = active.size
        mult = np.zeros((na, 5))
        if warm_mult is not None:
            mult[:] = warm_mult[active]
        else:
            mult[:, _BETA] = grid.beta_init(q)[active]

        k_p = np.zeros((na, n))
        k_mult = np.zeros((na, 5))
        k_rate = np.zeros(na)
        k_psum = np.zeros(na)
        k_harvest = np.zeros(na)
        k_iters = np.zeros(na, dtype=np.int64)
        k_conv = np.zeros(na, dtype=np.bool_)
        k_feas = np.zeros(na, dtype=np.bool_)

        iterate_columns(
            float(q),
            np.ascontiguousarray(grid.gamma_f[active]),
            np.ascontiguousarray(grid.inv_gamma[active]),
            np.ascontiguousarray(grid.a[active]),
            np.ascontiguousarray(grid.p_i_const[active]),
            np.ascontiguousarray(grid.step_c[active]),
            np.ascontiguousarray(grid.mult_scale[active]),
            mult,
            params.subcarrier_bw_hz, params.epsilon, params.p_c_w,
            params.p_pg_w - params.p_c_w, params.p_max_w,
            params.p_min_req_w, params.p_max_req_w, params.r_min_bps,
            grid.p_cap,
            opts.tol_residual * grid.slack_scale,
            10.0 * opts.tol_residual,
            opts.tol_dual,
            grid.slack_scale,
            min(opts.max_iters, opts.stall_iters),
            k_p, k_mult, k_rate, k_psum, k_harvest, k_iters, k_conv, k_feas)

        stalled = ~k_conv
        if np.any(stalled):
            _rescue_stalled(q, grid, params, active, stalled,
                            k_p, k_mult, k_rate, k_psum, k_harvest,
                            k_conv, k_feas)

        out_p[active] = k_p
        out_mult[active] = k_mult
        out_rate[active] = k_rate
        out_psum[active] = k_psum
        out_harvest[active] = k_harvest
        out_iters[active] = k_iters
        out_conv[active] = k_conv
        out_feas[active] = k_feas

    utp = params.p_c_w + params.epsilon * out_psum - out_harvest
    objective = out_rate - q * utp
    return GridSolveResult(
        rhos=grid.rhos, p=out_p, mult=out_mult, rate=out_rate, psum=out_psum,
        harvest=out_harvest, utp=utp, objective=objective,
        feasible=out_feas & active_mask, converged=out_conv,
        iterations=out_iters, prescreen_ok=grid.prescreen_ok.copy())


def _rescue_stalled(q: float, grid: RhoGrid, params: SystemParams,
                    active: np.ndarray, stalled: np.ndarray,
                    k_p, k_mult, k_rate, k_psum, k_harvest,
                    k_conv, k_feas) -> None:
    """Finish stalled columns with the active-set bisection solver.

    Every KKT point at fixed (q, rho) is a water-filling allocation in two
    effective dual variables, x = q*eps + lambda*eps + beta (scaled by the
    rate multiplier) and y = q + alpha - theta; the rescue pins them by
    complementarity bisection and is exact where the gradient loop zigzags.
    """
    rows = active[stalled]
    gam = np.ascontiguousarray(grid.gamma_f[rows])
    invg = np.ascontiguousarray(grid.inv_gamma[rows])
    a = np.ascontiguousarray(grid.a[rows])
    pic = np.ascontiguousarray(grid.p_i_const[rows])
    ns = rows.size
    n = gam.shape[1]
    p_budget = min(params.p_max_w, (params.p_pg_w - params.p_c_w) / params.epsilon)

    r_p = np.zeros((ns, n))
    r_x = np.zeros(ns)
    r_y = np.zeros(ns)
    r_ok = np.zeros(ns, dtype=np.int64)
    rescue_columns(float(q), gam, invg, a, pic, params.epsilon, p_budget,
                   params.p_min_req_w, params.p_max_req_w, params.r_min_bps,
                   params.subcarrier_bw_hz / LN2, r_p, r_x, r_y, r_ok)

    ok = r_ok == 1
    if not np.any(ok):
        return
    w = params.subcarrier_bw_hz
    rate = w * np.sum(np.log1p(r_p * gam), axis=1) / LN2
    psum = r_p.sum(axis=1)
    harvest = np.einsum("ij,ij->i", r_p, a) + pic

    # reconstruct the five multipliers from (x, y) so the KKT report holds
    qeps = q * params.epsilon
    x, y = r_x, r_y
    near_ceiling = np.abs(harvest - params.p_max_req_w) \
        <= 1e-6 * params.p_max_req_w + 1e-30
    scale = np.where((y < q) & ~near_ceiling, q / np.maximum(y, 1e-12 * q + 1e-300), 1.0)
    gamma_m = scale - 1.0
    x_s = scale * x
    y_s = scale * y
    alpha = np.maximum(y_s - q, 0.0)
    theta = np.maximum(q - y_s, 0.0)
    price = np.maximum(x_s - qeps, 0.0)
    if params.p_max_w <= (params.p_pg_w - params.p_c_w) / params.epsilon:
        beta, lam = price, np.zeros(ns)
    else:
        beta, lam = np.zeros(ns), price / params.epsilon
    mult = np.column_stack([alpha, beta, gamma_m, lam, theta])

    sub_all = np.flatnonzero(stalled)
    obj_new = rate - q * (params.p_c_w + params.epsilon * psum - harvest)
    obj_old = np.where(
        k_feas[sub_all],
        k_rate[sub_all] - q * (params.p_c_w + params.epsilon * k_psum[sub_all]
                               - k_harvest[sub_all]),
        -np.inf)
    take = ok & (obj_new >= obj_old)
    sub = sub_all[take]
    k_p[sub] = r_p[take]
    k_mult[sub] = mult[take]
    k_rate[sub] = rate[take]
    k_psum[sub] = psum[take]
    k_harvest[sub] = harvest[take]
    k_conv[sub] = True
    k_feas[sub] = True


def dual_bound(q: float, grid: RhoGrid, mult: np.ndarray) -> np.ndarray:
    """Per-column upper bound on the optimal inner objective U - q * U_TP.

    Evaluates the Lagrangian dual function at the supplied multipliers
    (any non-negative point gives a valid bound by weak duality). The
    outer loop uses it to discard rho columns whose bound is negative:
    the incumbent's previous allocation already achieves zero at the
    updated q, so such columns can never become the maximizer. Columns
    with some Lambda_i <= 0 are unbounded and come back as +inf.
    """
    params = grid.params
    w = params.subcarrier_bw_hz
    eps = params.epsilon
    lam = (q * (eps - grid.a) + (mult[:, _LAMBDA] * eps + mult[:, _BETA])[:, None]
           + (mult[:, _THETA] - mult[:, _ALPHA])[:, None] * grid.a)
    gain = (w / LN2) * (1.0 + mult[:, _GAMMA])[:, None]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        p = np.maximum(gain / lam - grid.inv_gamma, 0.0)
        p = np.nan_to_num(p, nan=0.0, posinf=0.0, neginf=0.0)
        val = np.sum(gain * np.log1p(p * grid.gamma_f) - lam * p, axis=1)
    const = (-q * (params.p_c_w - grid.p_i_const)
             - mult[:, _LAMBDA] * (params.p_c_w - params.p_pg_w)
             + mult[:, _BETA] * params.p_max_w
             - mult[:, _GAMMA] * params.r_min_bps
             - mult[:, _ALPHA] * (params.p_min_req_w - grid.p_i_const)
             + mult[:, _THETA] * (params.p_max_req_w - grid.p_i_const))
    return np.where(np.all(lam > 0.0, axis=1), val + const, np.inf)


def _residuals_from_column(res: GridSolveResult, j: int,
                           params: SystemParams, tol: float) -> ConstraintResiduals:
    slacks = np.array([
        res.harvest[j] - params.p_min_req_w,
        params.p_max_req_w - res.harvest[j],
        params.p_max_w - res.psum[j],
        params.p_pg_w - params.p_c_w - params.epsilon * res.psum[j],
        res.rate[j] - params.r_min_bps,
    ])
    feasible = bool(res.feasible[j])
    return ConstraintResiduals(*(float(s) for s in slacks), feasible=feasible)


def column_solution(res: GridSolveResult, j: int, params: SystemParams,
                    tol_residual: float = 1e-6) -> InnerSolution:
    """Package one rho column of a grid solve as an InnerSolution."""
    return InnerSolution(
        alloc=PowerAllocation(p_w=res.p[j].copy(), rho=float(res.rhos[j])),
        mults=Multipliers.from_array(res.mult[j]),
        objective=float(res.objective[j]),
        iterations=int(res.iterations[j]),
        converged=bool(res.converged[j]),
        residuals=_residuals_from_column(res, j, params, tol_residual),
    )


def solve_fixed_q_rho(q: float, rho: float, ch: ChannelRealization,
                      params: SystemParams,
                      opts: InnerOptions | None = None) -> InnerSolution:
    """Solve the transformed problem at fixed q and fixed splitting ratio."""
    opts = opts if opts is not None else InnerOptions()
    grid = RhoGrid(ch, params, np.array([rho]), opts)
    res = solve_grid(q, grid, opts)
    return column_solution(res, 0, params, opts.tol_residual)


def kkt_check(sol: InnerSolution, q: float, rho: float, ch: ChannelRealization,
              params: SystemParams, tol_residual: float = 1e-6) -> KKTReport:
    """Verify first-order optimality of a converged inner solution."""
    mults = sol.mults
    p = sol.alloc.p_w
    g = sinr_factors(rho, ch, params)
    a = params.eta * rho * ch.path_gain_lin * ch.h2
    lam = (q * (params.epsilon - a) + mults.lambda_ * params.epsilon
           + mults.beta + (mults.theta - mults.alpha) * a)
    w = params.subcarrier_bw_hz
    grad = w * (1.0 + mults.gamma) * g / (LN2 * (1.0 + p * g))  # marginal gain
    scale = np.maximum(np.abs(lam), np.abs(grad)) + 1e-300

    pos = p > 0.0
    stationarity = float(np.max(np.abs(grad - lam)[pos] / scale[pos])) if np.any(pos) else 0.0
    boundary = float(np.max(((grad - lam) / scale)[~pos], initial=0.0))

    r = sol.residuals
    slacks = np.array([r.c1_lo, r.c2, r.c4, r.c3, r.c1_hi])
    mu = mults.as_array()
    scales = residual_scales(params)[[0, 2, 4, 3, 1]]
    cs = float(np.max(mu * np.abs(slacks) / (1.0 + mu * scales)))

    return KKTReport(
        stationarity_rel=stationarity,
        boundary_rel=max(boundary, 0.0),
        comp_slackness_rel=cs,
        primal_feasible=bool(np.all(slacks >= -tol_residual * scales)),
        dual_feasible=bool(np.all(mu >= 0.0)),
    )
