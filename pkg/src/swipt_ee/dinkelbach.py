"""Outer fractional-programming loop: iterate q through parametric
subtractive problems until U - q * U_TP vanishes, with a full search over
the splitting-ratio grid nested inside every iteration. Also hosts the
capacity-maximizing baseline (the q = 0 problem) and feasibility
classification.
"""

from dataclasses import dataclass, field

import numpy as np

from .innersolver import (
    InnerOptions,
    InnerSolution,
    RhoGrid,
    column_solution,
    dual_bound,
    solve_grid,
)
from .objective import PowerAllocation
from .sysmodel import ChannelRealization, SystemParams

__all__ = [
    "OuterOptions",
    "SolveResult",
    "InfeasibleProblemError",
    "solve_inner_over_rho",
    "dinkelbach_solve",
    "baseline_capacity_solve",
    "feasibility_check",
    "rho_grid_values",
]


class InfeasibleProblemError(RuntimeError):
    """No splitting-ratio grid point admits a feasible power allocation."""


@dataclass(frozen=True)
class OuterOptions:
    """Outer-loop controls.

    eps is a relative tolerance: the loop stops once U - q * U_TP drops
    below eps * U. rho_grid_m overrides the grid density in SystemParams
    when set. nesting selects the canonical ordering ("rho_in_q", the rho
    search inside each q iteration) or the equivalent swap ("q_in_rho",
    a full q loop per rho, then the max) used for cross-validation.
    """

    l_max: int = 20
    eps: float = 1e-4
    rho_grid_m: int | None = None
    inner: InnerOptions = field(default_factory=InnerOptions)
    nesting: str = "rho_in_q"

    def __post_init__(self) -> None:
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.eps <= 0.0:
            raise ValueError("eps must be > 0")
        if self.nesting not in ("rho_in_q", "q_in_rho"):
            raise ValueError("nesting must be 'rho_in_q' or 'q_in_rho'")


@dataclass(frozen=True)
class SolveResult:
    alloc: PowerAllocation
    q_star: float              # bit/Joule
    capacity_bps: float
    harvested_w: float         # P_D + P_I
    u_tp_w: float
    feasible: bool
    outer_trace: tuple[float, ...]          # accepted q per outer iteration
    rho_trace: np.ndarray                   # inner objective per rho (NaN = infeasible)


def rho_grid_values(params: SystemParams, opts: OuterOptions | None = None) -> np.ndarray:
    m = opts.rho_grid_m if opts is not None and opts.rho_grid_m is not None \
        else params.rho_grid_m
    return np.linspace(0.0, 1.0, m + 1)


def _infeasible_result(params: SystemParams, n_rho: int) -> SolveResult:
    return SolveResult(
        alloc=PowerAllocation(p_w=np.zeros(params.n_subcarriers), rho=0.0),
        q_star=0.0, capacity_bps=0.0, harvested_w=0.0, u_tp_w=params.p_c_w,
        feasible=False, outer_trace=(),
        rho_trace=np.full(n_rho, np.nan))


def _pick_best(res) -> int | None:
    usable = res.usable
    if not np.any(usable):
        return None
    obj = np.where(usable, res.objective, -np.inf)
    return int(np.argmax(obj))


def _rho_trace(res) -> np.ndarray:
    return np.where(res.usable, res.objective, np.nan)


def solve_inner_over_rho(q: float, ch: ChannelRealization, params: SystemParams,
                         opts: OuterOptions | None = None) -> tuple[InnerSolution, float]:
    """Solve the fixed-q problem at every rho grid point and return the
    feasible solution maximizing U - q * U_TP together with its rho.

    Raises InfeasibleProblemError when every grid point fails.
    """
    opts = opts if opts is not None else OuterOptions()
    grid = RhoGrid(ch, params, rho_grid_values(params, opts), opts.inner)
    res = solve_grid(q, grid, opts.inner)
    j = _pick_best(res)
    if j is None:
        raise InfeasibleProblemError("no feasible rho grid point")
    return column_solution(res, j, params, opts.inner.tol_residual), float(res.rhos[j])


def _dinkelbach_on_grid(grid: RhoGrid, params: SystemParams,
                        opts: OuterOptions) -> SolveResult:
    n_rho = grid.rhos.size
    if not np.any(grid.prescreen_ok):
        return _infeasible_result(params, n_rho)

    q = 0.0
    mult_state = np.zeros((n_rho, 5))
    mult_state[:, 1] = grid.beta_init(0.0)        # analytic beta warm start
    keep = None
    best = None      # (res, j, q_value)
    trace: list[float] = []
    for _ in range(opts.l_max):
        res = solve_grid(q, grid, opts.inner, warm_mult=mult_state, col_mask=keep)
        j = _pick_best(res)
        if j is None:
            break
        solved = res.iterations > 0
        mult_state[solved] = res.mult[solved]
        u = float(res.rate[j])
        utp = float(res.utp[j])
        obj = float(res.objective[j])        # U - q * U_TP
        q_new = u / utp
        if best is not None and q_new <= best[2]:
            break                            # inner noise; keep the best iterate
        best = (res, j, q_new)
        trace.append(q_new)
        if obj < opts.eps * max(u, 1.0):
            break                            # fixed point reached
        q = q_new
        # drop columns whose dual bound proves they cannot reach the
        # incumbent's guaranteed objective of zero at the updated q
        keep = dual_bound(q, grid, mult_state) >= -1e-9 * max(u, 1.0)
        keep[j] = True

    if best is None:
        return _infeasible_result(params, n_rho)
    res, j, q_star = best
    return SolveResult(
        alloc=PowerAllocation(p_w=res.p[j].copy(), rho=float(res.rhos[j])),
        q_star=q_star,
        capacity_bps=float(res.rate[j]),
        harvested_w=float(res.harvest[j]),
        u_tp_w=float(res.utp[j]),
        feasible=True,
        outer_trace=tuple(trace),
        rho_trace=_rho_trace(res))


def dinkelbach_solve(ch: ChannelRealization, params: SystemParams,
                     opts: OuterOptions | None = None) -> SolveResult:
    """Maximize energy efficiency via the iterative subtractive-form loop.

    Starts at q = 0 (so the first inner solve is the capacity maximizer),
    updates q to U / U_TP, and stops at the fixed point or after l_max
    iterations. Infeasible instances come back with feasible=False and
    zero efficiency/capacity.
    """
    opts = opts if opts is not None else OuterOptions()
    rhos = rho_grid_values(params, opts)
    if opts.nesting == "q_in_rho":
        return _dinkelbach_per_rho(ch, params, opts, rhos)
    grid = RhoGrid(ch, params, rhos, opts.inner)
    return _dinkelbach_on_grid(grid, params, opts)


def _dinkelbach_per_rho(ch: ChannelRealization, params: SystemParams,
                        opts: OuterOptions, rhos: np.ndarray) -> SolveResult:
    """Swapped nesting: a full Dinkelbach run per rho, then max over rho."""
    best: SolveResult | None = None
    objectives = np.full(rhos.size, np.nan)
    for k, rho in enumerate(rhos):
        grid = RhoGrid(ch, params, np.array([rho]), opts.inner)
        r = _dinkelbach_on_grid(grid, params, opts)
        if not r.feasible:
            continue
        objectives[k] = r.q_star
        if best is None or r.q_star > best.q_star:
            best = r
    if best is None:
        return _infeasible_result(params, rhos.size)
    return SolveResult(
        alloc=best.alloc, q_star=best.q_star, capacity_bps=best.capacity_bps,
        harvested_w=best.harvested_w, u_tp_w=best.u_tp_w, feasible=True,
        outer_trace=best.outer_trace, rho_trace=objectives)


def baseline_capacity_solve(ch: ChannelRealization, params: SystemParams,
                            opts: OuterOptions | None = None) -> SolveResult:
    """Capacity-maximizing baseline: one inner solve at q = 0 under C1-C6."""
    opts = opts if opts is not None else OuterOptions()
    rhos = rho_grid_values(params, opts)
    grid = RhoGrid(ch, params, rhos, opts.inner)
    if not np.any(grid.prescreen_ok):
        return _infeasible_result(params, rhos.size)
    res = solve_grid(0.0, grid, opts.inner)
    j = _pick_best(res)
    if j is None:
        return _infeasible_result(params, rhos.size)
    q = float(res.rate[j] / res.utp[j])
    return SolveResult(
        alloc=PowerAllocation(p_w=res.p[j].copy(), rho=float(res.rhos[j])),
        q_star=q,
        capacity_bps=float(res.rate[j]),
        harvested_w=float(res.harvest[j]),
        u_tp_w=float(res.utp[j]),
        feasible=True,
        outer_trace=(q,),
        rho_trace=_rho_trace(res))


def feasibility_check(ch: ChannelRealization, params: SystemParams,
                      opts: OuterOptions | None = None) -> bool:
    """True when some rho grid point admits a feasible allocation."""
    return baseline_capacity_solve(ch, params, opts).feasible
