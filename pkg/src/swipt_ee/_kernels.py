"""JIT-compiled iteration kernel of the two-layer dual solver.

The kernel runs the water-filling / multiplier-update loop for every rho
column until each column either converges, stalls on a best feasible
iterate, or hits the iteration cap. Kept free of Python objects so numba
can compile it once and cache the result.
"""

import math

import numpy as np
from numba import njit

LN2 = math.log(2.0)


@njit(cache=True)
def iterate_columns(q, gam, invg, a, p_i_const, step_c, mult_scale, mult,
                    w, eps, p_c, budget, p_max, p_min_req, p_max_req, r_min,
                    p_cap, tol_slack, cs_tol, tol_dual, slack_scale, max_iters,
                    out_p, out_mult, out_rate, out_psum, out_harvest,
                    out_iters, out_conv, out_feas):
    n_col, n = gam.shape
    frozen = np.zeros(n_col, np.bool_)
    best_obj = np.full(n_col, -np.inf)
    best_p = np.zeros((n_col, n))
    best_mult = np.zeros((n_col, 5))
    best_rate = np.zeros(n_col)
    best_psum = np.zeros(n_col)
    best_harvest = np.zeros(n_col)
    p_row = np.zeros(n)
    slack = np.zeros(5)
    wln2 = w / LN2
    p_big = 1e6 * p_cap + 1e6   # numerical guard against vanishing Lambda
    n_frozen = 0

    for m in range(max_iters):
        inv_m = 1.0 / (1.0 + m)
        last = m == max_iters - 1
        for r in range(n_col):
            if frozen[r]:
                continue
            al = mult[r, 0]
            be = mult[r, 1]
            ga = mult[r, 2]
            la = mult[r, 3]
            th = mult[r, 4]
            lev = wln2 * (1.0 + ga)
            rate = 0.0
            psum = 0.0
            harvest = p_i_const[r]
            for i in range(n):
                ai = a[r, i]
                lam = q * (eps - ai) + la * eps + be + (th - al) * ai
                if lam > 0.0:
                    pi = lev / lam - invg[r, i]
                    if pi < 0.0:
                        pi = 0.0
                    elif pi > p_big:
                        pi = p_big
                else:
                    pi = p_cap
                p_row[i] = pi
                rate += math.log1p(pi * gam[r, i])
                psum += pi
                harvest += pi * ai
            rate *= wln2

            slack[0] = harvest - p_min_req
            slack[1] = p_max - psum
            slack[2] = rate - r_min
            slack[3] = budget - eps * psum
            slack[4] = p_max_req - harvest

            feas = True
            for u in range(5):
                if slack[u] < -tol_slack[u]:
                    feas = False
                    break

            if feas:
                obj = rate - q * (p_c + eps * psum - harvest)
                if obj > best_obj[r]:
                    best_obj[r] = obj
                    best_rate[r] = rate
                    best_psum[r] = psum
                    best_harvest[r] = harvest
                    for i in range(n):
                        best_p[r, i] = p_row[i]
                    for u in range(5):
                        best_mult[r, u] = mult[r, u]

            done = feas
            for u in range(5):
                mu = mult[r, u]
                new_mu = mu - step_c[r, u] * inv_m * slack[u]
                if new_mu < 0.0:
                    new_mu = 0.0
                if done:
                    cs = mu * abs(slack[u]) / (1.0 + mu * slack_scale[u])
                    if cs >= cs_tol:
                        done = False
                    elif abs(new_mu - mu) > tol_dual * (mu + mult_scale[r, u]):
                        done = False
                slack[u] = new_mu    # reuse buffer for the updated multiplier

            if done or last:
                frozen[r] = True
                n_frozen += 1
                out_iters[r] = m + 1
                out_conv[r] = done
                if done or best_obj[r] == -np.inf:
                    out_rate[r] = rate
                    out_psum[r] = psum
                    out_harvest[r] = harvest
                    out_feas[r] = feas
                    for i in range(n):
                        out_p[r, i] = p_row[i]
                    for u in range(5):
                        out_mult[r, u] = mult[r, u]
                else:
                    # stalled: fall back on the best feasible iterate
                    out_rate[r] = best_rate[r]
                    out_psum[r] = best_psum[r]
                    out_harvest[r] = best_harvest[r]
                    out_feas[r] = True
                    for i in range(n):
                        out_p[r, i] = best_p[r, i]
                    for u in range(5):
                        out_mult[r, u] = best_mult[r, u]
            else:
                for u in range(5):
                    mult[r, u] = slack[u]

        if n_frozen == n_col:
            break

# ---------------------------------------------------------------------------
# Active-set rescue for stalled columns
# ---------------------------------------------------------------------------
# At a fixed (q, rho) every KKT point is a water-filling allocation
#   P_i = [ lev / (x - y * a_i) - 1 / Gamma_i ]^+
# in the two effective dual variables x (power price) and y (harvest
# reward); the rate-floor multiplier only rescales (x, y) jointly. The
# projected-gradient loop can zigzag for ~1e5 iterations when the harvest
# floor and the power budget are both active, so stalled columns are
# finished here by nested bisection, which is exact up to float precision.

@njit(cache=True)
def _eval_col(x, y, gam, invg, a, lev):
    """psum, harvested power (without the noise term), rate in bit/s."""
    n = gam.size
    psum = 0.0
    harv = 0.0
    rate = 0.0
    for i in range(n):
        if gam[i] <= 0.0:
            continue
        d = x - y * a[i]
        if d <= 0.0:
            return np.inf, np.inf, np.inf
        p = lev / d - invg[i]
        if p > 0.0:
            psum += p
            harv += p * a[i]
            rate += math.log1p(p * gam[i])
    return psum, harv, rate * lev


@njit(cache=True)
def _a_max(gam, a):
    m = 0.0
    for i in range(gam.size):
        if gam[i] > 0.0 and a[i] > m:
            m = a[i]
    return m


@njit(cache=True)
def _solve_x(y, q, eps, p_budget, gam, invg, a, lev):
    """Smallest admissible power price: x = q*eps while the budget is
    slack, otherwise the bisection root of psum(x, y) = p_budget."""
    am = _a_max(gam, a)
    x_free = q * eps
    if x_free - y * am > 0.0:
        psum, _, _ = _eval_col(x_free, y, gam, invg, a, lev)
        if psum <= p_budget:
            return x_free
        x_lo = x_free
    else:
        x_lo = y * am
    x_hi = 2.0 * x_lo + lev
    for _ in range(200):
        psum, _, _ = _eval_col(x_hi, y, gam, invg, a, lev)
        if psum <= p_budget:
            break
        x_hi *= 2.0
    for _ in range(70):
        xm = 0.5 * (x_lo + x_hi)
        psum, _, _ = _eval_col(xm, y, gam, invg, a, lev)
        if psum > p_budget:
            x_lo = xm
        else:
            x_hi = xm
    return x_hi                      # feasible (psum <= budget) side


@njit(cache=True)
def _rescue_one(q, gam, invg, a, pic, eps, p_budget,
                p_min_req, p_max_req, r_min, lev, out_p):
    """Solve one column by complementarity branches. Returns
    (ok, x, y); ok = 0 marks failure (infeasible or unhandled corner)."""
    y = q
    x = _solve_x(y, q, eps, p_budget, gam, invg, a, lev)
    psum, harv, rate = _eval_col(x, y, gam, invg, a, lev)

    if harv + pic < p_min_req:
        # harvest floor active: tilt toward strong-harvest carriers
        am = _a_max(gam, a)
        if am <= 0.0:
            return 0, x, y
        y_lo = y
        y_hi = y
        step = max(q, 0.5 * x / am) + 1e-12
        found = False
        for _ in range(200):
            y_hi += step
            step *= 2.0
            xh = _solve_x(y_hi, q, eps, p_budget, gam, invg, a, lev)
            _, harv, _ = _eval_col(xh, y_hi, gam, invg, a, lev)
            if harv + pic >= p_min_req:
                found = True
                break
        if not found:
            return 0, x, y
        for _ in range(70):
            ym = 0.5 * (y_lo + y_hi)
            xm = _solve_x(ym, q, eps, p_budget, gam, invg, a, lev)
            _, harv, _ = _eval_col(xm, ym, gam, invg, a, lev)
            if harv + pic >= p_min_req:
                y_hi = ym
            else:
                y_lo = ym
        y = y_hi
        x = _solve_x(y, q, eps, p_budget, gam, invg, a, lev)
    elif harv + pic > p_max_req:
        # harvest ceiling active: tilt away from strong-harvest carriers
        y_hi = y
        y_lo = y
        step = max(q, 1.0) + 1e-12
        found = False
        for _ in range(200):
            y_lo -= step
            step *= 2.0
            xl = _solve_x(y_lo, q, eps, p_budget, gam, invg, a, lev)
            _, harv, _ = _eval_col(xl, y_lo, gam, invg, a, lev)
            if harv + pic <= p_max_req:
                found = True
                break
        if not found:
            return 0, x, y
        for _ in range(70):
            ym = 0.5 * (y_lo + y_hi)
            xm = _solve_x(ym, q, eps, p_budget, gam, invg, a, lev)
            _, harv, _ = _eval_col(xm, ym, gam, invg, a, lev)
            if harv + pic <= p_max_req:
                y_lo = ym
            else:
                y_hi = ym
        y = y_lo
        x = _solve_x(y, q, eps, p_budget, gam, invg, a, lev)

    psum, harv, rate = _eval_col(x, y, gam, invg, a, lev)
    if rate < r_min:
        # rate floor active: walk the tilt back toward the capacity
        # water-filling (y -> 0) while the harvest window still holds
        if y <= 0.0:
            return 0, x, y
        y_hi = y
        y_lo = 0.0
        xl = _solve_x(y_lo, q, eps, p_budget, gam, invg, a, lev)
        _, harv, rate = _eval_col(xl, y_lo, gam, invg, a, lev)
        if rate < r_min:
            return 0, x, y
        for _ in range(70):
            ym = 0.5 * (y_lo + y_hi)
            xm = _solve_x(ym, q, eps, p_budget, gam, invg, a, lev)
            _, _, rate = _eval_col(xm, ym, gam, invg, a, lev)
            if rate >= r_min:
                y_lo = ym
            else:
                y_hi = ym
        y = y_lo
        x = _solve_x(y, q, eps, p_budget, gam, invg, a, lev)
        _, harv, _ = _eval_col(x, y, gam, invg, a, lev)
        if harv + pic < p_min_req or harv + pic > p_max_req:
            return 0, x, y

    n = gam.size
    for i in range(n):
        p = 0.0
        if gam[i] > 0.0:
            d = x - y * a[i]
            if d <= 0.0:
                return 0, x, y
            p = lev / d - invg[i]
            if p < 0.0:
                p = 0.0
        out_p[i] = p
    return 1, x, y


@njit(cache=True)
def rescue_columns(q, gam, invg, a, pic, eps, p_budget,
                   p_min_req, p_max_req, r_min, lev,
                   out_p, out_x, out_y, out_ok):
    for r in range(gam.shape[0]):
        ok, x, y = _rescue_one(q, gam[r], invg[r], a[r], pic[r], eps,
                               p_budget, p_min_req, p_max_req, r_min, lev,
                               out_p[r])
        out_ok[r] = ok
        out_x[r] = x
        out_y[r] = y
