"""Numba inner loops for the per-constraint integration.

All kernels operate on the flat solver arrays: x, a per-variable owning-term
index, per-term weight/exponent, and per-term running power sums maintained
with compensated summation.  Power sums are rebuilt from scratch every
RECOMPUTE_EVERY incremental updates to bound drift over millions of tiny
steps.  No fastmath anywhere: runs must be bit-reproducible.
"""

import numpy as np
from numba import njit

RECOMPUTE_EVERY = 1 << 14

STATUS_OK = 0
STATUS_STEP_LIMIT = 1


@njit(cache=True)
def _pow_q(x, q):
    if q == 1.0:
        return x
    if q == 2.0:
        return x * x
    if q == 3.0:
        return x * x * x
    if q == 1.5:
        return x * np.sqrt(x)
    if q == 10.0:
        x2 = x * x
        x4 = x2 * x2
        x8 = x4 * x4
        return x8 * x2
    return x**q


@njit(cache=True)
def _pow_qm1(x, q):
    # x ** (q - 1) with fast paths matching _pow_q
    if q == 1.0:
        return 1.0
    if q == 2.0:
        return x
    if q == 3.0:
        return x * x
    if q == 1.5:
        return np.sqrt(x)
    if q == 10.0:
        x2 = x * x
        x4 = x2 * x2
        x8 = x4 * x4
        return x8 * x
    return x ** (q - 1.0)


@njit(cache=True)
def _gradient_entry(i, x, var_term, term_c, term_q, pow_sum):
    e = var_term[i]
    q = term_q[e]
    if q == 1.0:
        return term_c[e]
    return term_c[e] * _pow_qm1(x[i], q) * pow_sum[e] ** (1.0 / q - 1.0)


@njit(cache=True)
def _constraint_lhs(x, idx, coef):
    lhs = 0.0
    for j in range(idx.shape[0]):
        lhs += coef[j] * x[idx[j]]
    return lhs


@njit(cache=True)
def _plan_step(x, var_term, term_c, term_q, pow_sum, idx, coef, inv_d, eta, lhs_tol, rate):
    """Frozen-gradient growth rates and the admissible step.

    Fills `rate` and returns (dtau, lhs, lhs_rate).  dtau is the largest step
    with (a) per-variable growth factor <= 1 + eta, (b) predicted lhs increase
    <= eta, and (c) no overshoot: a step that would cross lhs = 1 is shrunk by
    bisection until the predicted lhs lands in [1, 1 + lhs_tol].
    """
    k = idx.shape[0]
    lhs = _constraint_lhs(x, idx, coef)
    if lhs >= 1.0:
        return 0.0, lhs, 0.0
    lhs_rate = 0.0
    dt = np.inf
    for j in range(k):
        i = idx[j]
        g = _gradient_entry(i, x, var_term, term_c, term_q, pow_sum)
        r = (coef[j] * x[i] + inv_d) / g
        rate[j] = r
        lhs_rate += coef[j] * r
        cap = eta * x[i] / r
        if cap < dt:
            dt = cap
    cap = eta / lhs_rate
    if cap < dt:
        dt = cap
    if lhs + dt * lhs_rate >= 1.0:
        lo = 0.0
        hi = dt
        for _ in range(60):
            if lhs + hi * lhs_rate <= 1.0 + lhs_tol:
                break
            mid = 0.5 * (lo + hi)
            if lhs + mid * lhs_rate < 1.0:
                lo = mid
            else:
                hi = mid
        dt = hi
    return dt, lhs, lhs_rate


@njit(cache=True)
def _apply_step(
    x, var_term, term_q, pow_sum, pow_comp, pow_count, term_start, term_vars, idx, coef, rate, dt
):
    """Explicit-Euler update at the precomputed rates; keeps power sums consistent."""
    for j in range(idx.shape[0]):
        i = idx[j]
        old = x[i]
        new = old + dt * rate[j]
        x[i] = new
        e = var_term[i]
        if e < 0:
            continue
        q = term_q[e]
        delta = _pow_q(new, q) - _pow_q(old, q)
        y = delta - pow_comp[e]
        t = pow_sum[e] + y
        pow_comp[e] = (t - pow_sum[e]) - y
        pow_sum[e] = t
        cnt = pow_count[e] + 1
        if cnt >= RECOMPUTE_EVERY:
            s = 0.0
            comp = 0.0
            for a in range(term_start[e], term_start[e + 1]):
                v = _pow_q(x[term_vars[a]], q)
                y2 = v - comp
                t2 = s + y2
                comp = (t2 - s) - y2
                s = t2
            pow_sum[e] = s
            pow_comp[e] = 0.0
            cnt = 0
        pow_count[e] = cnt


@njit(cache=True)
def process_euler(
    x,
    var_term,
    term_c,
    term_q,
    pow_sum,
    pow_comp,
    pow_count,
    term_start,
    term_vars,
    idx,
    coef,
    inv_d,
    eta,
    lhs_tol,
    max_steps,
):
    """Integrate one constraint until its lhs reaches [1, 1 + 10*lhs_tol].

    Returns (tau, lhs_final, steps, status).
    """
    rate = np.empty(idx.shape[0])
    tau = 0.0
    steps = 0
    while True:
        dt, lhs, lhs_rate = _plan_step(
            x, var_term, term_c, term_q, pow_sum, idx, coef, inv_d, eta, lhs_tol, rate
        )
        if lhs >= 1.0:
            return tau, lhs, steps, STATUS_OK
        if steps >= max_steps:
            return tau, lhs, steps, STATUS_STEP_LIMIT
        _apply_step(
            x,
            var_term,
            term_q,
            pow_sum,
            pow_comp,
            pow_count,
            term_start,
            term_vars,
            idx,
            coef,
            rate,
            dt,
        )
        tau += dt
        steps += 1


@njit(cache=True)
def _linear_lhs_at(x0, idx, coef, cterm, inv_d, tau):
    # Exact trajectory of dx/dtau = (a*x + 1/d)/c per variable, summed.
    lhs = 0.0
    for j in range(idx.shape[0]):
        a = coef[j]
        b = inv_d / a
        lhs += a * ((x0[j] + b) * np.exp(a * tau / cterm[j]) - b)
    return lhs


@njit(cache=True)
def process_exact_linear(
    x,
    var_term,
    term_c,
    term_q,
    pow_sum,
    pow_comp,
    pow_count,
    term_start,
    term_vars,
    idx,
    coef,
    inv_d,
):
    """Closed-form integration when every active variable is in a q = 1 term.

    The per-variable rate (a*x + 1/d)/weight is autonomous, so the stopping
    time solves a monotone sum-of-exponentials equation; it is bracketed by
    doubling and bisected to one ulp.  Returns (tau, lhs_final, steps, status)
    with steps = 1.
    """
    k = idx.shape[0]
    x0 = np.empty(k)
    cterm = np.empty(k)
    for j in range(k):
        x0[j] = x[idx[j]]
        cterm[j] = term_c[var_term[idx[j]]]
    lhs0 = _constraint_lhs(x, idx, coef)
    if lhs0 >= 1.0:
        return 0.0, lhs0, 0, STATUS_OK
    hi = 1.0
    for _ in range(200):
        if _linear_lhs_at(x0, idx, coef, cterm, inv_d, hi) >= 1.0:
            break
        hi *= 2.0
    lo = 0.0
    it = 0
    while hi > np.nextafter(lo, np.inf) and it < 500:
        mid = 0.5 * (lo + hi)
        if _linear_lhs_at(x0, idx, coef, cterm, inv_d, mid) < 1.0:
            lo = mid
        else:
            hi = mid
        it += 1
    tau = hi
    # Apply at tau, nudging up by ulps if double rounding left the lhs below 1.
    for _ in range(64):
        lhs = 0.0
        for j in range(k):
            a = coef[j]
            b = inv_d / a
            new = (x0[j] + b) * np.exp(a * tau / cterm[j]) - b
            x[idx[j]] = new
            lhs += a * new
        if lhs >= 1.0:
            break
        tau = np.nextafter(tau, np.inf)
    for j in range(k):
        i = idx[j]
        e = var_term[i]
        delta = x[i] - x0[j]
        y = delta - pow_comp[e]
        t = pow_sum[e] + y
        pow_comp[e] = (t - pow_sum[e]) - y
        pow_sum[e] = t
    lhs_final = _constraint_lhs(x, idx, coef)
    return tau, lhs_final, 1, STATUS_OK
