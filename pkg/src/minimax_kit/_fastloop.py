"""Compiled run loop for the diagonal families.

This mirrors, operation for operation and in the same order, the reference
path the python engine takes through ``solvers.step_*`` and ``oracles``:
elementwise kernels keep each intermediate rounding (every product and sum is
a separate statement, so LLVM cannot contract them into FMAs), and reductions
accumulate strictly left to right exactly like ``core.dot``. Any change to the
reference operation order must be made here in lockstep; tests assert exact
equality of traces across the two engines.

Scalar-code conventions shared with the harness:
  regularizer codes  0=zero 1=l1 2=sq_l2 3=box   (params p1, p2 = weight / lo, hi)
  algorithm codes    0=prox_gda 1=prox_altgda 2=prox_altgdam
  status codes       0=eps reached 1=iteration cap 2=non-finite x 3=non-finite y
                     4=non-finite diagnostics
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

REG_CODES = {"zero": 0, "l1": 1, "sq_l2": 2, "box": 3}
ALG_CODES = {"prox_gda": 0, "prox_altgda": 1, "prox_altgdam": 2}

STATUS_EPS = 0
STATUS_CAP = 1
STATUS_NONFINITE_X = 2
STATUS_NONFINITE_Y = 3
STATUS_NONFINITE_DIAG = 4


@njit(cache=True, nogil=True)
def _prox_scalar(code, v, step, p1, p2):
    if code == 0:
        return v
    if code == 1:
        tau = step * p1
        av = abs(v)
        m = av - tau
        if m < 0.0:
            m = 0.0
        if v > 0.0:
            s = 1.0
        elif v < 0.0:
            s = -1.0
        else:
            s = v
        return s * m
    if code == 2:
        den = 1.0 + step * p1
        return v / den
    r = v
    if r < p1:
        r = p1
    if r > p2:
        r = p2
    return r


@njit(cache=True, nogil=True)
def _reg_value(code, vec, p1, p2):
    if code == 0:
        return 0.0
    if code == 1:
        acc = 0.0
        for i in range(vec.size):
            acc += abs(vec[i])
        return p1 * acc
    if code == 2:
        acc = 0.0
        for i in range(vec.size):
            pr = vec[i] * vec[i]
            acc += pr
        c = 0.5 * p1
        return c * acc
    for i in range(vec.size):
        if vec[i] < p1 or vec[i] > p2:
            return np.inf
    return 0.0


@njit(cache=True, nogil=True)
def run_loop(q, a, b, b_sign, mu,
             g_code, g_p1, g_p2, h_code, h_p1,
             alg, eta_x, eta_y, beta, gamma,
             x0, y0, max_iters, eps, diag_every,
             stab, slack_rel, rows):
    m = q.size
    n = b.size
    k0 = a.size

    x = x0.copy()
    y = y0.copy()
    x_prev = x0.copy()
    y_prev = y0.copy()
    w = np.empty(n)
    ys = np.empty(n)
    grad_map = np.empty(m)
    x_new = np.empty(m)
    y_new = np.empty(n)
    y_ex = np.empty(n)
    w2 = np.empty(n)

    t = 0
    n_rows = 0
    status = STATUS_CAP
    err_t = -1
    hit = -1
    min_g = np.inf
    sum_gsq = 0.0
    mono_worst = -np.inf
    h_last = 0.0
    last_dx = -1
    last_dy = -1
    last_gap = -1

    while True:
        # w(x), then the closed-form inner maximizer
        for j in range(n):
            w[j] = b_sign * b[j]
        for j in range(k0):
            t1 = a[j] * x[j]
            t2 = b_sign * b[j]
            w[j] = t1 + t2
        if h_code == 0:
            for j in range(n):
                ys[j] = w[j] / mu
        else:
            for j in range(n):
                v = w[j]
                av = abs(v)
                mm = av - h_p1
                if mm < 0.0:
                    mm = 0.0
                if v > 0.0:
                    s = 1.0
                elif v < 0.0:
                    s = -1.0
                else:
                    s = v
                num = s * mm
                ys[j] = num / mu

        # gradient mapping at x with the solver's eta_x
        for i in range(m):
            lift = 0.0
            if i < k0:
                lift = a[i] * ys[i]
            t1 = q[i] * x[i]
            gp = t1 + lift
            dstep = eta_x * gp
            pt = x[i] - dstep
            moved = _prox_scalar(g_code, pt, eta_x, g_p1, g_p2)
            dd = x[i] - moved
            grad_map[i] = dd / eta_x
        acc = 0.0
        for i in range(m):
            pr = grad_map[i] * grad_map[i]
            acc += pr
        g_norm = math.sqrt(acc)

        # phi = f(x, ys) - h(ys), objective, Lyapunov terms
        acc1 = 0.0
        for i in range(m):
            p1_ = q[i] * x[i]
            p2_ = p1_ * x[i]
            acc1 += p2_
        term_q = 0.5 * acc1
        acc2 = 0.0
        for j in range(n):
            pj = ys[j] * w[j]
            acc2 += pj
        acc3 = 0.0
        for j in range(n):
            pj = ys[j] * ys[j]
            acc3 += pj
        c3 = 0.5 * mu
        term_y = c3 * acc3
        s12 = term_q + acc2
        f_val = s12 - term_y
        h_val = 0.0
        if h_code == 1:
            acc4 = 0.0
            for j in range(n):
                acc4 += abs(ys[j])
            h_val = h_p1 * acc4
        phi = f_val - h_val
        gval = _reg_value(g_code, x, g_p1, g_p2)
        obj = phi + gval
        gap2 = 0.0
        for j in range(n):
            d = y[j] - ys[j]
            pr = d * d
            gap2 += pr
        dx2 = 0.0
        for i in range(m):
            d = x[i] - x_prev[i]
            pr = d * d
            dx2 += pr
        dy2 = 0.0
        for j in range(n):
            d = y[j] - y_prev[j]
            pr = d * d
            dy2 += pr
        t2m = 2.0 * mu
        gap_term = t2m * gap2
        s1 = obj + gap_term
        brat = beta / eta_x
        dx_term = brat * dx2
        lyap = s1 + dx_term
        y_gap = math.sqrt(gap2)
        dx_norm = math.sqrt(dx2)
        dy_norm = math.sqrt(dy2)

        if not (math.isfinite(lyap) and math.isfinite(obj) and math.isfinite(g_norm)
                and math.isfinite(dx_norm) and math.isfinite(dy_norm)
                and math.isfinite(y_gap)):
            status = STATUS_NONFINITE_DIAG
            err_t = t
            break

        if t > 0:
            ah = abs(h_last)
            base = 1.0 if ah < 1.0 else ah
            sl = slack_rel * base
            d_h = lyap - h_last
            margin = d_h - sl
            if margin > mono_worst:
                mono_worst = margin
        h_last = lyap
        if t >= 2:
            g2 = g_norm * g_norm
            sum_gsq += g2
        if dx_norm >= stab:
            last_dx = t
        if dy_norm >= stab:
            last_dy = t
        if y_gap >= stab:
            last_gap = t
        if g_norm < min_g:
            min_g = g_norm

        stop_eps = g_norm <= eps
        stop_cap = t == max_iters
        if (t % diag_every == 0) or stop_eps or stop_cap:
            rows[n_rows, 0] = t
            rows[n_rows, 1] = lyap
            rows[n_rows, 2] = obj
            rows[n_rows, 3] = g_norm
            rows[n_rows, 4] = dx_norm
            rows[n_rows, 5] = dy_norm
            rows[n_rows, 6] = y_gap
            n_rows += 1
        if stop_eps:
            status = STATUS_EPS
            hit = t
            break
        if stop_cap:
            status = STATUS_CAP
            break

        # one solver step
        if alg == 2:
            for i in range(m):
                dxi = x[i] - x_prev[i]
                ei = beta * dxi
                xe = x[i] + ei
                lift = 0.0
                if i < k0:
                    lift = a[i] * y[i]
                t1 = q[i] * x[i]
                g1 = t1 + lift
                dstep = eta_x * g1
                pt = xe - dstep
                x_new[i] = _prox_scalar(g_code, pt, eta_x, g_p1, g_p2)
        else:
            for i in range(m):
                lift = 0.0
                if i < k0:
                    lift = a[i] * y[i]
                t1 = q[i] * x[i]
                g1 = t1 + lift
                dstep = eta_x * g1
                pt = x[i] - dstep
                x_new[i] = _prox_scalar(g_code, pt, eta_x, g_p1, g_p2)
        ok = True
        for i in range(m):
            if not math.isfinite(x_new[i]):
                ok = False
                break
        if not ok:
            status = STATUS_NONFINITE_X
            err_t = t
            break

        if alg == 0:
            # ascent gradient at the stale (x, y); w(x) already in hand
            for j in range(n):
                mm = mu * y[j]
                g2 = w[j] - mm
                astep = eta_y * g2
                pt = y[j] + astep
                y_new[j] = _prox_scalar(h_code, pt, eta_y, h_p1, 0.0)
        else:
            for j in range(n):
                w2[j] = b_sign * b[j]
            for j in range(k0):
                t1 = a[j] * x_new[j]
                t2 = b_sign * b[j]
                w2[j] = t1 + t2
            if alg == 1:
                for j in range(n):
                    mm = mu * y[j]
                    g2 = w2[j] - mm
                    astep = eta_y * g2
                    pt = y[j] + astep
                    y_new[j] = _prox_scalar(h_code, pt, eta_y, h_p1, 0.0)
            else:
                for j in range(n):
                    dyj = y[j] - y_prev[j]
                    ej = gamma * dyj
                    y_ex[j] = y[j] + ej
                for j in range(n):
                    mm = mu * y_ex[j]
                    g2 = w2[j] - mm
                    astep = eta_y * g2
                    pt = y_ex[j] + astep
                    y_new[j] = _prox_scalar(h_code, pt, eta_y, h_p1, 0.0)
        ok = True
        for j in range(n):
            if not math.isfinite(y_new[j]):
                ok = False
                break
        if not ok:
            status = STATUS_NONFINITE_Y
            err_t = t
            break

        for i in range(m):
            x_prev[i] = x[i]
            x[i] = x_new[i]
        for j in range(n):
            y_prev[j] = y[j]
            y[j] = y_new[j]
        t += 1

    return (n_rows, status, err_t, hit, t, min_g, sum_gsq, mono_worst,
            last_dx, last_dy, last_gap)
