"""Compiled inner loops.

Everything here works on plain float arrays; the public modules wrap these with
validation and result types.  Site data is passed as cosine/sine tables of the
phases ``pi * (theta + j * alpha)`` reduced mod 2, so the period-2 sign of the
regularized determinants is preserved.
"""
import math

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)

#: tie-break for a pivot that is exactly zero
TINY = 1e-300
_BIG = 1e100
_SMALL = 1e-100


@njit(**_JIT)
def phase_mod2(theta, alpha, j):
    x = theta + j * alpha
    return x - 2.0 * math.floor(0.5 * x)


@njit(**_JIT)
def ptilde_run(c, s, lam, E, start, n, out_sign, out_log):
    """P~_j for the block starting at table index ``start``, j = 0..n."""
    out_sign[0] = 1
    out_log[0] = 0.0
    if n == 0:
        return
    a = 1.0
    b = E * c[start] - lam * s[start]
    scale = 0.0
    out_sign[1] = 1 if b > 0 else (-1 if b < 0 else 0)
    out_log[1] = math.log(abs(b)) if b != 0 else -np.inf
    for j in range(2, n + 1):
        cj = c[start + j - 1]
        w = E * cj - lam * s[start + j - 1]
        nb = w * b - cj * c[start + j - 2] * a
        a = b
        b = nb
        m = max(abs(a), abs(b))
        if m > _BIG or (m < _SMALL and m > 0):
            a /= m
            b /= m
            scale += math.log(m)
        if b > 0:
            out_sign[j] = 1
            out_log[j] = math.log(b) + scale
        elif b < 0:
            out_sign[j] = -1
            out_log[j] = math.log(-b) + scale
        else:
            out_sign[j] = 0
            out_log[j] = -np.inf


@njit(**_JIT)
def ptilde_back_run(c, s, lam, E, end, n, out_sign, out_log):
    """P~ of the blocks ``[end - j + 1, end]`` (table indices), j = 0..n.

    Expands along the first row: B_j = (E c_a - lam s_a) B_{j-1} - c_a c_{a+1} B_{j-2}
    with ``a = end - j + 1``.
    """
    out_sign[0] = 1
    out_log[0] = 0.0
    if n == 0:
        return
    a = 1.0
    b = E * c[end] - lam * s[end]
    scale = 0.0
    out_sign[1] = 1 if b > 0 else (-1 if b < 0 else 0)
    out_log[1] = math.log(abs(b)) if b != 0 else -np.inf
    for j in range(2, n + 1):
        st = end - j + 1
        w = E * c[st] - lam * s[st]
        nb = w * b - c[st] * c[st + 1] * a
        a = b
        b = nb
        m = max(abs(a), abs(b))
        if m > _BIG or (m < _SMALL and m > 0):
            a /= m
            b /= m
            scale += math.log(m)
        if b > 0:
            out_sign[j] = 1
            out_log[j] = math.log(b) + scale
        elif b < 0:
            out_sign[j] = -1
            out_log[j] = math.log(-b) + scale
        else:
            out_sign[j] = 0
            out_log[j] = -np.inf


@njit(**_JIT)
def ptilde_last(c, s, lam, E, starts, n, out_sign, out_log):
    """P~_n for each block start in ``starts``."""
    for t in range(starts.shape[0]):
        st = starts[t]
        if n == 0:
            out_sign[t] = 1
            out_log[t] = 0.0
            continue
        a = 1.0
        b = E * c[st] - lam * s[st]
        scale = 0.0
        for j in range(2, n + 1):
            cj = c[st + j - 1]
            w = E * cj - lam * s[st + j - 1]
            nb = w * b - cj * c[st + j - 2] * a
            a = b
            b = nb
            m = max(abs(a), abs(b))
            if m > _BIG or (m < _SMALL and m > 0):
                a /= m
                b /= m
                scale += math.log(m)
        if b > 0:
            out_sign[t] = 1
            out_log[t] = math.log(b) + scale
        elif b < 0:
            out_sign[t] = -1
            out_log[t] = math.log(-b) + scale
        else:
            out_sign[t] = 0
            out_log[t] = -np.inf


@njit(**_JIT)
def ptilde_last_dE(c, s, lam, E, starts, n, out_sign, out_log, out_dlog):
    """As :func:`ptilde_last`, also returning log|d P~_n / dE| (forward-mode derivative)."""
    for t in range(starts.shape[0]):
        st = starts[t]
        a = 1.0
        da = 0.0
        b = E * c[st] - lam * s[st]
        db = c[st]
        scale = 0.0
        for j in range(2, n + 1):
            cj = c[st + j - 1]
            w = E * cj - lam * s[st + j - 1]
            cc = cj * c[st + j - 2]
            nb = w * b - cc * a
            ndb = cj * b + w * db - cc * da
            a = b
            da = db
            b = nb
            db = ndb
            m = max(max(abs(a), abs(b)), max(abs(da), abs(db)))
            if m > _BIG or (m < _SMALL and m > 0):
                a /= m
                b /= m
                da /= m
                db /= m
                scale += math.log(m)
        if n == 0:
            out_sign[t] = 1
            out_log[t] = 0.0
            out_dlog[t] = -np.inf
            continue
        out_sign[t] = 1 if b > 0 else (-1 if b < 0 else 0)
        out_log[t] = math.log(abs(b)) + scale if b != 0 else -np.inf
        out_dlog[t] = math.log(abs(db)) + scale if db != 0 else -np.inf


@njit(**_JIT)
def ptilde_grid(thetas, alpha, lam, E, n, out_sign, out_log):
    """P~_n(theta) for each theta, phases generated on the fly."""
    for t in range(thetas.shape[0]):
        th = thetas[t]
        x0 = math.pi * phase_mod2(th, alpha, 0)
        c_prev = math.cos(x0)
        b = E * c_prev - lam * math.sin(x0)
        a = 1.0
        scale = 0.0
        for j in range(1, n):
            x = math.pi * phase_mod2(th, alpha, j)
            cj = math.cos(x)
            w = E * cj - lam * math.sin(x)
            nb = w * b - cj * c_prev * a
            a = b
            b = nb
            c_prev = cj
            m = max(abs(a), abs(b))
            if m > _BIG or (m < _SMALL and m > 0):
                a /= m
                b /= m
                scale += math.log(m)
        if n == 0:
            out_sign[t] = 1
            out_log[t] = 0.0
        elif b > 0:
            out_sign[t] = 1
            out_log[t] = math.log(b) + scale
        elif b < 0:
            out_sign[t] = -1
            out_log[t] = math.log(-b) + scale
        else:
            out_sign[t] = 0
            out_log[t] = -np.inf


# ---------------------------------------------------------------- cocycles
# A product M is held as  M = a * Q @ [[1, beta], [0, delta]]  with Q orthogonal,
# a = exp(log_a) > 0.  log_d tracks log|a * delta| separately so det(M) keeps
# full relative accuracy even when delta underflows.

KIND_D = 0
KIND_F = 1
KIND_DINV = 2


@njit(**_JIT)
def cocycle_qr(theta, alpha, lam, E, j0, k, step, kind, state):
    """Accumulate k factors at sites j0, j0+step, ... into ``state`` (left multiplication).

    state = [q11, q12, q21, q22, log_a, beta, delta, log_d, sgn_d]
    """
    q11 = state[0]
    q12 = state[1]
    q21 = state[2]
    q22 = state[3]
    log_a = state[4]
    beta = state[5]
    delta = state[6]
    log_d = state[7]
    sgn_d = state[8]
    for t in range(k):
        j = j0 + t * step
        if kind == KIND_F:
            x = math.pi * phase_mod2(theta, alpha, j)
            cj = math.cos(x)
            w = E * cj - lam * math.sin(x)
            c11 = w * q11 - cj * q21
            c12 = w * q12 - cj * q22
            c21 = cj * q11
            c22 = cj * q12
        else:
            x = theta + j * alpha
            x -= math.floor(x)
            w = E - lam * math.tan(math.pi * x)
            if kind == KIND_D:
                c11 = w * q11 - q21
                c12 = w * q12 - q22
                c21 = q11
                c22 = q12
            else:
                c11 = q21
                c12 = q22
                c21 = -q11 + w * q21
                c22 = -q12 + w * q22
        r = math.hypot(c11, c21)
        if r == 0.0:
            r = TINY
            c11 = TINY
        rho12 = (c11 * c12 + c21 * c22) / r
        rho22 = (c11 * c22 - c21 * c12) / r
        q11 = c11 / r
        q21 = c21 / r
        q12 = -q21
        q22 = q11
        beta = beta + (rho12 / r) * delta
        delta = delta * (rho22 / r)
        log_a += math.log(r)
        if rho22 == 0.0:
            sgn_d = 0.0
            log_d = -np.inf
        else:
            log_d += math.log(abs(rho22))
            if rho22 < 0:
                sgn_d = -sgn_d
    state[0] = q11
    state[1] = q12
    state[2] = q21
    state[3] = q22
    state[4] = log_a
    state[5] = beta
    state[6] = delta
    state[7] = log_d
    state[8] = sgn_d


@njit(**_JIT)
def qr_lognorm(state):
    beta = state[5]
    delta = state[6]
    sq = 1.0 + beta * beta + delta * delta
    disc = sq * sq - 4.0 * delta * delta
    if disc < 0.0:
        disc = 0.0
    sig2 = 0.5 * (sq + math.sqrt(disc))
    return state[4] + 0.5 * math.log(sig2)


@njit(**_JIT)
def cocycle_lognorms(thetas, alpha, lam, E, k, kind, out):
    state = np.empty(9)
    for t in range(thetas.shape[0]):
        state[0] = 1.0
        state[1] = 0.0
        state[2] = 0.0
        state[3] = 1.0
        state[4] = 0.0
        state[5] = 0.0
        state[6] = 1.0
        state[7] = 0.0
        state[8] = 1.0
        cocycle_qr(thetas[t], alpha, lam, E, 0, k, 1, kind, state)
        out[t] = qr_lognorm(state)


# ------------------------------------------------------------ tridiagonal
@njit(**_JIT)
def sturm_counts(v, energies, out):
    """Eigenvalues of tridiag(1, v, 1) strictly below each energy.

    Counts positive ratios P_k / P_{k-1} of the leading minors of (E - H); an
    exactly vanishing ratio is replaced by +TINY.
    """
    n = v.shape[0]
    for t in range(energies.shape[0]):
        E = energies[t]
        cnt = 0
        r = E - v[0]
        if r == 0.0:
            r = TINY
        if r > 0:
            cnt += 1
        for i in range(1, n):
            r = (E - v[i]) - 1.0 / r
            if r == 0.0:
                r = TINY
            if r > 0:
                cnt += 1
        out[t] = cnt


@njit(**_JIT)
def twisted(v, mu, y):
    """Twisted factorization of tridiag(1, v - mu, 1).

    Returns (signs, logs, gamma, r): the vector z with z_r = 1 solving
    (H - mu) z = gamma * e_r.  If ``y >= 0`` the twist index is forced to ``y``
    (Green's-function column); otherwise it minimizes |gamma| (eigenvector).
    """
    n = v.shape[0]
    dp = np.empty(n)
    dm = np.empty(n)
    d = v[0] - mu
    dp[0] = d if d != 0.0 else TINY
    for i in range(1, n):
        d = (v[i] - mu) - 1.0 / dp[i - 1]
        dp[i] = d if d != 0.0 else TINY
    d = v[n - 1] - mu
    dm[n - 1] = d if d != 0.0 else TINY
    for i in range(n - 2, -1, -1):
        d = (v[i] - mu) - 1.0 / dm[i + 1]
        dm[i] = d if d != 0.0 else TINY
    if y >= 0:
        r = y
    else:
        r = 0
        best = np.inf
        for i in range(n):
            g = abs(dp[i] + dm[i] - (v[i] - mu))
            if g < best:
                best = g
                r = i
    gamma = dp[r] + dm[r] - (v[r] - mu)
    signs = np.zeros(n, dtype=np.int8)
    logs = np.empty(n)
    signs[r] = 1
    logs[r] = 0.0
    for i in range(r - 1, -1, -1):
        logs[i] = logs[i + 1] - math.log(abs(dp[i]))
        signs[i] = -signs[i + 1] if dp[i] > 0 else signs[i + 1]
    for i in range(r + 1, n):
        logs[i] = logs[i - 1] - math.log(abs(dm[i]))
        signs[i] = -signs[i - 1] if dm[i] > 0 else signs[i - 1]
    return signs, logs, gamma, r


# ------------------------------------------------------------ sine kernels
# f_e(t) = sum_{l != e} log|sin pi (t - x_l)| is concave on every gap between
# consecutive nodes.  max_{t, i} f_i(t) - f_i(x_i) is the uniformity measure.

@njit(**_JIT)
def _derivs(x, t, excl):
    d1 = 0.0
    d2 = 0.0
    d3 = 0.0
    for l in range(x.shape[0]):
        if l == excl:
            continue
        c = 1.0 / math.tan(math.pi * (t - x[l]))
        q = 1.0 + c * c
        d1 += c
        d2 -= q
        d3 += c * q
    return math.pi * d1, math.pi * math.pi * d2, 2.0 * math.pi ** 3 * d3


@njit(**_JIT)
def _value(x, t, excl):
    f = 0.0
    for l in range(x.shape[0]):
        if l != excl:
            f += math.log(abs(math.sin(math.pi * (t - x[l]))))
    return f


_NEAR = 2
_ACCEPT = 1e-9


@njit(**_JIT)
def _near_d1(x, near, nn, u):
    d1 = 0.0
    d2 = 0.0
    for r in range(nn):
        c = 1.0 / math.tan(math.pi * (u - x[near[r]]))
        d1 += c
        d2 -= 1.0 + c * c
    return math.pi * d1, math.pi * math.pi * d2


@njit(**_JIT)
def _model_root(x, near, nn, t, f1, f2, a, b):
    """Root in [a, b] of  near'(u) + f1 + f2 (u - t), a decreasing function.

    Returns a or b when the root lies beyond that end.
    """
    lo = a
    hi = b
    u = t
    for it in range(80):
        g, h = _near_d1(x, near, nn, u)
        g += f1 + f2 * (u - t)
        h += f2
        if g > 0:
            lo = u
        else:
            hi = u
        un = u - g / h if h < 0 else 0.5 * (lo + hi)
        if not (un > lo and un < hi):
            un = 0.5 * (lo + hi)
        if abs(un - u) < 1e-16 + 1e-15 * abs(u) or hi - lo < 1e-16:
            return un
        u = un
    return u


@njit(**_JIT)
def _maximize(x, a, b, excl, t, tol, excl_at_a, excl_at_b, g0=np.nan, h0=np.nan):
    """Maximizer of the concave f_excl on the gap [a, b] of sorted x.

    The few nodes nearest the gap are treated exactly; the rest enter through a
    local quadratic model refreshed every step.  Returns (t*, hit, iterations)
    where hit is -1/+1 if the maximum sits on an end that is the excluded node.
    When g0, h0 are finite they are taken as the derivatives at the start point.
    """
    n = x.shape[0]
    # locate the gap: sorted index of its left end
    m = np.searchsorted(x, a - math.floor(a))
    if m >= n:
        m = n - 1
    near = np.empty(2 * _NEAR, np.int64)
    nn = 0
    for off in range(-_NEAR + 1, _NEAR + 1):
        l = (m + off) % n
        if l == excl:
            continue
        dup = False
        for r in range(nn):
            if near[r] == l:
                dup = True
        if not dup:
            near[nn] = l
            nn += 1
    lo = a
    hi = b
    if not (t > a and t < b):
        t = 0.5 * (a + b)
    it = 0
    for it in range(1, 60):
        if it == 1 and not math.isnan(g0):
            g = g0
            h = h0
        else:
            g, h, h3 = _derivs(x, t, excl)
        ng, nh = _near_d1(x, near, nn, t)
        f1 = g - ng
        f2 = h - nh
        if f2 > 0.0:
            f2 = 0.0
        if g > 0:
            lo = t
        else:
            hi = t
        u = _model_root(x, near, nn, t, f1, f2, lo, hi)
        if excl_at_a and u <= a:
            ga, hh, hh3 = _derivs(x, a, excl)
            if ga <= 0:
                return a, -1, it
            excl_at_a = False
            u = 0.5 * (lo + hi)
        if excl_at_b and u >= b:
            gb, hh, hh3 = _derivs(x, b, excl)
            if gb >= 0:
                return b, 1, it
            excl_at_b = False
            u = 0.5 * (lo + hi)
        if not (u > lo and u < hi):
            u = 0.5 * (lo + hi)
        step = abs(u - t)
        t = u
        # the model step is second-order accurate: a small step is final
        if step < _ACCEPT or hi - lo < tol:
            break
    return t, 0, it


@njit(**_JIT)
def node_signed_denominators(x, out_log, out_sign):
    """Sign and log of prod_{l != i} sin pi (x_i - x_l)."""
    n = x.shape[0]
    for i in range(n):
        f = 0.0
        neg = 0
        for l in range(n):
            if l != i:
                v = math.sin(math.pi * (x[i] - x[l]))
                if v < 0:
                    neg += 1
                f += math.log(abs(v))
        out_log[i] = f
        out_sign[i] = -1 if neg % 2 else 1


@njit(**_JIT)
def node_log_denominators(x, out):
    """out[i] = sum_{l != i} log|sin pi (x_i - x_l)|."""
    n = x.shape[0]
    for i in range(n):
        out[i] = _value(x, x[i], i)


@njit(**_JIT)
def gap_maxima(x, tol, gt, gf, gd, iters):
    """Maximizer and maximum of the full sum on each cyclic gap of sorted x.

    gd[m] = (first, second) derivative of the full sum at gt[m].
    """
    n = x.shape[0]
    for m in range(n):
        a = x[m]
        b = x[m + 1] if m < n - 1 else x[0] + 1.0
        t, hit, it = _maximize(x, a, b, -1, 0.5 * (a + b), tol, False, False)
        gt[m] = t
        gf[m] = _value(x, t, -1)
        g, h, h3 = _derivs(x, t, -1)
        gd[m, 0] = g
        gd[m, 1] = h
        iters[m] = it


@njit(**_JIT)
def _drop(x, t, e, g, h):
    c = 1.0 / math.tan(math.pi * (t - x[e]))
    return g - math.pi * c, h + math.pi * math.pi * (1.0 + c * c)


@njit(**_JIT)
def adjacent_pairs(x, gt, gd, denom, tol, out_val, out_t, iters):
    """Exact maximum for every node on each of its two neighbouring gaps.

    out_val[2m + side] is the log-ratio for gap m with the excluded node at its
    left (side 0) or right (side 1) end.
    """
    n = x.shape[0]
    for m in range(n):
        a = x[m]
        b = x[m + 1] if m < n - 1 else x[0] + 1.0
        for side in range(2):
            e = m if side == 0 else (m + 1) % n
            g0, h0 = _drop(x, gt[m], e, gd[m, 0], gd[m, 1])
            t, hit, it = _maximize(x, a, b, e, gt[m], tol, side == 0, side == 1, g0, h0)
            iters[2 * m + side] = it
            out_t[2 * m + side] = t
            if hit != 0:
                out_val[2 * m + side] = 0.0
            else:
                out_val[2 * m + side] = _value(x, t, e) - denom[e]


@njit(**_JIT)
def pruned_pairs(x, gt, gf, gd, denom, best, tol, out):
    """Refine non-adjacent (node, gap) pairs whose upper bound beats ``best``.

    The bound is the gap maximum of the full sum minus log of the smaller
    endpoint sine.  out = [best, t_best, i_best, n_refined] (updated in place).
    """
    n = x.shape[0]
    gfmax = -np.inf
    for m in range(n):
        if gf[m] > gfmax:
            gfmax = gf[m]
    refined = 0
    for i in range(n):
        # quick filter: a pair can only qualify if its endpoint sine is small
        lim = math.exp(min(gfmax - denom[i] - best, 700.0))
        s_prev = abs(math.sin(math.pi * (x[0] - x[i])))
        s_first = s_prev
        for m in range(n):
            if m < n - 1:
                s_next = abs(math.sin(math.pi * (x[m + 1] - x[i])))
            else:
                s_next = s_first
            right = m + 1 if m < n - 1 else 0
            smin = min(s_prev, s_next)
            s_prev = s_next
            if m == i or right == i or smin >= lim:
                continue
            if gf[m] - math.log(smin) - denom[i] <= best:
                continue
            a = x[m]
            b = x[m + 1] if m < n - 1 else x[0] + 1.0
            g0, h0 = _drop(x, gt[m], i, gd[m, 0], gd[m, 1])
            t, hit, it = _maximize(x, a, b, i, gt[m], tol, False, False, g0, h0)
            refined += 1
            val = _value(x, t, i) - denom[i]
            if val > best:
                best = val
                out[0] = val
                out[1] = t
                out[2] = i
    out[3] = refined


@njit(**_JIT)
def kernel_log_ratio(x, t, i, denom_i):
    return _value(x, t, i) - denom_i
