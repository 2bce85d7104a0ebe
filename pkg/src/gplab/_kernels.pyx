# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; semantics mirror ``_kernels_py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, exp, fabs, log, log1p, sqrt

cnp.import_array()

cdef double TINY = 1e-300


cdef inline double _log1p_ratio(double x) noexcept nogil:
    if fabs(x) < 1e-8:
        return 1.0 - 0.5 * x
    return log1p(x) / x


cdef double _case1(double mu, double rho, double tau, double xnorm) noexcept nogil:
    cdef double p2 = xnorm * xnorm + rho * rho - 2.0 * xnorm * rho * mu
    cdef double p, lam, h, r02, den, d, inner, y, ratio, top
    if p2 <= 0.0:
        return 0.0
    p = sqrt(p2)
    lam = (tau + p2 + rho * rho) / (2.0 * p)
    h = (p2 - tau - rho * rho) / (2.0 * p)
    r02 = rho * rho - lam * lam
    if r02 < 0.0:
        r02 = 0.0
    den = r02 + h * h
    if den < TINY:
        den = TINY
    d = tau + rho * rho
    y = d / den
    if fabs(y) < 0.5:
        ratio = _log1p_ratio(y)
    else:
        # den + d == max(rho^2, lam^2); avoids cancellation near -1
        top = rho * rho if r02 > 0.0 else lam * lam
        if top < TINY:
            top = TINY
        ratio = log(top / den) / y
    inner = M_PI * ratio / den
    return M_PI * xnorm * xnorm * inner / p


cdef double _case2(double mu, double rho, double tau, double xnorm, double restrict) noexcept nogil:
    cdef double q2 = xnorm * xnorm + rho * rho - 2.0 * xnorm * rho * mu
    cdef double r2 = 0.5 * (rho * rho - tau - 0.5 * q2)
    cdef double q, r, pref, a, b, gap, l1, lm, m0, small
    if r2 <= 0.0 or q2 < 0.0:
        return 0.0
    q = sqrt(q2)
    r = sqrt(r2)
    pref = 2.0 * M_PI * xnorm * xnorm
    if q < 1e-300:
        if restrict != 0.0 and r <= rho:
            return 0.0
        return pref * M_PI / (r * r * r)
    a = 0.25 * q2 + r2
    b = q * r
    gap = fabs(0.5 * q - r)
    if gap < TINY:
        gap = TINY
    small = 0.5 * q if 0.5 * q < r else r
    l1 = 2.0 * log1p(2.0 * small / gap)
    if restrict != 0.0:
        m0 = (rho * rho - a) / b
        # a - b*m0 == 2a - rho^2 == -tau, so the cap is empty unless tau < 0
        if m0 >= 1.0 or tau >= 0.0:
            return 0.0
        if m0 <= -1.0:
            lm = -l1
        else:
            lm = log(rho * rho / -tau)
    else:
        lm = -l1
    return pref * M_PI * (l1 - lm) / (4.0 * a * q)


cdef api double case1_llc(int n, double *xx) noexcept nogil:
    # xx = (mu, rho, tau, xnorm)
    return _case1(xx[0], xx[1], xx[2], xx[3])


cdef api double case2_llc(int n, double *xx) noexcept nogil:
    # xx = (mu, rho, tau, xnorm, restrict)
    return _case2(xx[0], xx[1], xx[2], xx[3], xx[4])


def prop_case1(double mu, double rho, double tau, double xnorm):
    return _case1(mu, rho, tau, xnorm)


def prop_case2(double mu, double rho, double tau, double xnorm, double restrict=1.0):
    return _case2(mu, rho, tau, xnorm, restrict)


def prop_case1_vec(rho, mu, double tau, double xnorm):
    r_b, m_b = np.broadcast_arrays(np.asarray(rho, dtype=np.float64), np.asarray(mu, dtype=np.float64))
    cdef double[::1] r = np.ascontiguousarray(r_b).ravel()
    cdef double[::1] m = np.ascontiguousarray(m_b).ravel()
    out = np.empty(r.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(r.shape[0]):
            o[i] = _case1(m[i], r[i], tau, xnorm)
    return out.reshape(r_b.shape)


def prop_case2_vec(rho, mu, double tau, double xnorm, double restrict=1.0):
    r_b, m_b = np.broadcast_arrays(np.asarray(rho, dtype=np.float64), np.asarray(mu, dtype=np.float64))
    cdef double[::1] r = np.ascontiguousarray(r_b).ravel()
    cdef double[::1] m = np.ascontiguousarray(m_b).ravel()
    out = np.empty(r.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(r.shape[0]):
            o[i] = _case2(m[i], r[i], tau, xnorm, restrict)
    return out.reshape(r_b.shape)


def chart_sum(nodes, weights, sing, exps, int chart, int pou_power):
    cdef double[:, ::1] x = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] s = np.ascontiguousarray(sing, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(exps, dtype=np.float64)
    cdef Py_ssize_t n_nodes = x.shape[0], n_sing = s.shape[0]
    cdef Py_ssize_t i, k
    cdef double total = 0.0, d2, dc2, logf, pou, dx, dy, dz, ratio
    cdef double dist2[16]
    cdef bint bad
    if n_sing > 16:
        raise ValueError("at most 16 singular points")
    with nogil:
        for i in range(n_nodes):
            logf = 0.0
            bad = False
            for k in range(n_sing):
                dx = x[i, 0] - s[k, 0]
                dy = x[i, 1] - s[k, 1]
                dz = x[i, 2] - s[k, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 <= 0.0:
                    bad = True
                    break
                dist2[k] = d2
                logf -= 0.5 * a[k] * log(d2)
            if bad:
                continue
            if chart >= 0:
                dc2 = dist2[chart]
                pou = 0.0
                for k in range(n_sing):
                    ratio = dc2 / dist2[k]
                    # p-th power of a squared-distance ratio
                    pou += ratio ** pou_power
                total += w[i] * exp(logf) / pou
            else:
                total += w[i] * exp(logf)
    return total


def reduce_maps(maps):
    arr = np.array(maps, dtype=np.int64, copy=True)
    cdef cnp.int64_t[:, ::1] mu = arr
    cdef Py_ssize_t count = mu.shape[0], n = mu.shape[1]
    headers = np.tile(np.arange(2, n + 2, dtype=np.int64), (count, 1))
    cdef cnp.int64_t[:, ::1] hdr = headers
    cdef Py_ssize_t row, c, j
    cdef cnp.int64_t tmp
    with nogil:
        for row in range(count):
            while True:
                j = -1
                for c in range(n - 1):
                    if mu[row, c + 1] < mu[row, c]:
                        j = c + 2
                        break
                if j < 0:
                    break
                tmp = mu[row, j - 2]
                mu[row, j - 2] = mu[row, j - 1]
                mu[row, j - 1] = tmp
                for c in range(n):
                    if mu[row, c] == j:
                        mu[row, c] = j + 1
                    elif mu[row, c] == j + 1:
                        mu[row, c] = j
                tmp = hdr[row, j - 2]
                hdr[row, j - 2] = hdr[row, j - 1]
                hdr[row, j - 1] = tmp
    return arr, headers
