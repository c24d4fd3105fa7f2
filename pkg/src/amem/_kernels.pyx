# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: fixed-order dense products, power iteration, Hessenberg QR.

Every reduction runs in a fixed sequential order and the extension is built
with ``-ffp-contract=off`` so results match ``amem._fallback`` bit for bit.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, log, exp

cnp.import_array()


cdef inline double _sign(double a, double b) nogil:
    return fabs(a) if b >= 0.0 else -fabs(a)


def matmul(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], p = b.shape[1]
    cdef Py_ssize_t i, k, j
    cdef double aik
    out = np.zeros((n, p), dtype=np.float64)
    cdef double[:, ::1] c = out
    with nogil:
        for i in range(n):
            for k in range(m):
                aik = a[i, k]
                for j in range(p):
                    c[i, j] = c[i, j] + aik * b[k, j]
    return out


cdef void _matvec(const double[:, ::1] a, const double[::1] x, double[::1] y) nogil:
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1]
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(n):
        acc = 0.0
        for k in range(m):
            acc = acc + a[i, k] * x[k]
        y[i] = acc


def matvec(const double[:, ::1] a, const double[::1] x):
    out = np.empty(a.shape[0], dtype=np.float64)
    cdef double[::1] y = out
    with nogil:
        _matvec(a, x, y)
    return out


cdef inline double _dot(const double[::1] x, const double[::1] y) nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(x.shape[0]):
        acc = acc + x[i] * y[i]
    return acc


def power_iteration(const double[:, ::1] j, const double[::1] v0, double tol,
                    int max_iter, int stable_needed):
    """Growth-rate and two-term-recurrence estimates of the spectral radius.

    Returns ``(rho, method, iters, converged, growth, pair, pair_residual)``
    where method is 0 for the growth rate and 1 for the recurrence fit.
    """
    cdef Py_ssize_t n = j.shape[0]
    cdef Py_ssize_t i
    cdef int it, growth_stable = 0, pair_stable = 0, method = 0, converged = 0
    cdef double nrm, prev_log = 0.0, cur_log, growth = 0.0, prev_growth = -1.0
    cdef double c, det, ry0, ry1, alpha_n, beta_n, alpha, beta, disc, r1, r2
    cdef double pair = -1.0, prev_pair = -1.0, pair_res = 1.0, res, ynorm2
    cdef double prev_n = 0.0

    v_arr = np.array(v0, dtype=np.float64)
    vp_arr = np.zeros(n, dtype=np.float64)
    y_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] v = v_arr
    cdef double[::1] vp = vp_arr
    cdef double[::1] y = y_arr

    nrm = sqrt(_dot(v, v))
    if nrm == 0.0:
        raise ValueError("zero start vector")
    for i in range(n):
        v[i] = v[i] / nrm

    it = 0
    with nogil:
        while it < max_iter:
            it += 1
            _matvec(j, v, y)
            ynorm2 = _dot(y, y)
            nrm = sqrt(ynorm2)
            if nrm == 0.0:
                growth = 0.0
                pair = 0.0
                method = 0
                converged = 1
                break
            cur_log = log(nrm)
            if it >= 2:
                growth = exp(0.5 * (cur_log + prev_log))
                if fabs(growth - prev_growth) <= tol * growth:
                    growth_stable += 1
                else:
                    growth_stable = 0
                prev_growth = growth

                # fit y ~ a' v + b' vp, with v = J vp / prev_n
                c = _dot(v, vp)
                det = 1.0 - c * c
                if det > 1e-10:
                    ry0 = _dot(y, v)
                    ry1 = _dot(y, vp)
                    alpha_n = (ry0 - c * ry1) / det
                    beta_n = (ry1 - c * ry0) / det
                    res = ynorm2 - alpha_n * ry0 - beta_n * ry1
                    if res < 0.0:
                        res = 0.0
                    pair_res = sqrt(res) / nrm
                    alpha = alpha_n
                    beta = beta_n * prev_n
                    disc = alpha * alpha + 4.0 * beta
                    if disc >= 0.0:
                        r1 = fabs(0.5 * (alpha + sqrt(disc)))
                        r2 = fabs(0.5 * (alpha - sqrt(disc)))
                        pair = r1 if r1 > r2 else r2
                    else:
                        pair = sqrt(-beta)
                    if pair_res < 1e-6 and fabs(pair - prev_pair) <= tol * pair:
                        pair_stable += 1
                    else:
                        pair_stable = 0
                    prev_pair = pair
                else:
                    pair_stable = 0
            prev_log = cur_log
            prev_n = nrm
            for i in range(n):
                vp[i] = v[i]
                v[i] = y[i] / nrm
            if growth_stable >= stable_needed:
                method = 0
                converged = 1
                break
            if pair_stable >= stable_needed:
                method = 1
                converged = 1
                break

    rho = pair if method == 1 else growth
    return rho, method, it, bool(converged), growth, pair, pair_res


def hessenberg(const double[:, ::1] a_in):
    """Householder reduction to upper Hessenberg form (returns a copy)."""
    cdef Py_ssize_t n = a_in.shape[0]
    cdef Py_ssize_t m, i, j
    cdef double scale, h, g, f
    out = np.array(a_in, dtype=np.float64)
    ort_arr = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] a = out
    cdef double[::1] ort = ort_arr
    with nogil:
        for m in range(1, n - 1):
            scale = 0.0
            for i in range(m, n):
                scale = scale + fabs(a[i, m - 1])
            if scale == 0.0:
                continue
            h = 0.0
            for i in range(n - 1, m - 1, -1):
                ort[i] = a[i, m - 1] / scale
                h = h + ort[i] * ort[i]
            g = sqrt(h)
            if ort[m] > 0.0:
                g = -g
            h = h - ort[m] * g
            ort[m] = ort[m] - g
            for j in range(m, n):
                f = 0.0
                for i in range(n - 1, m - 1, -1):
                    f = f + ort[i] * a[i, j]
                f = f / h
                for i in range(m, n):
                    a[i, j] = a[i, j] - f * ort[i]
            for i in range(n):
                f = 0.0
                for j in range(n - 1, m - 1, -1):
                    f = f + ort[j] * a[i, j]
                f = f / h
                for j in range(m, n):
                    a[i, j] = a[i, j] - f * ort[j]
            a[m, m - 1] = scale * g
            for i in range(m + 1, n):
                a[i, m - 1] = 0.0
    return out


def hqr(const double[:, ::1] h_in, int max_its):
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.

    Returns ``(wr, wi, ok)``; ``ok`` is False when some eigenvalue needed more
    than ``max_its`` iterations.
    """
    cdef Py_ssize_t n = h_in.shape[0]
    cdef Py_ssize_t nn, l, m, k, i, j, mmin, ii, jj
    cdef int its = 0, ok = 1
    cdef double anorm = 0.0, t = 0.0, s, x, y, w, p, q, r, z, u, vv
    a_arr = np.array(h_in, dtype=np.float64)
    wr_arr = np.zeros(n, dtype=np.float64)
    wi_arr = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    cdef double[::1] wr = wr_arr
    cdef double[::1] wi = wi_arr

    with nogil:
        for ii in range(n):
            jj = ii - 1 if ii > 0 else 0
            while jj < n:
                anorm = anorm + fabs(a[ii, jj])
                jj += 1
        nn = n - 1
        while nn >= 0:
            l = nn
            while l >= 1:
                s = fabs(a[l - 1, l - 1]) + fabs(a[l, l])
                if s == 0.0:
                    s = anorm
                if fabs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                its = 0
                continue
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = sqrt(fabs(q))
                x = x + t
                if q >= 0.0:
                    z = p + _sign(z, p)
                    wr[nn - 1] = x + z
                    wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = 0.0
                    wi[nn] = 0.0
                else:
                    wr[nn - 1] = x + p
                    wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                its = 0
                continue
            if its >= max_its:
                ok = 0
                break
            if its > 0 and its % 10 == 0:
                t = t + x
                for i in range(nn + 1):
                    a[i, i] = a[i, i] - x
                s = fabs(a[nn, nn - 1]) + fabs(a[nn - 1, nn - 2])
                x = 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = fabs(p) + fabs(q) + fabs(r)
                p = p / s
                q = q / s
                r = r / s
                if m == l:
                    break
                u = fabs(a[m, m - 1]) * (fabs(q) + fabs(r))
                vv = fabs(p) * (fabs(a[m - 1, m - 1]) + fabs(z) + fabs(a[m + 1, m + 1]))
                if u + vv == vv:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            k = m
            while k <= nn - 1:
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = a[k + 2, k - 1]
                    x = fabs(p) + fabs(q) + fabs(r)
                    if x != 0.0:
                        p = p / x
                        q = q / x
                        r = r / x
                s = _sign(sqrt(p * p + q * q + r * r), p)
                if s != 0.0:
                    if k == m:
                        if l != m:
                            a[k, k - 1] = -a[k, k - 1]
                    else:
                        a[k, k - 1] = -s * x
                    p = p + s
                    x = p / s
                    y = q / s
                    z = r / s
                    q = q / p
                    r = r / p
                    for j in range(k, nn + 1):
                        p = a[k, j] + q * a[k + 1, j]
                        if k != nn - 1:
                            p = p + r * a[k + 2, j]
                            a[k + 2, j] = a[k + 2, j] - p * z
                        a[k + 1, j] = a[k + 1, j] - p * y
                        a[k, j] = a[k, j] - p * x
                    mmin = nn if nn < k + 3 else k + 3
                    for i in range(l, mmin + 1):
                        p = x * a[i, k] + y * a[i, k + 1]
                        if k != nn - 1:
                            p = p + z * a[i, k + 2]
                            a[i, k + 2] = a[i, k + 2] - p * r
                        a[i, k + 1] = a[i, k + 1] - p * q
                        a[i, k] = a[i, k] - p
                k += 1
    return wr_arr, wi_arr, bool(ok)
