"""Pure-Python/numpy versions of the kernels in ``_kernels.pyx``.

Each routine keeps the compiled kernel's operation order (products are
accumulated one term at a time, left to right), so the two backends agree
to the last bit on the same inputs.  ``np.cumsum`` is used wherever a
sequential sum is needed because it never reassociates.
"""
from __future__ import annotations

import math

import numpy as np


def _seq_sum(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.cumsum(x)[-1]) + 0.0


def _dot(x: np.ndarray, y: np.ndarray) -> float:
    return _seq_sum(x * y)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        c += np.multiply.outer(a[:, k], b[k, :])
    return c


def matvec(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    if a.shape[1] == 0:
        return np.zeros(a.shape[0])
    return np.cumsum(a * x, axis=1)[:, -1] + 0.0


def power_iteration(j, v0, tol, max_iter, stable_needed):
    n = j.shape[0]
    v = np.array(v0, dtype=np.float64)
    nrm = math.sqrt(_dot(v, v))
    if nrm == 0.0:
        raise ValueError("zero start vector")
    v = v / nrm
    vp = np.zeros(n)
    growth = 0.0
    prev_growth = -1.0
    pair = -1.0
    prev_pair = -1.0
    pair_res = 1.0
    prev_log = 0.0
    prev_n = 0.0
    growth_stable = pair_stable = 0
    method = 0
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        y = matvec(j, v)
        ynorm2 = _dot(y, y)
        nrm = math.sqrt(ynorm2)
        if nrm == 0.0:
            growth = pair = 0.0
            method = 0
            converged = True
            break
        cur_log = math.log(nrm)
        if it >= 2:
            growth = math.exp(0.5 * (cur_log + prev_log))
            if abs(growth - prev_growth) <= tol * growth:
                growth_stable += 1
            else:
                growth_stable = 0
            prev_growth = growth

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
                pair_res = math.sqrt(res) / nrm
                alpha = alpha_n
                beta = beta_n * prev_n
                disc = alpha * alpha + 4.0 * beta
                if disc >= 0.0:
                    r1 = abs(0.5 * (alpha + math.sqrt(disc)))
                    r2 = abs(0.5 * (alpha - math.sqrt(disc)))
                    pair = r1 if r1 > r2 else r2
                else:
                    pair = math.sqrt(-beta)
                if pair_res < 1e-6 and abs(pair - prev_pair) <= tol * pair:
                    pair_stable += 1
                else:
                    pair_stable = 0
                prev_pair = pair
            else:
                pair_stable = 0
        prev_log = cur_log
        prev_n = nrm
        vp = v
        v = y / nrm
        if growth_stable >= stable_needed:
            method, converged = 0, True
            break
        if pair_stable >= stable_needed:
            method, converged = 1, True
            break
    rho = pair if method == 1 else growth
    return rho, method, it, converged, growth, pair, pair_res


def hessenberg(a_in: np.ndarray) -> np.ndarray:
    a = np.array(a_in, dtype=np.float64)
    n = a.shape[0]
    ort = np.zeros(n)
    for m in range(1, n - 1):
        scale = _seq_sum(np.abs(a[m:, m - 1]))
        if scale == 0.0:
            continue
        ort[m:] = a[m:, m - 1] / scale
        h = _seq_sum((ort[m:] * ort[m:])[::-1])
        g = math.sqrt(h)
        if ort[m] > 0.0:
            g = -g
        h = h - ort[m] * g
        ort[m] = ort[m] - g
        f = np.zeros(n - m)
        for i in range(n - 1, m - 1, -1):
            f = f + ort[i] * a[i, m:]
        f = f / h
        a[m:, m:] -= np.multiply.outer(ort[m:], f)
        f = np.zeros(n)
        for jj in range(n - 1, m - 1, -1):
            f = f + ort[jj] * a[:, jj]
        f = f / h
        a[:, m:] -= np.multiply.outer(f, ort[m:])
        a[m, m - 1] = scale * g
        a[m + 1:, m - 1] = 0.0
    return a


def _sign(a: float, b: float) -> float:
    return abs(a) if b >= 0.0 else -abs(a)


def hqr(h_in: np.ndarray, max_its: int):
    a = np.array(h_in, dtype=np.float64)
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = _seq_sum(np.concatenate([np.abs(a[ii, max(ii - 1, 0):]) for ii in range(n)])) if n else 0.0
    t = 0.0
    its = 0
    ok = True
    nn = n - 1
    while nn >= 0:
        l = nn
        while l >= 1:
            s = abs(a[l - 1, l - 1]) + abs(a[l, l])
            if s == 0.0:
                s = anorm
            if abs(a[l, l - 1]) + s == s:
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
            z = math.sqrt(abs(q))
            x = x + t
            if q >= 0.0:
                z = p + _sign(z, p)
                wr[nn - 1] = wr[nn] = x + z
                if z != 0.0:
                    wr[nn] = x - w / z
                wi[nn - 1] = wi[nn] = 0.0
            else:
                wr[nn - 1] = wr[nn] = x + p
                wi[nn - 1] = -z
                wi[nn] = z
            nn -= 2
            its = 0
            continue
        if its >= max_its:
            ok = False
            break
        if its > 0 and its % 10 == 0:
            t = t + x
            idx = np.arange(nn + 1)
            a[idx, idx] -= x
            s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
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
            s = abs(p) + abs(q) + abs(r)
            p, q, r = p / s, q / s, r / s
            if m == l:
                break
            u = abs(a[m, m - 1]) * (abs(q) + abs(r))
            vv = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
            if u + vv == vv:
                break
            m -= 1
        for i in range(m + 2, nn + 1):
            a[i, i - 2] = 0.0
            if i != m + 2:
                a[i, i - 3] = 0.0
        for k in range(m, nn):
            if k != m:
                p = a[k, k - 1]
                q = a[k + 1, k - 1]
                r = 0.0
                if k != nn - 1:
                    r = a[k + 2, k - 1]
                x = abs(p) + abs(q) + abs(r)
                if x != 0.0:
                    p, q, r = p / x, q / x, r / x
            s = _sign(math.sqrt(p * p + q * q + r * r), p)
            if s == 0.0:
                continue
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
            cols = slice(k, nn + 1)
            pv = a[k, cols] + q * a[k + 1, cols]
            if k != nn - 1:
                pv = pv + r * a[k + 2, cols]
                a[k + 2, cols] = a[k + 2, cols] - pv * z
            a[k + 1, cols] = a[k + 1, cols] - pv * y
            a[k, cols] = a[k, cols] - pv * x
            mmin = nn if nn < k + 3 else k + 3
            rows = slice(l, mmin + 1)
            pv = x * a[rows, k] + y * a[rows, k + 1]
            if k != nn - 1:
                pv = pv + z * a[rows, k + 2]
                a[rows, k + 2] = a[rows, k + 2] - pv * r
            a[rows, k + 1] = a[rows, k + 1] - pv * q
            a[rows, k] = a[rows, k] - pv
    return wr, wi, ok
