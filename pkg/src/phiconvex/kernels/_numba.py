"""numba-compiled kernels; same signatures and scan order as the numpy path."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _norm_vec(x, code, p):
    n = x.shape[0]
    if code == 0:
        s = 0.0
        for k in range(n):
            s += x[k] * x[k]
        return math.sqrt(s)
    if code == 1:
        s = 0.0
        for k in range(n):
            a = abs(x[k])
            if a > s:
                s = a
        return s
    s = 0.0
    if p == 1.0:
        for k in range(n):
            s += abs(x[k])
        return s
    for k in range(n):
        s += abs(x[k]) ** p
    return s ** (1.0 / p)


@njit(cache=True)
def row_norms(x, code, p):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _norm_vec(x[i], code, p)
    return out


@njit(cache=True)
def pair_sqdist(a, b, code, p):
    n_a, n_b, dim = a.shape[0], b.shape[0], a.shape[1]
    out = np.empty((n_a, n_b))
    diff = np.empty(dim)
    for i in range(n_a):
        for j in range(n_b):
            for k in range(dim):
                diff[k] = a[i, k] - b[j, k]
            r = _norm_vec(diff, code, p)
            out[i, j] = r * r
    return out


@njit(cache=True)
def combination_points(pa, pb, t):
    n_a, n_b, n_t, dim = pa.shape[0], pb.shape[0], t.shape[0], pa.shape[1]
    out = np.empty((n_a, n_b, n_t, dim))
    for i in range(n_a):
        for j in range(n_b):
            for k in range(n_t):
                tk = t[k]
                for q in range(dim):
                    out[i, j, k, q] = tk * pa[i, q] + (1.0 - tk) * pb[j, q]
    return out


@njit(cache=True)
def slack_scan(fa, fb, fz, d2, t, c, tol_abs, tol_rel, tie):
    n_a, n_b, n_t = fz.shape
    m = np.inf
    vm = np.inf
    nviol = 0
    # pass 1: minima
    for i in range(n_a):
        for j in range(n_b):
            for k in range(n_t):
                tk = t[k]
                w = tk * (1.0 - tk)
                rhs = (tk * fa[i] + (1.0 - tk) * fb[j]) - (c * w * d2[i, j])
                lhs = fz[i, j, k]
                s = rhs - lhs
                if s < m:
                    m = s
                thr = tol_abs + tol_rel * max(abs(lhs), abs(rhs))
                if s < -thr:
                    nviol += 1
                    if s < vm:
                        vm = s
    # pass 2: first index within tie of each minimum
    idx = -1
    vidx = -1
    flat = 0
    for i in range(n_a):
        for j in range(n_b):
            for k in range(n_t):
                tk = t[k]
                w = tk * (1.0 - tk)
                rhs = (tk * fa[i] + (1.0 - tk) * fb[j]) - (c * w * d2[i, j])
                lhs = fz[i, j, k]
                s = rhs - lhs
                if idx < 0 and s <= m + tie:
                    idx = flat
                if vidx < 0 and nviol > 0:
                    thr = tol_abs + tol_rel * max(abs(lhs), abs(rhs))
                    if s < -thr and s <= vm + tie:
                        vidx = flat
                flat += 1
    return m, idx, nviol, vm, vidx


@njit(cache=True)
def _ratio_at(fa_i, fb_j, fz_ijk, d2_ij, tk, min_d2, noise_rel, pad):
    # returns inf for excluded triples; pad * scale / denom bounds the rounding error
    if tk <= 0.0 or tk >= 1.0 or not d2_ij >= min_d2:
        return np.inf
    w = tk * (1.0 - tk)
    ta = tk * fa_i
    tb = (1.0 - tk) * fb_j
    denom = w * d2_ij
    scale = abs(ta) + abs(tb) + abs(fz_ijk)
    if not denom >= noise_rel * scale:
        return np.inf
    return ((ta + tb) - fz_ijk) / denom + pad * scale / denom


@njit(cache=True)
def ratio_scan(fa, fb, fz, d2, t, min_d2, noise_rel, pad, tie):
    n_a, n_b, n_t = fz.shape
    m = np.inf
    count = 0
    for i in range(n_a):
        for j in range(n_b):
            for k in range(n_t):
                r = _ratio_at(fa[i], fb[j], fz[i, j, k], d2[i, j], t[k], min_d2, noise_rel, pad)
                if r != np.inf:
                    count += 1
                    if r < m:
                        m = r
    idx = -1
    if count > 0:
        flat = 0
        for i in range(n_a):
            for j in range(n_b):
                for k in range(n_t):
                    if idx < 0:
                        r = _ratio_at(fa[i], fb[j], fz[i, j, k], d2[i, j], t[k], min_d2, noise_rel, pad)
                        if r != np.inf and r <= m + tie:
                            idx = flat
                    flat += 1
    return m, idx, count


@njit(cache=True)
def parallelogram_scan(u, v, code, p, tie):
    n, dim = u.shape
    vals = np.empty(n)
    s = np.empty(dim)
    d = np.empty(dim)
    m = -1.0
    for i in range(n):
        for k in range(dim):
            s[k] = u[i, k] + v[i, k]
            d[k] = u[i, k] - v[i, k]
        nu = _norm_vec(u[i], code, p)
        nv = _norm_vec(v[i], code, p)
        ns = _norm_vec(s, code, p)
        nd = _norm_vec(d, code, p)
        pdef = ns * ns + nd * nd - 2.0 * (nu * nu) - 2.0 * (nv * nv)
        vals[i] = pdef
        if abs(pdef) > m:
            m = abs(pdef)
    idx = 0
    for i in range(n):
        if abs(vals[i]) >= m - tie:
            idx = i
            break
    return m, idx, vals[idx]
