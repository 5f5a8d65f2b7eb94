"""Pure-numpy kernels. Reference path; the numba path must agree with it."""

from __future__ import annotations

import numpy as np


def _norms(diff: np.ndarray, code: int, p: float) -> np.ndarray:
    if code == 0:
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if code == 1:
        return np.max(np.abs(diff), axis=-1)
    if p == 1.0:
        return np.sum(np.abs(diff), axis=-1)
    return np.sum(np.abs(diff) ** p, axis=-1) ** (1.0 / p)


def row_norms(x, code, p):
    return _norms(np.asarray(x, dtype=float), code, p)


def pair_sqdist(a, b, code, p):
    diff = a[:, None, :] - b[None, :, :]
    nrm = _norms(diff, code, p)
    return nrm * nrm


def combination_points(pa, pb, t):
    # z[i, j, k] = t_k * pa_i + (1 - t_k) * pb_j
    tt = t[None, None, :, None]
    return tt * pa[:, None, None, :] + (1.0 - tt) * pb[None, :, None, :]


def _first_within(values, mask, tie):
    sel = values[mask]
    if sel.size == 0:
        return np.inf, -1
    m = sel.min()
    idx = np.flatnonzero(mask & (values <= m + tie))
    return float(m), int(idx[0])


def slack_scan(fa, fb, fz, d2, t, c, tol_abs, tol_rel, tie):
    w = t * (1.0 - t)
    rhs = (t[None, None, :] * fa[:, None, None] + (1.0 - t)[None, None, :] * fb[None, :, None]) - (
        c * w[None, None, :] * d2[:, :, None]
    )
    slack = (rhs - fz).ravel()
    thr = tol_abs + tol_rel * np.maximum(np.abs(fz), np.abs(rhs)).ravel()
    viol = slack < -thr
    everything = np.ones(slack.shape, dtype=bool)
    m, idx = _first_within(slack, everything, tie)
    vm, vidx = _first_within(slack, viol, tie)
    return m, idx, int(viol.sum()), vm, vidx


def ratio_scan(fa, fb, fz, d2, t, min_d2, noise_rel, pad, tie):
    w = t * (1.0 - t)
    ta = t[None, None, :] * fa[:, None, None]
    tb = (1.0 - t)[None, None, :] * fb[None, :, None]
    defect = (ta + tb) - fz
    denom = w[None, None, :] * d2[:, :, None]
    scale = np.abs(ta) + np.abs(tb) + np.abs(fz)
    valid = (
        ((t > 0.0) & (t < 1.0))[None, None, :]
        & (d2 >= min_d2)[:, :, None]
        & (denom >= noise_rel * scale)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(valid, denom, 1.0)
        ratio = np.where(valid, defect / safe + pad * scale / safe, np.inf).ravel()
    valid = valid.ravel()
    m, idx = _first_within(ratio, valid, tie)
    return m, idx, int(valid.sum())


def parallelogram_scan(u, v, code, p, tie):
    nu = _norms(u, code, p)
    nv = _norms(v, code, p)
    ns = _norms(u + v, code, p)
    nd = _norms(u - v, code, p)
    pdef = ns * ns + nd * nd - 2.0 * (nu * nu) - 2.0 * (nv * nv)
    a = np.abs(pdef)
    m = a.max()
    idx = int(np.flatnonzero(a >= m - tie)[0])
    return float(m), idx, float(pdef[idx])
