"""Strong phi-convexity: defects, grid checks, modulus estimation, segment and shift tests.

All verdicts are "on grid": a base grid is scanned, then ``refinement_rounds``
local grids are scanned around the worst triple found so far. Scan order is
lexicographic in (x, y, t); among triples within ``TIE`` of the worst value
the first one scanned is reported.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .domain import (
    GridSpec,
    NormedSpace,
    PhiMap,
    ShiftedFunction,
    ViolationWitness,
    as_points,
    axis_grid,
    make_grid,
)
from .errors import DegenerateSegmentError, DomainError

TIE = 1e-12
TOL_ABS = 1e-9
TOL_REL = 1e-9
# a ratio triple is kept only if t(1-t)||phi x - phi y||^2 >= NOISE_REL * (|t f(phi x)| + |(1-t) f(phi y)| + |f(z)|),
# which bounds the rounding error of the ratio by about 4 * eps / NOISE_REL
NOISE_REL = 1e7 * np.finfo(float).eps
# each kept ratio is scored with its rounding bound NOISE_PAD * scale / denom added,
# so triples whose ratio is mostly noise cannot win the minimum
NOISE_PAD = 4.0 * np.finfo(float).eps

__all__ = [
    "CheckResult",
    "ModulusEstimate",
    "SegmentVerdict",
    "ShiftLemmaReport",
    "defect",
    "defects",
    "check_strong_phi_convex",
    "check_strong_phi_midconvex",
    "estimate_modulus",
    "segment_restriction_convex",
    "shift_identity_residual",
    "shift_identity_residuals",
    "shift_lemma_report",
]


@dataclass(frozen=True)
class CheckResult:
    holds: bool
    c: float
    witness: ViolationWitness | None
    min_slack: float
    min_triple: tuple[tuple[float, ...], tuple[float, ...], float]
    triples_scanned: int
    violations: int
    rounds: int
    midpoint_only: bool = False

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "violated"


@dataclass(frozen=True)
class ModulusEstimate:
    c_star: float
    minimizing_triple: tuple[tuple[float, ...], tuple[float, ...], float]
    pairs_examined: int
    delta_used: float
    triples_examined: int = 0
    rounds: int = 0


@dataclass(frozen=True)
class SegmentVerdict:
    holds: bool
    min_second_difference: float
    t_at_min: float
    second_differences: np.ndarray = field(repr=False, compare=False)


def _check_dims(f, phi: PhiMap, space: NormedSpace):
    if not (f.arity == phi.dim == space.dim):
        raise DomainError(f"dimension mismatch: f has arity {f.arity}, phi dim {phi.dim}, space dim {space.dim}")


# ---------------------------------------------------------------------------
# Pointwise defects


def defects(f, phi: PhiMap, x, y, t) -> np.ndarray:
    """Elementwise defect for aligned arrays of x points, y points and t values."""
    px = phi(as_points(x, phi.dim))
    py = phi(as_points(y, phi.dim))
    t = np.broadcast_to(np.asarray(t, dtype=float), (px.shape[0],))
    z = t[:, None] * px + (1.0 - t)[:, None] * py
    return (t * f(px) + (1.0 - t) * f(py)) - f(z)


def defect(f, phi: PhiMap, space: NormedSpace, x, y, t: float) -> float:
    """``t f(phi x) + (1-t) f(phi y) - f(t phi x + (1-t) phi y)``."""
    _check_dims(f, phi, space)
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    return float(defects(f, phi, as_points(x, phi.dim), as_points(y, phi.dim), t)[0])


# ---------------------------------------------------------------------------
# Grid scans


def _eval_chunked(f, pts: np.ndarray, workers: int) -> np.ndarray:
    if workers <= 1 or pts.shape[0] < 2 * workers:
        return f(pts)
    chunks = np.array_split(pts, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(f, chunks))
    return np.concatenate(parts)


@dataclass
class _Tables:
    xs: np.ndarray
    ys: np.ndarray
    t: np.ndarray
    fa: np.ndarray
    fb: np.ndarray
    fz: np.ndarray
    d2: np.ndarray

    def triple(self, flat: int):
        n_y, n_t = self.ys.shape[0], self.t.shape[0]
        i, rem = divmod(flat, n_y * n_t)
        j, k = divmod(rem, n_t)
        return i, j, k


def _tables(f, phi, space, xs, ys, t, kern, workers) -> _Tables:
    pa = phi(xs)
    pb = pa if ys is xs else phi(ys)
    fa = f(pa)
    fb = fa if pb is pa else f(pb)
    z = kern.combination_points(pa, pb, t)
    n = phi.dim
    fz = _eval_chunked(f, z.reshape(-1, n), workers).reshape(xs.shape[0], ys.shape[0], t.shape[0])
    d2 = kern.pair_sqdist(pa, pb, space.code, space.p_value)
    return _Tables(xs, ys, t, fa, fb, fz, d2)


def _local_axis_grid(center: np.ndarray, half: np.ndarray, lows, highs, m: int) -> np.ndarray:
    axes = [axis_grid(max(lo, c - h), min(hi, c + h), m) for c, h, lo, hi in zip(center, half, lows, highs)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


class _Refiner:
    """Yields (xs, ys, t) for the base round and each refinement round."""

    def __init__(self, region, grid: GridSpec, midpoint_only: bool):
        self.region = region
        self.grid = grid
        self.lows, self.highs = region.lows, region.highs
        self.base = make_grid(region, grid)
        self.midpoint_only = midpoint_only
        self.t = np.array([0.5]) if midpoint_only else grid.t_grid()
        m = grid.points_per_axis
        self.hx = (self.highs - self.lows) / (m - 1)
        self.hy = self.hx.copy()
        self.ht = 1.0 / (grid.t_steps - 1)

    def first(self):
        return self.base, self.base, self.t

    def around(self, x, y, t):
        m = self.grid.points_per_axis
        xs = _local_axis_grid(np.asarray(x), self.hx, self.lows, self.highs, m)
        ys = _local_axis_grid(np.asarray(y), self.hy, self.lows, self.highs, m)
        self.hx = 2.0 * self.hx / (m - 1)
        self.hy = 2.0 * self.hy / (m - 1)
        if self.midpoint_only:
            ts = self.t
        else:
            ts = axis_grid(max(0.0, t - self.ht), min(1.0, t + self.ht), self.grid.t_steps)
            self.ht = 2.0 * self.ht / (self.grid.t_steps - 1)
        return xs, ys, ts


def _run_check(f, phi, space, c, grid, tol_abs, tol_rel, midpoint_only, workers, backend) -> CheckResult:
    _check_dims(f, phi, space)
    if c < 0:
        raise ValueError("modulus c must be non-negative")
    kern = kernels.get_backend(backend)
    refiner = _Refiner(phi.domain, grid, midpoint_only)
    xs, ys, ts = refiner.first()

    best = None  # (slack, x, y, t)
    worst = None  # (slack, ViolationWitness)
    scanned = violations = 0
    for rnd in range(grid.refinement_rounds + 1):
        tab = _tables(f, phi, space, xs, ys, ts, kern, workers)
        m, idx, nviol, vm, vidx = kern.slack_scan(tab.fa, tab.fb, tab.fz, tab.d2, tab.t, float(c), tol_abs, tol_rel, TIE)
        scanned += tab.fz.size
        violations += int(nviol)
        i, j, k = tab.triple(int(idx))
        if best is None or m < best[0] - TIE:
            best = (float(m), xs[i].copy(), ys[j].copy(), float(ts[k]))
        if vidx >= 0 and (worst is None or vm < worst[0] - TIE):
            i, j, k = tab.triple(int(vidx))
            tk = float(ts[k])
            lhs = float(tab.fz[i, j, k])
            rhs = float((tk * tab.fa[i] + (1.0 - tk) * tab.fb[j]) - (c * (tk * (1.0 - tk)) * tab.d2[i, j]))
            worst = (float(vm), ViolationWitness(xs[i], ys[j], tk, lhs, rhs, rhs - lhs))
        if rnd < grid.refinement_rounds:
            xs, ys, ts = refiner.around(best[1], best[2], best[3])

    _, bx, by, bt = best
    return CheckResult(
        holds=worst is None,
        c=float(c),
        witness=None if worst is None else worst[1],
        min_slack=best[0],
        min_triple=(tuple(map(float, bx)), tuple(map(float, by)), bt),
        triples_scanned=scanned,
        violations=violations,
        rounds=grid.refinement_rounds,
        midpoint_only=midpoint_only,
    )


def check_strong_phi_convex(
    f,
    phi: PhiMap,
    space: NormedSpace,
    c: float,
    grid: GridSpec = GridSpec(),
    tol_abs: float = TOL_ABS,
    tol_rel: float = TOL_REL,
    *,
    workers: int = 1,
    backend: str | None = None,
) -> CheckResult:
    """Check ``f(t phi x + (1-t) phi y) <= t f(phi x) + (1-t) f(phi y) - c t(1-t) ||phi x - phi y||^2``.

    A triple violates when ``slack = rhs - lhs < -(tol_abs + tol_rel * max(|lhs|, |rhs|))``.
    ``c = 0`` tests plain phi-convexity. The returned witness is the
    most negative violating triple over all rounds.
    """
    return _run_check(f, phi, space, c, grid, tol_abs, tol_rel, False, workers, backend)


def check_strong_phi_midconvex(
    f,
    phi: PhiMap,
    space: NormedSpace,
    c: float,
    grid: GridSpec = GridSpec(),
    tol_abs: float = TOL_ABS,
    tol_rel: float = TOL_REL,
    *,
    workers: int = 1,
    backend: str | None = None,
) -> CheckResult:
    """As :func:`check_strong_phi_convex` with t fixed at 1/2."""
    return _run_check(f, phi, space, c, grid, tol_abs, tol_rel, True, workers, backend)


def estimate_modulus(
    f,
    phi: PhiMap,
    space: NormedSpace,
    grid: GridSpec = GridSpec(),
    *,
    workers: int = 1,
    backend: str | None = None,
) -> ModulusEstimate:
    """Smallest defect ratio ``D(x,y,t) / (t(1-t) ||phi x - phi y||^2)`` on the grid.

    Triples with t in {0, 1}, with ``||phi x - phi y|| < grid.min_separation``,
    or whose denominator is too small to resolve the defect above rounding
    noise (see ``NOISE_REL``) are skipped. Each kept ratio carries its
    rounding bound (``NOISE_PAD``), so the estimate errs upward by at most
    that bound instead of downward by noise. A negative result means f is
    not even phi-convex on the grid.
    """
    _check_dims(f, phi, space)
    kern = kernels.get_backend(backend)
    refiner = _Refiner(phi.domain, grid, midpoint_only=False)
    xs, ys, ts = refiner.first()
    min_d2 = grid.min_separation**2

    best = None
    pairs = triples = 0
    for rnd in range(grid.refinement_rounds + 1):
        tab = _tables(f, phi, space, xs, ys, ts, kern, workers)
        m, idx, count = kern.ratio_scan(tab.fa, tab.fb, tab.fz, tab.d2, tab.t, min_d2, NOISE_REL, NOISE_PAD, TIE)
        pairs += int(np.count_nonzero(tab.d2 >= min_d2))
        triples += int(count)
        if idx >= 0:
            i, j, k = tab.triple(int(idx))
            if best is None or m < best[0] - TIE:
                best = (float(m), xs[i].copy(), ys[j].copy(), float(ts[k]))
        if best is None:
            break
        if rnd < grid.refinement_rounds:
            xs, ys, ts = refiner.around(best[1], best[2], best[3])

    if best is None:
        raise DegenerateSegmentError(
            f"every grid pair has ||phi(x) - phi(y)|| < {grid.min_separation:g}; phi is degenerate on this grid"
        )
    c_star, bx, by, bt = best
    return ModulusEstimate(
        c_star=c_star,
        minimizing_triple=(tuple(map(float, bx)), tuple(map(float, by)), bt),
        pairs_examined=pairs,
        delta_used=grid.min_separation,
        triples_examined=triples,
        rounds=grid.refinement_rounds,
    )


# ---------------------------------------------------------------------------
# Segment restriction and shift identity


def segment_restriction_convex(f, phi: PhiMap, x, y, t_steps: int = 21, tol: float = 1e-10) -> SegmentVerdict:
    """Convexity of ``g(t) = f(t phi x + (1-t) phi y)`` via second differences on a uniform t grid."""
    if t_steps < 3:
        raise ValueError("t_steps must be at least 3")
    px = phi(as_points(x, phi.dim))[0]
    py = phi(as_points(y, phi.dim))[0]
    t = axis_grid(0.0, 1.0, t_steps)
    g = f(t[:, None] * px[None, :] + (1.0 - t)[:, None] * py[None, :])
    second = g[:-2] - 2.0 * g[1:-1] + g[2:]
    k = int(np.argmin(second))
    return SegmentVerdict(
        holds=bool(second[k] >= -tol),
        min_second_difference=float(second[k]),
        t_at_min=float(t[k + 1]),
        second_differences=second,
    )


def shift_identity_residuals(f, phi: PhiMap, space: NormedSpace, c: float, x, y, t) -> np.ndarray:
    """Vectorised :func:`shift_identity_residual` over aligned arrays."""
    _check_dims(f, phi, space)
    xs, ys = as_points(x, phi.dim), as_points(y, phi.dim)
    t = np.broadcast_to(np.asarray(t, dtype=float), (xs.shape[0],))
    g = ShiftedFunction(f, c, space)
    d_f = defects(f, phi, xs, ys, t)
    d_g = defects(g, phi, xs, ys, t)
    gap = space.norm(phi(xs) - phi(ys)) ** 2
    return d_g - (d_f - c * (t * (1.0 - t)) * gap)


def shift_identity_residual(f, phi: PhiMap, space: NormedSpace, c: float, x, y, t: float) -> float:
    """``D_g - (D_f - c t(1-t) ||phi x - phi y||^2)`` with ``g = f - c ||.||^2``.

    Identically zero when the norm comes from an inner product.
    """
    return float(shift_identity_residuals(f, phi, space, c, as_points(x, phi.dim), as_points(y, phi.dim), t)[0])


@dataclass(frozen=True)
class ShiftLemmaReport:
    verdict_f: CheckResult
    verdict_g: CheckResult
    agree: bool
    max_abs_residual: float
    worst_triple: tuple[tuple[float, ...], tuple[float, ...], float]
    samples: int


def shift_lemma_report(
    f,
    phi: PhiMap,
    space: NormedSpace,
    c: float,
    grid: GridSpec = GridSpec(),
    n_triples: int = 1000,
    seed: int = 0,
    tol_abs: float = TOL_ABS,
    tol_rel: float = TOL_REL,
    *,
    workers: int = 1,
    backend: str | None = None,
) -> ShiftLemmaReport:
    """Compare ``f`` at modulus c with ``f - c||.||^2`` at modulus 0, plus residuals on seeded random triples."""
    rng = np.random.default_rng(seed)
    lo, hi = phi.domain.lows, phi.domain.highs
    xs = rng.uniform(lo, hi, size=(n_triples, phi.dim))
    ys = rng.uniform(lo, hi, size=(n_triples, phi.dim))
    ts = rng.uniform(0.0, 1.0, size=n_triples)
    res = np.abs(shift_identity_residuals(f, phi, space, c, xs, ys, ts))
    k = int(np.argmax(res))
    vf = check_strong_phi_convex(f, phi, space, c, grid, tol_abs, tol_rel, workers=workers, backend=backend)
    g = ShiftedFunction(f, c, space)
    vg = check_strong_phi_convex(g, phi, space, 0.0, grid, tol_abs, tol_rel, workers=workers, backend=backend)
    return ShiftLemmaReport(
        verdict_f=vf,
        verdict_g=vg,
        agree=vf.holds == vg.holds,
        max_abs_residual=float(res[k]),
        worst_triple=(tuple(map(float, xs[k])), tuple(map(float, ys[k])), float(ts[k])),
        samples=n_triples,
    )
