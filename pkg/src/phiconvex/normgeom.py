"""Parallelogram-law tests and the squared-norm characterisation of inner-product spaces.

A norm comes from an inner product exactly when
``||u+v||^2 + ||u-v||^2 = 2||u||^2 + 2||v||^2`` for all pairs. Sampling can
refute this with a witness pair but can only ever give evidence for it,
hence the verdict name ``inner_product_like``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .convexity import (
    TIE,
    TOL_ABS,
    TOL_REL,
    CheckResult,
    check_strong_phi_convex,
    check_strong_phi_midconvex,
)
from .domain import Box, GridSpec, NormedSpace, PhiMap, SquaredNorm, ViolationWitness, make_grid
from .errors import DomainError

INNER_PRODUCT_LIKE = "inner_product_like"
NOT_INNER_PRODUCT = "not_inner_product"

# unit box holds the spheres' corner structure for max and l1
JN_BOX = (-1.0, 1.0)
SEARCH_BOX = (-2.0, 2.0)
SEARCH_POINTS = 17
SEARCH_ROUNDS = 3

__all__ = [
    "SpaceVerdict",
    "search_plan",
    "parallelogram_defect",
    "jn_test",
    "sqnorm_strong_convexity_check",
    "counterexample_search",
    "midconvex_sqnorm_slack",
    "INNER_PRODUCT_LIKE",
    "NOT_INNER_PRODUCT",
]


@dataclass(frozen=True)
class SpaceVerdict:
    classification: str
    max_abs_defect: float
    worst_pair: tuple[tuple[float, ...], tuple[float, ...]]
    worst_defect: float
    samples: int
    tol: float
    sampler: str

    @property
    def note(self) -> str:
        if self.classification == NOT_INNER_PRODUCT:
            return "worst_pair violates the parallelogram law: the norm is not induced by an inner product"
        return f"parallelogram law held on {self.samples} sampled pairs; this is evidence, not proof"


def _vec(space: NormedSpace, u) -> np.ndarray:
    arr = np.asarray(u, dtype=float).reshape(-1)
    if arr.shape != (space.dim,):
        raise DomainError(f"dimension mismatch: space has dim {space.dim}, vector has {arr.size} entries")
    return arr


def parallelogram_defect(space: NormedSpace, u, v) -> float:
    """``||u+v||^2 + ||u-v||^2 - 2||u||^2 - 2||v||^2``; zero for inner-product norms."""
    u, v = _vec(space, u), _vec(space, v)
    n = space.norm
    return n(u + v) ** 2 + n(u - v) ** 2 - 2.0 * n(u) ** 2 - 2.0 * n(v) ** 2


def _grid_pairs(space: NormedSpace, n_samples: int, box: Box) -> tuple[np.ndarray, np.ndarray]:
    # smallest odd points-per-axis giving at least n_samples ordered pairs
    m = max(3, math.ceil(n_samples ** (1.0 / (2 * space.dim))))
    if m % 2 == 0:
        m += 1
    pts = make_grid(box, m)
    k = pts.shape[0]
    return np.repeat(pts, k, axis=0), np.tile(pts, (k, 1))


def jn_test(
    space: NormedSpace,
    sampler: str = "grid",
    n_samples: int = 10_000,
    tol: float = 1e-10,
    seed: int = 0,
    box: Box | None = None,
    *,
    backend: str | None = None,
) -> SpaceVerdict:
    """Classify ``space`` by the largest parallelogram defect over sampled pairs.

    ``sampler="grid"`` scans all ordered pairs of a uniform grid over ``box``
    (default ``[-1, 1]^dim``) with at least ``n_samples`` pairs;
    ``sampler="random"`` draws exactly ``n_samples`` uniform pairs with ``seed``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    box = box or Box.cube(*JN_BOX, space.dim)
    if sampler == "grid":
        u, v = _grid_pairs(space, n_samples, box)
    elif sampler == "random":
        rng = np.random.default_rng(seed)
        u = rng.uniform(box.lows, box.highs, size=(n_samples, space.dim))
        v = rng.uniform(box.lows, box.highs, size=(n_samples, space.dim))
    else:
        raise ValueError(f"unknown sampler {sampler!r}; use 'grid' or 'random'")
    kern = kernels.get_backend(backend)
    m, idx, pdef = kern.parallelogram_scan(u, v, space.code, space.p_value, TIE)
    return SpaceVerdict(
        classification=INNER_PRODUCT_LIKE if m <= tol else NOT_INNER_PRODUCT,
        max_abs_defect=float(m),
        worst_pair=(tuple(map(float, u[idx])), tuple(map(float, v[idx]))),
        worst_defect=float(pdef),
        samples=int(u.shape[0]),
        tol=tol,
        sampler=sampler,
    )


def sqnorm_strong_convexity_check(
    space: NormedSpace,
    grid: GridSpec | None = None,
    tol_abs: float = TOL_ABS,
    tol_rel: float = TOL_REL,
    c: float = 1.0,
    box: Box | None = None,
    *,
    workers: int = 1,
    backend: str | None = None,
) -> CheckResult:
    """Is ``||.||^2`` strongly convex with modulus ``c`` (identity phi) on a grid over ``box``?"""
    grid = grid or GridSpec(points_per_axis=SEARCH_POINTS, refinement_rounds=SEARCH_ROUNDS)
    box = box or Box.cube(*SEARCH_BOX, space.dim)
    phi = PhiMap.identity(box)
    return check_strong_phi_convex(
        SquaredNorm(space), phi, space, c, grid, tol_abs, tol_rel, workers=workers, backend=backend
    )


def midconvex_sqnorm_slack(space: NormedSpace, c: float, x, y) -> float:
    """Slack of ``||(x+y)/2||^2 <= (||x||^2+||y||^2)/2 - c/4 ||x-y||^2``."""
    x, y = _vec(space, x), _vec(space, y)
    n = space.norm
    lhs = n(0.5 * (x + y)) ** 2
    rhs = 0.5 * (n(x) ** 2 + n(y) ** 2) - c / 4.0 * n(x - y) ** 2
    return rhs - lhs


def search_plan(dim: int, budget: int, rounds: int = SEARCH_ROUNDS) -> tuple[int, int, int]:
    """``(points_per_axis, rounds, evaluations)`` used by :func:`counterexample_search`.

    Prefers ``m = 4k+1`` points per axis so that +-1 and +-2 are nodes of
    ``[-2, 2]``; drops refinement rounds before going below 2 points.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    for r in range(rounds, -1, -1):
        fits = [m for m in range(SEARCH_POINTS, 1, -1) if m ** (2 * dim) * (r + 1) <= budget]
        if fits:
            preferred = [m for m in fits if m % 4 == 1]
            m = preferred[0] if preferred and preferred[0] >= 5 else fits[0]
            return m, r, m ** (2 * dim) * (r + 1)
    raise ValueError(f"budget {budget} is too small for a {dim}-dimensional search")


def counterexample_search(
    space: NormedSpace,
    c: float = 1.0,
    budget: int = 100_000,
    tol_abs: float = TOL_ABS,
    tol_rel: float = TOL_REL,
    box: Box | None = None,
    rounds: int = SEARCH_ROUNDS,
    *,
    backend: str | None = None,
) -> ViolationWitness | None:
    """Most negative-slack pair violating strong midconvexity of ``||.||^2`` with modulus ``c``.

    A coordinate grid over ``box`` (default ``[-2, 2]^dim``) is scanned, then
    refined around the worst pair, sized by :func:`search_plan` to stay
    within ``budget`` pair evaluations. Returns None when nothing scanned
    violates by more than the tolerance.
    """
    box = box or Box.cube(*SEARCH_BOX, space.dim)
    m, rounds, _ = search_plan(space.dim, budget, rounds)
    grid = GridSpec(points_per_axis=m, t_steps=3, refinement_rounds=rounds)
    res = check_strong_phi_midconvex(
        SquaredNorm(space), PhiMap.identity(box), space, c, grid, tol_abs, tol_rel, backend=backend
    )
    return res.witness
