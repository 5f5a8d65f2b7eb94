"""Hermite-Hadamard-type bounds for strongly phi-convex functions on an interval.

With ``p = phi(a)``, ``q = phi(b)`` and ``delta = p - q``:

* midpoint/trapezoid bracket::

      f((p+q)/2) + c/12 delta^2  <=  mean of f over [p, q]  <=  (f(p)+f(q))/2 - c/6 delta^2

* reflected product (f >= 0)::

      mean of f(x) f(p+q-x)  <=  (f(p)^2+f(q)^2)/6 + 2/3 f(p)f(q) - c/6 delta^2 (f(p)+f(q)) + c^2/30 delta^4

* pair product (f, g >= 0)::

      mean of f(x) g(x)  <=  M/3 + N/6 - c/12 delta^2 S + c^2/30 delta^4

  where ``M = f(p)g(p) + f(q)g(q)``, ``N = f(p)g(q) + f(q)g(p)`` and
  ``S = f(p) + f(q) + g(p) + g(q)``.

The reflected product is the pair product with ``g(x) = f(p+q-x)``, so its
report carries the matching M, N, S.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Interval, PhiMap, RealFunction
from .errors import DegenerateSegmentError, DomainError, NegativityError
from .quadrature import DEFAULT_TOL, integrate

DEGENERATE_GAP = 1e-8
HH_TOL = 1e-9

__all__ = [
    "HHReport",
    "HHPairReport",
    "hh_bounds",
    "product_self_bound",
    "product_pair_bound",
    "self_bound_rhs",
    "pair_bound_rhs",
    "DEGENERATE_GAP",
]


@dataclass(frozen=True)
class HHReport:
    lower: float
    mean: float
    upper: float
    quad_error: float
    lower_holds: bool
    upper_holds: bool
    tol: float
    phi_a: float
    phi_b: float
    c: float

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds


@dataclass(frozen=True)
class HHPairReport:
    lhs: float
    rhs: float
    M: float
    N: float
    S: float
    holds: bool
    tol: float
    quad_error: float
    phi_a: float
    phi_b: float
    c: float


def _threshold(a: float, b: float, tol: float) -> float:
    return tol * (1.0 + max(abs(a), abs(b)))


def _segment(phi: PhiMap | None, interval: Interval) -> tuple[float, float]:
    if phi is None:
        p, q = interval.lo, interval.hi
    else:
        if phi.dim != 1:
            raise DomainError("interval bounds need a one-dimensional phi")
        p = float(phi.value(interval.lo)[0])
        q = float(phi.value(interval.hi)[0])
    if abs(p - q) <= DEGENERATE_GAP:
        raise DegenerateSegmentError(
            f"degenerate segment: |phi(a) - phi(b)| = {abs(p - q):.3g} <= {DEGENERATE_GAP:g}"
        )
    return p, q


def _scalar(f):
    if isinstance(f, RealFunction):
        if f.arity != 1:
            raise DomainError("interval bounds need a function of one variable")
        return f.value
    return lambda x: float(f(x))


def _mean(h, p: float, q: float, quad_tol: float) -> tuple[float, float]:
    res = integrate(h, p, q, quad_tol)
    return res.value / (q - p), res.error_estimate / abs(q - p)


def hh_bounds(
    f,
    phi: PhiMap | None,
    c: float,
    interval: Interval,
    quad_tol: float = DEFAULT_TOL,
    tol: float = HH_TOL,
) -> HHReport:
    """Lower bound, integral mean and upper bound of the midpoint/trapezoid bracket.

    ``phi=None`` means the identity. Flags compare with ``tol`` scaled by
    ``1 + max(|lhs|, |rhs|)``.
    """
    fv = _scalar(f)
    p, q = _segment(phi, interval)
    delta2 = (p - q) ** 2
    lower = fv(0.5 * (p + q)) + c / 12.0 * delta2
    upper = 0.5 * (fv(p) + fv(q)) - c / 6.0 * delta2
    mean, qerr = _mean(fv, p, q, quad_tol)
    return HHReport(
        lower=lower,
        mean=mean,
        upper=upper,
        quad_error=qerr,
        lower_holds=lower <= mean + _threshold(lower, mean, tol),
        upper_holds=mean <= upper + _threshold(mean, upper, tol),
        tol=tol,
        phi_a=p,
        phi_b=q,
        c=float(c),
    )


def pair_bound_rhs(fp: float, fq: float, gp: float, gq: float, c: float, delta: float) -> tuple[float, float, float, float]:
    """``(rhs, M, N, S)`` of the pair-product bound from endpoint values."""
    M = fp * gp + fq * gq
    N = fp * gq + fq * gp
    S = fp + fq + gp + gq
    rhs = M / 3.0 + N / 6.0 - c / 12.0 * delta**2 * S + c**2 / 30.0 * delta**4
    return rhs, M, N, S


def self_bound_rhs(fp: float, fq: float, c: float, delta: float, quartic_sign: float = 1.0) -> float:
    """Right side of the reflected-product bound.

    ``quartic_sign=-1`` gives the variant with ``-c^2/30 delta^4``, which is
    false for ``f = x^2``, ``c = 1`` on [0, 1]; kept for regression tests.
    """
    return (
        (fp**2 + fq**2) / 6.0
        + 2.0 * fp * fq / 3.0
        - c / 6.0 * delta**2 * (fp + fq)
        + quartic_sign * c**2 / 30.0 * delta**4
    )


class _NonNegative:
    """Wraps a scalar function and records the smallest value it returned."""

    def __init__(self, fn, label: str):
        self.fn = fn
        self.label = label
        self.min_value = np.inf
        self.argmin = np.nan

    def __call__(self, x: float) -> float:
        v = self.fn(x)
        if v < self.min_value:
            self.min_value, self.argmin = v, x
        return v

    def require(self):
        if self.min_value < 0:
            raise NegativityError(
                f"{self.label} takes the negative value {self.min_value:.6g} at x = {self.argmin:.6g}; "
                "the product bound multiplies two inequalities and needs non-negative factors"
            )


def product_self_bound(
    f,
    phi: PhiMap | None,
    c: float,
    interval: Interval,
    quad_tol: float = DEFAULT_TOL,
    tol: float = HH_TOL,
) -> HHPairReport:
    """Mean of ``f(x) f(p+q-x)`` over the phi-segment against its bound.

    Raises NegativityError if f is negative at any quadrature node.
    """
    p, q = _segment(phi, interval)
    fv = _NonNegative(_scalar(f), "f")
    fp, fq = fv(p), fv(q)
    s = p + q
    lhs, qerr = _mean(lambda x: fv(x) * fv(s - x), p, q, quad_tol)
    fv.require()
    delta = p - q
    rhs = self_bound_rhs(fp, fq, c, delta)
    # g(x) = f(p+q-x) has g(p) = f(q), g(q) = f(p)
    _, M, N, S = pair_bound_rhs(fp, fq, fq, fp, c, delta)
    return HHPairReport(
        lhs=lhs,
        rhs=rhs,
        M=M,
        N=N,
        S=S,
        holds=lhs <= rhs + _threshold(lhs, rhs, tol),
        tol=tol,
        quad_error=qerr,
        phi_a=p,
        phi_b=q,
        c=float(c),
    )


def product_pair_bound(
    f,
    g,
    phi: PhiMap | None,
    c: float,
    interval: Interval,
    quad_tol: float = DEFAULT_TOL,
    tol: float = HH_TOL,
) -> HHPairReport:
    """Mean of ``f(x) g(x)`` over the phi-segment against ``M/3 + N/6 - c/12 delta^2 S + c^2/30 delta^4``."""
    p, q = _segment(phi, interval)
    fv = _NonNegative(_scalar(f), "f")
    gv = _NonNegative(_scalar(g), "g")
    fp, fq, gp, gq = fv(p), fv(q), gv(p), gv(q)
    lhs, qerr = _mean(lambda x: fv(x) * gv(x), p, q, quad_tol)
    fv.require()
    gv.require()
    rhs, M, N, S = pair_bound_rhs(fp, fq, gp, gq, c, p - q)
    return HHPairReport(
        lhs=lhs,
        rhs=rhs,
        M=M,
        N=N,
        S=S,
        holds=lhs <= rhs + _threshold(lhs, rhs, tol),
        tol=tol,
        quad_error=qerr,
        phi_a=p,
        phi_b=q,
        c=float(c),
    )
