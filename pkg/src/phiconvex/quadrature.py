"""Oriented adaptive Simpson quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import QuadratureError

DEFAULT_TOL = 1e-10
MAX_SUBDIVISIONS = 10**6
# panels are always split this many times before the error test is trusted
MIN_DEPTH = 4


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    subdivisions: int


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOL,
    max_subdivisions: int = MAX_SUBDIVISIONS,
) -> QuadResult:
    """Integrate ``f`` from ``lo`` to ``hi`` (``lo > hi`` gives the negated value).

    Each panel is accepted once ``|S_fine - S_coarse| / 15`` is below its
    share of ``tol``; the accepted value carries the Richardson correction.
    Panels are processed left to right so the result is deterministic.

    Raises QuadratureError (with the best estimate attached) when more than
    ``max_subdivisions`` panel splits would be needed.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if lo == hi:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if lo > hi:
        lo, hi, sign = hi, lo, -1.0

    a, b = float(lo), float(hi)
    m = 0.5 * (a + b)
    fa, fm, fb = float(f(a)), float(f(m)), float(f(b))
    whole = _simpson(fa, fm, fb, b - a)

    total = 0.0
    err = 0.0
    splits = 0
    # stack entries: (a, b, fa, fm, fb, coarse estimate, tolerance share, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, coarse, ptol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = float(f(lm)), float(f(rm))
        left = _simpson(fa, flm, fm, m - a)
        right = _simpson(fm, frm, fb, b - m)
        fine = left + right
        local = abs(fine - coarse) / 15.0
        if depth >= MIN_DEPTH and (local <= ptol or m <= a or b <= m):
            total += fine + (fine - coarse) / 15.0
            err += local
            continue
        splits += 1
        if splits > max_subdivisions:
            # remaining panels contribute their current fine estimate
            best = total + fine + sum(_simpson(e[2], e[3], e[4], e[1] - e[0]) for e in stack)
            raise QuadratureError(
                f"subdivision budget of {max_subdivisions} exhausted",
                sign * best,
                err + local,
                splits - 1,
            )
        # push right first so the left half is processed next
        stack.append((m, b, fm, frm, fb, right, ptol / 2.0, depth + 1))
        stack.append((a, m, fa, flm, fm, left, ptol / 2.0, depth + 1))

    return QuadResult(sign * total, err, splits)
