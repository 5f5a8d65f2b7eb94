"""Shared semantic types: regions, functions, phi-maps, normed spaces, grids, witnesses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError
from .exprlang import Expression, parse

__all__ = [
    "Interval",
    "Box",
    "Region",
    "RealFunction",
    "SquaredNorm",
    "ShiftedFunction",
    "PhiMap",
    "NormedSpace",
    "GridSpec",
    "ViolationWitness",
    "make_grid",
    "axis_grid",
    "norm",
    "variable_names",
    "as_points",
    "BOUNDARY_TOL",
]

BOUNDARY_TOL = 1e-12


def variable_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def as_points(points, dim: int) -> np.ndarray:
    """Coerce to a float array of shape (m, dim)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DomainError(f"expected points of dimension {dim}, got array of shape {np.shape(points)}")
    return arr


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise DomainError("interval endpoints must be finite")
        if not self.lo < self.hi:
            raise DomainError(f"interval invariant violated: need lo < hi, got [{self.lo}, {self.hi}]")

    dim = 1

    @property
    def lows(self) -> np.ndarray:
        return np.array([self.lo], dtype=float)

    @property
    def highs(self) -> np.ndarray:
        return np.array([self.hi], dtype=float)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_n, hi_n]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or not lo:
            raise DomainError("box bounds must be non-empty and of equal length")
        for a, b in zip(lo, hi):
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise DomainError(f"interval invariant violated: need lo < hi on every axis, got [{a}, {b}]")

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "Box":
        return cls((lo,) * dim, (hi,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lows(self) -> np.ndarray:
        return np.array(self.lo, dtype=float)

    @property
    def highs(self) -> np.ndarray:
        return np.array(self.hi, dtype=float)


Region = Union[Interval, Box]


def axis_grid(lo: float, hi: float, m: int) -> np.ndarray:
    """``m`` uniform nodes on [lo, hi], endpoints exact."""
    if m == 1:
        return np.array([(lo + hi) / 2.0])
    frac = np.arange(m) / (m - 1)
    out = lo + (hi - lo) * frac
    out[0], out[-1] = lo, hi
    return out


def make_grid(region: Region, spec: "GridSpec | int") -> np.ndarray:
    """Uniform grid over ``region`` as an (m, dim) array in lexicographic order."""
    m = spec.points_per_axis if isinstance(spec, GridSpec) else int(spec)
    if m < 1:
        raise DomainError("points_per_axis must be positive")
    axes = [axis_grid(a, b, m) for a, b in zip(region.lows, region.highs)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


# ---------------------------------------------------------------------------
# Functions


class RealFunction:
    """Real-valued function of ``x1..xn`` given by an expression."""

    def __init__(self, expr: Expression, arity: int, label: str | None = None):
        if arity < 1:
            raise DomainError("arity must be positive")
        names = variable_names(arity)
        if arity == 1 and expr.variables == ("x",):
            names = ["x"]
        if list(expr.variables) != names:
            raise DomainError(f"expression variables {list(expr.variables)} do not match {names}")
        self.expr = expr
        self.arity = arity
        self.label = label or expr.source

    @classmethod
    def from_text(cls, source: str, arity: int = 1, label: str | None = None) -> "RealFunction":
        return cls(parse(source, variable_names(arity)), arity, label)

    def __call__(self, points) -> np.ndarray:
        pts = as_points(points, self.arity)
        env = {name: pts[:, i] for i, name in enumerate(self.expr.variables)}
        out = self.expr.evaluate(env)
        return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()

    def value(self, x) -> float:
        """Scalar evaluation; ``x`` is a float (arity 1) or a coordinate sequence."""
        coords = np.atleast_1d(np.asarray(x, dtype=float))
        if coords.shape != (self.arity,):
            raise DomainError(f"expected a point of dimension {self.arity}")
        env = {name: float(coords[i]) for i, name in enumerate(self.expr.variables)}
        return float(self.expr.evaluate(env))

    def __repr__(self):
        return f"RealFunction({self.label!r}, arity={self.arity})"


class SquaredNorm:
    """``u -> ||u||^2`` for a given normed space."""

    def __init__(self, space: "NormedSpace"):
        self.space = space
        self.arity = space.dim
        self.label = f"||.||^2 ({space.describe()})"

    def __call__(self, points) -> np.ndarray:
        return self.space.norm(as_points(points, self.arity)) ** 2

    def value(self, x) -> float:
        return float(self(np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1))[0])


class ShiftedFunction:
    """``g = f - c * ||.||^2``, the shifted function of the shift identity."""

    def __init__(self, f, c: float, space: "NormedSpace"):
        if f.arity != space.dim:
            raise DomainError("function arity does not match space dimension")
        self.f = f
        self.c = float(c)
        self.space = space
        self.arity = f.arity
        self.label = f"({f.label}) - {self.c!r}*||.||^2"

    def __call__(self, points) -> np.ndarray:
        pts = as_points(points, self.arity)
        return self.f(pts) - self.c * self.space.norm(pts) ** 2

    def value(self, x) -> float:
        return float(self(np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1))[0])


class PhiMap:
    """Self-map of a region, given componentwise by expressions in ``x1..xn``."""

    def __init__(self, components: Sequence[Expression], domain: Region, label: str | None = None):
        components = tuple(components)
        if len(components) != domain.dim:
            raise DomainError(f"phi has {len(components)} components but the domain has dimension {domain.dim}")
        self.components = components
        self.domain = domain
        self.label = label or ", ".join(c.source for c in components)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @classmethod
    def from_text(cls, sources: Sequence[str] | str, domain: Region, label: str | None = None) -> "PhiMap":
        if isinstance(sources, str):
            sources = [sources]
        names = variable_names(domain.dim)
        return cls([parse(s, names) for s in sources], domain, label)

    @classmethod
    def identity(cls, domain: Region) -> "PhiMap":
        names = variable_names(domain.dim)
        return cls([parse(n, names) for n in names], domain, "identity")

    @property
    def is_identity(self) -> bool:
        return all(c.source.strip() in (n, "x") for c, n in zip(self.components, variable_names(self.dim)))

    def raw(self, points) -> np.ndarray:
        pts = as_points(points, self.dim)
        env = {name: pts[:, i] for i, name in enumerate(variable_names(self.dim))}
        cols = [np.broadcast_to(np.asarray(c.evaluate(env), dtype=float), (pts.shape[0],)) for c in self.components]
        return np.stack(cols, axis=1)

    def __call__(self, points, tol: float = BOUNDARY_TOL) -> np.ndarray:
        """Images of ``points``; raises DomainError if one escapes the domain by more than ``tol``."""
        img = self.raw(points)
        lo, hi = self.domain.lows, self.domain.highs
        over = np.maximum(lo - img, img - hi)
        if np.any(over > tol):
            k = int(np.argmax(over.max(axis=1)))
            src = as_points(points, self.dim)[k]
            raise DomainError(
                f"phi is not a self-map: phi({_fmt_point(src)}) = {_fmt_point(img[k])} lies outside the domain"
            )
        return np.clip(img, lo, hi)

    def value(self, x) -> np.ndarray:
        return self(np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1))[0]

    def __repr__(self):
        return f"PhiMap({self.label!r})"


def _fmt_point(p) -> str:
    return "(" + ", ".join(f"{v:.6g}" for v in np.atleast_1d(p)) + ")"


# ---------------------------------------------------------------------------
# Normed spaces

_KIND_CODES = {"euclidean": 0, "maximum": 1, "p_norm": 2}
_KIND_ALIASES = {
    "euclidean": "euclidean",
    "l2": "euclidean",
    "maximum": "maximum",
    "max": "maximum",
    "linf": "maximum",
    "p": "p_norm",
    "p_norm": "p_norm",
    "pnorm": "p_norm",
}


@dataclass(frozen=True)
class NormedSpace:
    dim: int
    kind: str = "euclidean"
    p: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dimension must be positive")
        if self.kind not in _KIND_CODES:
            raise DomainError(f"unknown norm kind {self.kind!r}")
        if self.kind == "p_norm":
            if self.p is None or not (np.isfinite(self.p) and self.p >= 1):
                raise DomainError("p_norm requires finite p >= 1")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            object.__setattr__(self, "p", None)

    @classmethod
    def from_name(cls, name: str, dim: int, p: float | None = None) -> "NormedSpace":
        try:
            kind = _KIND_ALIASES[name.lower()]
        except KeyError:
            raise DomainError(f"unknown norm {name!r}; choose euclidean, max or p") from None
        return cls(dim, kind, p if kind == "p_norm" else None)

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def p_value(self) -> float:
        return self.p if self.p is not None else 2.0

    def describe(self) -> str:
        return f"p_norm(p={self.p:g})" if self.kind == "p_norm" else self.kind

    def norm(self, u) -> np.ndarray | float:
        """Norm along the last axis; a 1-D input of length ``dim`` gives a float."""
        arr = np.asarray(u, dtype=float)
        if arr.shape[-1:] != (self.dim,):
            raise DomainError(f"dimension mismatch: space has dim {self.dim}, vector has shape {arr.shape}")
        if self.kind == "euclidean":
            out = np.sqrt(np.sum(arr * arr, axis=-1))
        elif self.kind == "maximum":
            out = np.max(np.abs(arr), axis=-1)
        elif self.p == 1.0:
            out = np.sum(np.abs(arr), axis=-1)
        else:
            out = np.sum(np.abs(arr) ** self.p, axis=-1) ** (1.0 / self.p)
        return float(out) if np.ndim(out) == 0 else out


def norm(space: NormedSpace, u) -> float | np.ndarray:
    return space.norm(u)


# ---------------------------------------------------------------------------
# Grids and witnesses


@dataclass(frozen=True)
class GridSpec:
    """Discretisation of "for all x, y in D and t in [0, 1]".

    ``t_steps`` must be odd so the t grid contains 0, 1/2 and 1.
    """

    points_per_axis: int = 41
    t_steps: int = 21
    refinement_rounds: int = 3
    min_separation: float = 1e-6

    def __post_init__(self):
        if self.points_per_axis < 2:
            raise DomainError("points_per_axis must be at least 2")
        if self.t_steps < 3 or self.t_steps % 2 == 0:
            raise DomainError("t_steps must be odd and >= 3 so that 0, 1/2 and 1 are grid nodes")
        if self.refinement_rounds < 0:
            raise DomainError("refinement_rounds must be non-negative")
        if not self.min_separation > 0:
            raise DomainError("min_separation must be positive")

    def t_grid(self) -> np.ndarray:
        return axis_grid(0.0, 1.0, self.t_steps)

    def as_dict(self) -> dict:
        return {
            "points_per_axis": self.points_per_axis,
            "t_steps": self.t_steps,
            "refinement_rounds": self.refinement_rounds,
            "min_separation": self.min_separation,
        }


@dataclass(frozen=True)
class ViolationWitness:
    """A concrete triple at which an inequality fails; ``slack = rhs - lhs < 0``."""

    x: tuple[float, ...]
    y: tuple[float, ...]
    t: float
    lhs: float
    rhs: float
    slack: float = field(default=float("nan"))

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))
        object.__setattr__(self, "y", tuple(float(v) for v in np.atleast_1d(self.y)))
        if np.isnan(self.slack):
            object.__setattr__(self, "slack", float(self.rhs) - float(self.lhs))

    def to_dict(self) -> dict:
        return {
            "x": list(self.x),
            "y": list(self.y),
            "t": self.t,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
        }
