"""Job configuration: ``key = value`` files whose keys mirror the CLI flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .domain import Box, Interval, variable_names
from .errors import ConfigError, DomainError, ExprError
from .exprlang import parse

COMMANDS = (
    "check",
    "midcheck",
    "modulus",
    "hh",
    "product",
    "pair-product",
    "norm-test",
    "sqnorm-check",
    "counterexample",
    "lemma2",
)
INTERVAL_COMMANDS = ("hh", "product", "pair-product")
FUNCTION_COMMANDS = ("check", "midcheck", "modulus", "hh", "product", "pair-product", "lemma2")
NORM_COMMANDS = ("norm-test", "sqnorm-check", "counterexample")


@dataclass(frozen=True)
class JobConfig:
    command: str | None = None
    f: str | None = None
    g: str | None = None
    phi: tuple[str, ...] | None = None
    a: tuple[float, ...] | None = None
    b: tuple[float, ...] | None = None
    dim: int | None = None
    c: float | str = "estimate"
    norm: str = "euclidean"
    p: float | None = None
    grid: int | None = None
    t_steps: int = 21
    refine: int = 3
    min_sep: float = 1e-6
    tol: float | None = None
    quad_tol: float = 1e-10
    json: str | None = None
    seed: int = 0
    workers: int = 1
    samples: int | None = None
    sampler: str = "grid"
    budget: int = 100_000

    def __post_init__(self):
        if self.command is not None and self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if isinstance(self.c, str):
            if self.c != "estimate":
                raise ConfigError(f"c must be a number or 'estimate', got {self.c!r}")
        elif self.c < 0:
            raise ConfigError("c must be non-negative")
        for name in ("min_sep", "quad_tol", "tol"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name.replace('_', '-')} must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.sampler not in ("grid", "random"):
            raise ConfigError("sampler must be 'grid' or 'random'")
        if (self.a is None) != (self.b is None):
            raise ConfigError("give both a and b")
        if self.a is not None:
            try:
                self.region()
            except DomainError as exc:
                raise ConfigError(str(exc)) from None
        names = variable_names(self.resolved_dim)
        for label, text in (("f", self.f), ("g", self.g)):
            if text is not None:
                _parse_or_fail(label, text, names)
        for text in self.phi or ():
            _parse_or_fail("phi", text, names)
        if self.phi is not None and len(self.phi) != self.resolved_dim:
            raise ConfigError(f"phi has {len(self.phi)} components but dim is {self.resolved_dim}")

    @property
    def resolved_dim(self) -> int:
        if self.dim is not None:
            return self.dim
        if self.a is not None and len(self.a) > 1:
            return len(self.a)
        return 2 if self.command in NORM_COMMANDS else 1

    @property
    def resolved_grid(self) -> int:
        if self.grid is not None:
            return self.grid
        return 41 if self.resolved_dim == 1 else 17

    def region(self) -> Interval | Box | None:
        if self.a is None:
            return None
        n = self.dim if self.dim is not None else max(len(self.a), len(self.b))
        a, b = _broadcast(self.a, n), _broadcast(self.b, n)
        if len(a) != n or len(b) != n:
            raise DomainError(f"bounds must have 1 or {n} entries")
        if n == 1:
            return Interval(a[0], b[0])
        return Box(a, b)

    def merged(self, **overrides) -> "JobConfig":
        """Copy with every non-None override applied (flags beat file)."""
        vals = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(vals) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown option(s): {sorted(unknown)}")
        return dataclasses.replace(self, **vals)

    def as_dict(self) -> dict[str, Any]:
        out = {}
        for fld in dataclasses.fields(self):
            v = getattr(self, fld.name)
            out[fld.name] = list(v) if isinstance(v, tuple) else v
        out["dim"] = self.resolved_dim
        out["grid"] = self.resolved_grid
        return out


def _broadcast(vals, n):
    return tuple(vals) * n if len(vals) == 1 else tuple(vals)


def _parse_or_fail(label, text, names):
    try:
        parse(text, names)
    except ExprError as exc:
        raise ConfigError(f"cannot parse {label} = {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# File format


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _c_value(text: str) -> float | str:
    return "estimate" if text.strip().lower() == "estimate" else float(text)


_CONVERTERS = {
    "command": str,
    "f": str,
    "g": str,
    "phi": lambda s: tuple(part.strip() for part in s.split(";") if part.strip()),
    "a": _floats,
    "b": _floats,
    "dim": int,
    "c": _c_value,
    "norm": str,
    "p": float,
    "grid": int,
    "t_steps": int,
    "refine": int,
    "min_sep": float,
    "tol": float,
    "quad_tol": float,
    "json": str,
    "seed": int,
    "workers": int,
    "samples": int,
    "sampler": str,
    "budget": int,
}


def _unquote(s: str) -> str:
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def parse_config_text(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](_unquote(value))
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key!r}") from None
    return values


def load_config(path: str | Path, **overrides) -> JobConfig:
    """Read a job file; keyword overrides that are not None replace file values."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = parse_config_text(text)
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - set(_CONVERTERS)
    if unknown:
        raise ConfigError(f"unknown option(s): {sorted(unknown)}")
    return JobConfig(**values)
