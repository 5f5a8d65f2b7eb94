"""``phiconvex`` command-line front end.

Exit codes: 0 every checked inequality holds, 1 a violation witness was
found, 2 usage or evaluation error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Any, Sequence

from . import kernels
from .config import COMMANDS, FUNCTION_COMMANDS, INTERVAL_COMMANDS, JobConfig, load_config
from .convexity import (
    check_strong_phi_convex,
    check_strong_phi_midconvex,
    estimate_modulus,
    shift_lemma_report,
)
from .domain import Box, GridSpec, Interval, NormedSpace, PhiMap, RealFunction
from .errors import ConfigError, PhiConvexError
from .hadamard import hh_bounds, product_pair_bound, product_self_bound
from .normgeom import (
    INNER_PRODUCT_LIKE,
    counterexample_search,
    jn_test,
    search_plan,
    sqnorm_strong_convexity_check,
)

VERSION = "0.1.0"
EXIT_HOLDS, EXIT_VIOLATED, EXIT_ERROR = 0, 1, 2


# ---------------------------------------------------------------------------
# Argument parsing


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _c_arg(text: str):
    if text.strip().lower() == "estimate":
        return "estimate"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"c must be a number or 'estimate', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("job")
    g.add_argument("--config", help="key = value job file; flags override it")
    g.add_argument("--f", help="function of x (or x1..xn)")
    g.add_argument("--g", help="second function (pair-product)")
    g.add_argument("--phi", action="append", help="phi component; repeat once per dimension")
    g.add_argument("--a", type=_floats, help="lower bound(s), comma separated")
    g.add_argument("--b", type=_floats, help="upper bound(s), comma separated")
    g.add_argument("--dim", type=int)
    g.add_argument("--c", type=_c_arg, help="modulus, or 'estimate'")
    g.add_argument("--norm", help="euclidean | max | p")
    g.add_argument("--p", type=float, help="exponent for --norm p")
    n = common.add_argument_group("numerics")
    n.add_argument("--grid", type=int, help="points per axis")
    n.add_argument("--t-steps", dest="t_steps", type=int)
    n.add_argument("--refine", type=int, help="local refinement rounds")
    n.add_argument("--min-sep", dest="min_sep", type=float)
    n.add_argument("--tol", type=float)
    n.add_argument("--quad-tol", dest="quad_tol", type=float)
    n.add_argument("--samples", type=int)
    n.add_argument("--sampler", choices=("grid", "random"))
    n.add_argument("--budget", type=int)
    n.add_argument("--seed", type=int)
    n.add_argument("--workers", type=int)
    o = common.add_argument_group("output")
    o.add_argument("--json", help="write the JSON report here ('-' for stdout)")
    o.add_argument("--quiet", action="store_true", help="no human-readable table")

    parser = argparse.ArgumentParser(prog="phiconvex", description="Numerical analysis of strongly phi-convex functions.")
    parser.add_argument("--version", action="version", version=f"phiconvex {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "check": "strong phi-convexity with modulus c on a grid",
        "midcheck": "strong phi-midconvexity (t = 1/2) with modulus c",
        "modulus": "estimate the largest modulus c* on a grid",
        "hh": "midpoint/trapezoid Hermite-Hadamard bracket",
        "product": "reflected product bound for f(x) f(phi(a)+phi(b)-x)",
        "pair-product": "product bound for f(x) g(x)",
        "norm-test": "parallelogram-law test of a normed space",
        "sqnorm-check": "is ||.||^2 strongly convex with modulus c",
        "counterexample": "search for a midconvexity witness for ||.||^2",
        "lemma2": "shift identity f vs f - c||.||^2",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


_CONFIG_KEYS = (
    "f", "g", "phi", "a", "b", "dim", "c", "norm", "p", "grid", "t_steps", "refine", "min_sep",
    "tol", "quad_tol", "json", "seed", "workers", "samples", "sampler", "budget",
)  # fmt: skip


def config_from_args(ns: argparse.Namespace) -> JobConfig:
    overrides = {k: getattr(ns, k) for k in _CONFIG_KEYS}
    if overrides["phi"] is not None:
        overrides["phi"] = tuple(overrides["phi"])
    if ns.config:
        cfg = load_config(ns.config, **overrides)
        if cfg.command not in (None, ns.command):
            raise ConfigError(f"config file is for command {cfg.command!r}, not {ns.command!r}")
        return cfg.merged(command=ns.command)
    return JobConfig(command=ns.command, **{k: v for k, v in overrides.items() if v is not None})


# ---------------------------------------------------------------------------
# Job execution


def _clean(obj: Any) -> Any:
    """JSON-safe copy: tuples become lists, non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float) or hasattr(obj, "__float__"):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _witness_dict(w, **extra) -> dict:
    d = w.to_dict()
    d.update(extra)
    return d


class _Job:
    def __init__(self, cfg: JobConfig):
        self.cfg = cfg
        self.dim = cfg.resolved_dim
        self.results: dict[str, Any] = {}
        self.verdict = "holds"
        self.witness: dict | None = None
        self.notes: list[str] = []

    # -- building blocks

    @property
    def grid(self) -> GridSpec:
        c = self.cfg
        return GridSpec(c.resolved_grid, c.t_steps, c.refine, c.min_sep)

    @property
    def tol(self) -> float:
        return self.cfg.tol if self.cfg.tol is not None else 1e-9

    def space(self) -> NormedSpace:
        return NormedSpace.from_name(self.cfg.norm, self.dim, self.cfg.p)

    def region(self):
        region = self.cfg.region()
        if region is None:
            if self.dim == 1 or self.cfg.command in INTERVAL_COMMANDS:
                raise ConfigError("this command needs an interval: give --a and --b")
            region = Box.cube(-2.0, 2.0, self.dim)
        if region.dim != self.dim:
            raise ConfigError(f"bounds have dimension {region.dim} but dim is {self.dim}")
        return region

    def function(self, which: str = "f") -> RealFunction:
        text = getattr(self.cfg, which)
        if text is None:
            raise ConfigError(f"this command needs --{which}")
        return RealFunction.from_text(text, self.dim)

    def phi(self, region) -> PhiMap:
        if self.cfg.phi is None:
            return PhiMap.identity(region)
        return PhiMap.from_text(list(self.cfg.phi), region)

    def violate(self, witness: dict | None):
        self.verdict = "violated"
        if self.witness is None and witness is not None:
            self.witness = witness

    def resolve_c(self, fs, phi, space) -> float:
        """Numeric modulus; 'estimate' runs the modulus estimate for every function in ``fs``."""
        if self.cfg.c != "estimate":
            return float(self.cfg.c)
        estimates = [estimate_modulus(f, phi, space, self.grid, workers=self.cfg.workers) for f in fs]
        c_star = min(e.c_star for e in estimates)
        self.results["c_star"] = c_star
        self.results["c_estimated"] = True
        if c_star < 0:
            self.notes.append("estimated modulus is negative: the function is not phi-convex on the grid")
        return max(c_star, 0.0)

    def hypothesis(self, f, phi, space, c, name="f"):
        res = check_strong_phi_convex(f, phi, space, c, self.grid, self.tol, self.tol, workers=self.cfg.workers)
        self.results.setdefault("hypothesis", {})[name] = {
            "holds": res.holds,
            "c": c,
            "min_slack": res.min_slack,
            "triples_scanned": res.triples_scanned,
        }
        if not res.holds:
            self.notes.append(f"{name} is not strongly phi-convex with modulus {c:g} on the grid")
            self.violate(_witness_dict(res.witness))
        return res

    def record_check(self, res):
        self.results.update(
            c=res.c,
            min_slack=res.min_slack,
            min_triple={"x": res.min_triple[0], "y": res.min_triple[1], "t": res.min_triple[2]},
            triples_scanned=res.triples_scanned,
            violations=res.violations,
        )
        self.results["scope"] = "on grid"
        if not res.holds:
            self.violate(_witness_dict(res.witness))

    # -- commands

    def run(self):
        getattr(self, "cmd_" + self.cfg.command.replace("-", "_"))()

    def _fn_setup(self):
        region = self.region()
        return self.function("f"), self.phi(region), self.space(), region

    def cmd_check(self, midpoint=False):
        f, phi, space, _ = self._fn_setup()
        c = self.resolve_c([f], phi, space)
        checker = check_strong_phi_midconvex if midpoint else check_strong_phi_convex
        self.record_check(checker(f, phi, space, c, self.grid, self.tol, self.tol, workers=self.cfg.workers))
        if c == 0 and self.results.get("c_star", 0) < 0 and self.verdict == "holds":
            self.violate(None)

    def cmd_midcheck(self):
        self.cmd_check(midpoint=True)

    def cmd_modulus(self):
        f, phi, space, _ = self._fn_setup()
        est = estimate_modulus(f, phi, space, self.grid, workers=self.cfg.workers)
        x, y, t = est.minimizing_triple
        self.results.update(
            c_star=est.c_star,
            minimizing_triple={"x": x, "y": y, "t": t},
            pairs_examined=est.pairs_examined,
            triples_examined=est.triples_examined,
            delta_used=est.delta_used,
            scope="on grid",
        )
        if est.c_star < 0:
            res = check_strong_phi_convex(f, phi, space, 0.0, self.grid, self.tol, self.tol, workers=self.cfg.workers)
            self.notes.append("negative modulus: not phi-convex on the grid")
            self.violate(_witness_dict(res.witness) if res.witness else None)

    def _interval(self) -> Interval:
        if self.dim != 1:
            raise ConfigError("this command works on an interval (dim = 1)")
        return self.region()

    def _prechecked_c(self, fs, phi, space, names):
        c = self.resolve_c(fs, phi, space)
        if self.cfg.c == "estimate":
            if self.results["c_star"] < 0:
                for f, name in zip(fs, names):
                    self.hypothesis(f, phi, space, 0.0, name)
        else:
            for f, name in zip(fs, names):
                self.hypothesis(f, phi, space, c, name)
        return c

    def cmd_hh(self):
        interval = self._interval()
        f, phi, space = self.function("f"), self.phi(interval), self.space()
        c = self._prechecked_c([f], phi, space, ["f"])
        rep = hh_bounds(f, phi, c, interval, self.cfg.quad_tol, self.tol)
        self.results.update(
            c=c,
            lower=rep.lower,
            mean=rep.mean,
            upper=rep.upper,
            quad_error=rep.quad_error,
            lower_holds=rep.lower_holds,
            upper_holds=rep.upper_holds,
            phi_a=rep.phi_a,
            phi_b=rep.phi_b,
        )
        a, b = [interval.lo], [interval.hi]
        if not rep.lower_holds:
            self.violate({"x": a, "y": b, "t": None, "slack": rep.mean - rep.lower, "bound": "lower"})
        if not rep.upper_holds:
            self.violate({"x": a, "y": b, "t": None, "slack": rep.upper - rep.mean, "bound": "upper"})

    def _pair_results(self, rep, c, interval):
        self.results.update(
            c=c, lhs=rep.lhs, rhs=rep.rhs, M=rep.M, N=rep.N, S=rep.S,
            quad_error=rep.quad_error, phi_a=rep.phi_a, phi_b=rep.phi_b,
        )  # fmt: skip
        if not rep.holds:
            self.violate({"x": [interval.lo], "y": [interval.hi], "t": None, "slack": rep.rhs - rep.lhs})

    def cmd_product(self):
        interval = self._interval()
        f, phi, space = self.function("f"), self.phi(interval), self.space()
        c = self._prechecked_c([f], phi, space, ["f"])
        self._pair_results(product_self_bound(f, phi, c, interval, self.cfg.quad_tol, self.tol), c, interval)

    def cmd_pair_product(self):
        interval = self._interval()
        f, g, phi, space = self.function("f"), self.function("g"), self.phi(interval), self.space()
        c = self._prechecked_c([f, g], phi, space, ["f", "g"])
        self._pair_results(product_pair_bound(f, g, phi, c, interval, self.cfg.quad_tol, self.tol), c, interval)

    def cmd_norm_test(self):
        space = self.space()
        tol = self.cfg.tol if self.cfg.tol is not None else 1e-10
        box = self.cfg.region() if self.cfg.a is not None else None
        v = jn_test(space, self.cfg.sampler, self.cfg.samples or 10_000, tol, self.cfg.seed, box)
        self.results.update(
            classification=v.classification,
            max_defect=v.max_abs_defect,
            worst_defect=v.worst_defect,
            samples=v.samples,
            sampler=v.sampler,
            note=v.note,
        )
        if v.classification != INNER_PRODUCT_LIKE:
            u, w = v.worst_pair
            self.violate({"x": u, "y": w, "t": None, "slack": -v.max_abs_defect, "defect": v.worst_defect})

    def _norm_c(self, default=1.0) -> float:
        if self.cfg.c == "estimate":
            return default
        return float(self.cfg.c)

    def cmd_sqnorm_check(self):
        space = self.space()
        box = self.region()
        c = self._norm_c()
        grid = self.grid
        res = sqnorm_strong_convexity_check(space, grid, self.tol, self.tol, c, box, workers=self.cfg.workers)
        self.record_check(res)
        self.results["classification"] = INNER_PRODUCT_LIKE if res.holds else "not_inner_product"

    def cmd_counterexample(self):
        space = self.space()
        box = self.region()
        c = self._norm_c()
        m, rounds, evals = search_plan(space.dim, self.cfg.budget, self.cfg.refine)
        w = counterexample_search(space, c, self.cfg.budget, self.tol, self.tol, box, self.cfg.refine)
        self.results.update(c=c, evaluations=evals, points_per_axis=m, rounds=rounds, scope="on grid")
        if w is not None:
            self.results["min_slack"] = w.slack
            self.violate(_witness_dict(w))

    def cmd_lemma2(self):
        f, phi, space, _ = self._fn_setup()
        c = self.resolve_c([f], phi, space)
        rep = shift_lemma_report(
            f, phi, space, c, self.grid, self.cfg.samples or 1000, self.cfg.seed, self.tol, self.tol,
            workers=self.cfg.workers,
        )  # fmt: skip
        self.results.update(
            c=c,
            max_defect=rep.max_abs_residual,
            samples=rep.samples,
            verdict_f=rep.verdict_f.verdict,
            verdict_g=rep.verdict_g.verdict,
            agree=rep.agree,
        )
        x, y, t = rep.worst_triple
        if rep.max_abs_residual > self.tol:
            self.violate({"x": x, "y": y, "t": t, "slack": -rep.max_abs_residual})
        elif not rep.agree:
            self.violate(None)

    def grid_meta(self) -> dict:
        c = self.cfg
        meta = dict(self.grid.as_dict())
        meta["scope"] = "on grid G: uniform points_per_axis^dim base grid plus refinement rounds"
        meta["t_grid"] = "uniform, includes 0, 1/2, 1"
        meta["kernels"] = kernels.backend_name()
        if c.command == "norm-test":
            meta = {"sampler": c.sampler, "samples": self.results.get("samples"), "seed": c.seed}
        return meta


def execute(cfg: JobConfig) -> tuple[int, dict]:
    """Run a job; returns the exit code and the report dictionary."""
    start = time.perf_counter()
    report: dict[str, Any] = {"version": VERSION, "command": cfg.command, "inputs": cfg.as_dict()}
    try:
        job = _Job(cfg)
        job.run()
    except (PhiConvexError, ValueError) as exc:
        report.update(results={}, verdict="error", error=str(exc), grid={})
        code = EXIT_ERROR
    else:
        report["results"] = job.results
        report["verdict"] = job.verdict
        if job.witness is not None:
            report["witness"] = job.witness
        if job.notes:
            report["notes"] = job.notes
        report["grid"] = job.grid_meta()
        code = EXIT_HOLDS if job.verdict == "holds" else EXIT_VIOLATED
    report["wall_ms"] = (time.perf_counter() - start) * 1000.0
    return code, _clean(report)


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def render_table(report: dict) -> str:
    lines = [f"phiconvex {report['version']}  command: {report['command']}  verdict: {report['verdict']}"]
    if "error" in report:
        lines.append(f"  error: {report['error']}")

    def emit(prefix, d):
        for k, v in d.items():
            if isinstance(v, dict):
                emit(f"{prefix}{k}.", v)
            else:
                lines.append(f"  {prefix + k:<28} {_fmt(v)}")

    emit("", report.get("results", {}))
    if "witness" in report:
        emit("witness.", report["witness"])
    for note in report.get("notes", []):
        lines.append(f"  note: {note}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_HOLDS
    try:
        cfg = config_from_args(ns)
    except (PhiConvexError, ValueError) as exc:
        print(f"phiconvex: error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    code, report = execute(cfg)
    if code == EXIT_ERROR:
        print(f"phiconvex: error: {report['error']}", file=sys.stderr)
    text = render_json(report)
    if cfg.json == "-":
        sys.stdout.write(text)
    else:
        if cfg.json:
            try:
                with open(cfg.json, "w") as fh:
                    fh.write(text)
            except OSError as exc:
                print(f"phiconvex: error: cannot write {cfg.json}: {exc}", file=sys.stderr)
                return EXIT_ERROR
        if not ns.quiet:
            sys.stdout.write(render_table(report))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
