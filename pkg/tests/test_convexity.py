import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phiconvex.convexity import (
    check_strong_phi_convex,
    check_strong_phi_midconvex,
    defect,
    estimate_modulus,
    segment_restriction_convex,
    shift_identity_residual,
    shift_lemma_report,
)
from phiconvex.domain import Box, GridSpec, Interval, NormedSpace, PhiMap, RealFunction, ShiftedFunction, variable_names
from phiconvex.errors import DegenerateSegmentError, DomainError
from phiconvex.exprlang import parse

from . import oracles

E1 = NormedSpace(1)


def fn(text, dim=1):
    return RealFunction.from_text(text, dim)


def ident(region):
    return PhiMap.identity(region)


# ---------------------------------------------------------------------------
# worked examples


def test_square_is_strongly_convex_with_modulus_one():
    res = check_strong_phi_convex(fn("x^2"), ident(Interval(0, 1)), E1, 1.0)
    assert res.holds and res.witness is None
    assert res.min_slack >= -1e-12


def test_cube_not_convex_on_symmetric_interval():
    res = check_strong_phi_convex(fn("x^3"), ident(Interval(-1, 1)), E1, 0.0)
    assert not res.holds
    w = res.witness
    assert w.slack <= -0.375
    assert w.slack == pytest.approx(w.rhs - w.lhs)
    assert w.slack < 0


def test_square_fails_above_its_modulus():
    res = check_strong_phi_convex(fn("x^2"), ident(Interval(0, 1)), E1, 1.5)
    assert not res.holds
    # worst triple: the extremes at t = 1/2, slack -(0.5)(1/4)(1)
    assert res.witness.slack == pytest.approx(-0.125, abs=1e-12)
    assert {res.witness.x[0], res.witness.y[0]} == {0.0, 1.0}
    assert res.witness.t == 0.5


def test_midcheck_uses_only_half():
    res = check_strong_phi_midconvex(fn("x^2"), ident(Interval(0, 1)), E1, 1.5)
    assert res.midpoint_only and not res.holds
    assert res.witness.t == 0.5


def test_negative_modulus_rejected():
    with pytest.raises(ValueError):
        check_strong_phi_convex(fn("x^2"), ident(Interval(0, 1)), E1, -1.0)


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        check_strong_phi_convex(fn("x1", 2), ident(Interval(0, 1)), E1, 0.0)


def test_phi_convex_but_not_convex():
    # f(u) = u is linear, so under phi = x^2 every defect is zero
    phi = PhiMap.from_text("x^2", Interval(0, 1))
    assert check_strong_phi_convex(fn("x"), phi, E1, 0.0).holds
    assert not check_strong_phi_convex(fn("x"), phi, E1, 0.1).holds


def test_non_self_map_raises():
    phi = PhiMap.from_text("2*x", Interval(0, 1))
    with pytest.raises(DomainError):
        check_strong_phi_convex(fn("x"), phi, E1, 0.0)


def test_defect_matches_hand_value():
    # t f(1) + (1-t) f(0) - f(t) with f = x^2, t = 1/4
    assert defect(fn("x^2"), ident(Interval(0, 1)), E1, 1.0, 0.0, 0.25) == pytest.approx(0.25 - 0.0625)
    with pytest.raises(DomainError):
        defect(fn("x^2"), ident(Interval(0, 1)), E1, 1.0, 0.0, 1.5)


# ---------------------------------------------------------------------------
# invariants

funcs = st.sampled_from(["x^2", "x^4", "exp(x)", "sin(3*x)", "abs(x - 0.3)", "x^3", "-x^2"])
unit = st.floats(0.0, 1.0)


@given(funcs, unit, unit, unit)
@settings(max_examples=200, deadline=None)
def test_defect_symmetry_and_endpoints(text, x, y, t):
    f, phi = fn(text), ident(Interval(0, 1))
    assert defect(f, phi, E1, x, y, t) == pytest.approx(defect(f, phi, E1, y, x, 1.0 - t), abs=1e-12)
    assert abs(defect(f, phi, E1, x, y, 0.0)) <= 1e-15
    assert abs(defect(f, phi, E1, x, y, 1.0)) <= 1e-15


@given(funcs, st.floats(0, 5), st.floats(0, 5))
@settings(max_examples=40, deadline=None)
def test_verdict_monotone_in_c(text, c1, c2):
    lo, hi = sorted((c1, c2))
    f, phi, grid = fn(text), ident(Interval(-1, 1)), GridSpec(15, 7, 1)
    if check_strong_phi_convex(f, phi, E1, hi, grid).holds:
        assert check_strong_phi_convex(f, phi, E1, lo, grid).holds


@pytest.mark.parametrize("text, lo, hi", [("x^2", 0, 1), ("x^4", 1, 2), ("exp(x)", 0, 1), ("cosh_free", 0, 1)])
def test_modulus_is_attained_on_the_grid(text, lo, hi):
    if text == "cosh_free":
        text = "exp(x) + exp(-x)"
    f, phi = fn(text), ident(Interval(lo, hi))
    grid = GridSpec(21, 11, 0)
    est = estimate_modulus(f, phi, E1, grid)
    c = est.c_star
    assert check_strong_phi_convex(f, phi, E1, max(c - 1e-6 * (1 + abs(c)), 0.0), grid).holds
    assert not check_strong_phi_convex(f, phi, E1, c + 1e-3 * (1 + abs(c)), grid).holds


@pytest.mark.parametrize(
    "text, lo, hi, expected, tol",
    [("x^2", 0, 1, 1.0, 1e-6), ("x^4", 1, 2, 6.0, 1e-2), ("exp(x)", 0, 1, 0.5, 1e-3)],
)
def test_modulus_against_second_derivative_oracle(text, lo, hi, expected, tol):
    est = estimate_modulus(fn(text), ident(Interval(lo, hi)), E1)
    expr = parse(text, ["x"])
    oracle = oracles.min_second_derivative_half(lambda v: expr.evaluate({"x": v}), lo, hi)
    assert oracle == pytest.approx(expected, abs=tol)
    assert est.c_star == pytest.approx(oracle, abs=tol)


def test_modulus_negative_for_cube():
    est = estimate_modulus(fn("x^3"), ident(Interval(-1, 1)), E1)
    assert est.c_star < 0
    assert est.delta_used == 1e-6
    assert est.pairs_examined > 0


def test_modulus_degenerate_phi():
    phi = PhiMap.from_text("0.5", Interval(0, 1))
    with pytest.raises(DegenerateSegmentError):
        estimate_modulus(fn("x^2"), phi, E1, GridSpec(9, 5, 0))


# ---------------------------------------------------------------------------
# oracle equivalence on small grids (<= 1000 triples, no refinement)

ORACLE_JOBS = [
    ("x^3", None, (-1.0,), (1.0,), "euclidean", None, 0.0, 10, 9),
    ("x^2", None, (0.0,), (1.0,), "euclidean", None, 1.0, 10, 9),
    ("x^2", None, (0.0,), (1.0,), "euclidean", None, 1.5, 10, 9),
    ("exp(x)", None, (0.0,), (1.0,), "euclidean", None, 0.6, 10, 9),
    ("sin(x)", None, (0.0,), (3.0,), "euclidean", None, 0.0, 11, 7),
    ("x", ("x^2",), (0.0,), (1.0,), "euclidean", None, 0.2, 10, 9),
    ("abs(x)", ("-x",), (-1.0,), (1.0,), "euclidean", None, 0.0, 8, 15),
    ("x1^2 + x2^2", None, (-1.0, -1.0), (1.0, 1.0), "maximum", None, 1.0, 3, 11),
    ("x1^2 + x2^2", None, (-1.0, -1.0), (1.0, 1.0), "euclidean", None, 1.0, 3, 11),
    ("x1*x2", ("x2", "x1"), (0.0, 0.0), (1.0, 1.0), "euclidean", None, 0.0, 3, 11),
    ("abs(x1) + x2^2", None, (-1.0, -1.0), (1.0, 1.0), "p_norm", 1.0, 0.5, 3, 9),
]


def _oracle_inputs(text, phi_src, lo, hi, kind, p, m, t_steps):
    dim = len(lo)
    names = variable_names(dim)
    fexpr = parse(text, names)
    phis = [parse(s, names) for s in (phi_src or names)]

    def f(u):
        return fexpr.evaluate(dict(zip(names, u)))

    def phi(u):
        env = dict(zip(names, u))
        return tuple(c.evaluate(env) for c in phis)

    def nrm(u):
        return oracles.norm(u, kind, p)

    return f, phi, nrm, oracles.grid_points(lo, hi, m), oracles.uniform(0.0, 1.0, t_steps)


@pytest.mark.parametrize("backend", ["numpy", "numba"])
@pytest.mark.parametrize("job", ORACLE_JOBS, ids=lambda j: f"{j[0]}-{j[4]}-c{j[6]}")
def test_matches_brute_force(job, backend):
    text, phi_src, lo, hi, kind, p, c, m, t_steps = job
    assert m ** (2 * len(lo)) * t_steps <= 1000
    region = Interval(lo[0], hi[0]) if len(lo) == 1 else Box(lo, hi)
    phi = ident(region) if phi_src is None else PhiMap.from_text(list(phi_src), region)
    space = NormedSpace(len(lo), kind, p)
    grid = GridSpec(m, t_steps, 0)
    res = check_strong_phi_convex(fn(text, len(lo)), phi, space, c, grid, backend=backend)

    holds, witness = oracles.brute_force_check(*_oracle_inputs(text, phi_src, lo, hi, kind, p, m, t_steps), c)
    assert res.holds == holds
    if holds:
        assert res.witness is None
    else:
        x, y, t, slack = witness
        assert res.witness.x == x and res.witness.y == y and res.witness.t == t
        assert res.witness.slack == pytest.approx(slack, abs=1e-12)


@pytest.mark.parametrize("job", ORACLE_JOBS[:5], ids=lambda j: f"mid-{j[0]}-c{j[6]}")
def test_midcheck_matches_brute_force(job):
    text, phi_src, lo, hi, kind, p, c, m, _ = job
    region = Interval(lo[0], hi[0])
    phi = ident(region) if phi_src is None else PhiMap.from_text(list(phi_src), region)
    res = check_strong_phi_midconvex(fn(text), phi, NormedSpace(1), c, GridSpec(m, 3, 0))
    f, phi_o, nrm, pts, _ = _oracle_inputs(text, phi_src, lo, hi, kind, p, m, 3)
    holds, witness = oracles.brute_force_check(f, phi_o, nrm, pts, [0.5], c)
    assert res.holds == holds
    if not holds:
        assert (res.witness.x, res.witness.y, res.witness.t) == witness[:3]


@given(
    st.integers(-3, 3),
    st.integers(-3, 3),
    st.integers(-3, 3),
    st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0]),
)
@settings(max_examples=25, deadline=None)
def test_random_cubics_match_brute_force(a3, a2, a1, c):
    text = f"{a3}*x^3 + {a2}*x^2 + {a1}*x"
    grid = GridSpec(9, 11, 0)
    res = check_strong_phi_convex(fn(text), ident(Interval(-1, 1)), E1, c, grid)
    holds, witness = oracles.brute_force_check(*_oracle_inputs(text, None, (-1.0,), (1.0,), "euclidean", None, 9, 11), c)
    assert res.holds == holds
    if not holds:
        assert (res.witness.x, res.witness.y, res.witness.t) == witness[:3]


# ---------------------------------------------------------------------------
# refinement, workers, determinism


def test_refinement_only_tightens():
    f, phi = fn("x^3"), ident(Interval(-1, 1))
    coarse = check_strong_phi_convex(f, phi, E1, 0.0, GridSpec(11, 5, 0))
    fine = check_strong_phi_convex(f, phi, E1, 0.0, GridSpec(11, 5, 3))
    assert fine.min_slack <= coarse.min_slack
    assert fine.triples_scanned > coarse.triples_scanned


def test_workers_do_not_change_results():
    f, phi = fn("x1^2 + sin(x2)", 2), ident(Box.cube(-1, 1, 2))
    space = NormedSpace(2)
    grid = GridSpec(9, 7, 2)
    one = check_strong_phi_convex(f, phi, space, 0.5, grid, workers=1)
    four = check_strong_phi_convex(f, phi, space, 0.5, grid, workers=4)
    assert one == four


# ---------------------------------------------------------------------------
# segment restriction


def test_segment_restriction_square_everywhere():
    f, phi = fn("x^2"), ident(Interval(0, 1))
    pts = np.linspace(0, 1, 11)
    for x in pts:
        for y in pts:
            v = segment_restriction_convex(f, phi, x, y)
            assert v.holds and v.min_second_difference >= -1e-10


def test_segment_restriction_sin_fails_somewhere():
    f, phi = fn("sin(x)"), ident(Interval(0, 3))
    pts = np.linspace(0, 3, 11)
    assert any(not segment_restriction_convex(f, phi, x, y).holds for x in pts for y in pts)


@given(unit, unit)
@settings(max_examples=50, deadline=None)
def test_segment_restriction_agrees_with_midchecks(x, y):
    # a convex restriction has non-negative second differences
    f, phi = fn("exp(x) + x^4"), ident(Interval(0, 1))
    assert segment_restriction_convex(f, phi, x, y).holds


# ---------------------------------------------------------------------------
# shift identity


def test_shift_residual_max_norm_example():
    # R = D_g - (D_f - c t(1-t) ||x - y||^2) for f = ||.||_inf^2, c = 1, x = (1,1), y = (1,-1), t = 1/2:
    # D_f = 1, D_g = 0 - 1/4 * 4 + ... evaluated directly below
    space = NormedSpace(2, "maximum")
    f = RealFunction.from_text("max(abs(x1), abs(x2))^2", 2)
    phi = ident(Box.cube(-1, 1, 2))
    r = shift_identity_residual(f, phi, space, 1.0, (1.0, 1.0), (1.0, -1.0), 0.5)
    # D_f = 1 - 1 = 0; g = f - ||.||^2 = 0 so D_g = 0; R = 0 - (0 - 1) = 1
    assert r == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("text, c", [("x1^2 + x2^2", 1.0), ("exp(x1) + x2^4", 0.3), ("sin(x1) * x2", 2.0)])
def test_shift_residual_vanishes_in_euclidean_space(text, c):
    space = NormedSpace(2)
    rep = shift_lemma_report(fn(text, 2), ident(Box.cube(-1, 1, 2)), space, c, GridSpec(9, 7, 1), 1000, seed=3)
    assert rep.max_abs_residual <= 1e-10
    assert rep.agree


@given(
    st.tuples(st.floats(-1, 1), st.floats(-1, 1)),
    st.tuples(st.floats(-1, 1), st.floats(-1, 1)),
    st.floats(0, 1),
    st.floats(0, 5),
)
@settings(max_examples=200, deadline=None)
def test_shift_residual_identity_property(x, y, t, c):
    f = fn("x1^3 - x2^2 + exp(x1 * x2)", 2)
    r = shift_identity_residual(f, ident(Box.cube(-1, 1, 2)), NormedSpace(2), c, x, y, t)
    assert abs(r) <= 1e-12 * (1 + c) * 10


def test_shift_residual_is_nonzero_for_max_norm_generally():
    space = NormedSpace(2, "maximum")
    rep = shift_lemma_report(fn("x1^2", 2), ident(Box.cube(-1, 1, 2)), space, 1.0, GridSpec(5, 5, 0), 200)
    assert rep.max_abs_residual > 1e-3


# ---------------------------------------------------------------------------
# named examples


@pytest.mark.parametrize(
    "text, x, y, t, expected",
    [("x^2", 0.0, 1.0, 0.5, 0.25), ("x^3", -1.0, 0.0, 0.5, -0.375), ("3*x + 1", -0.7, 0.9, 0.3, 0.0)],
)
def test_defect_examples(text, x, y, t, expected):
    assert defect(fn(text), ident(Interval(-1, 1)), E1, x, y, t) == pytest.approx(expected, abs=1e-15)


def test_square_modulus_exact():
    est = estimate_modulus(fn("x^2"), ident(Interval(0, 1)), E1)
    assert est.c_star == pytest.approx(1.0, abs=1e-9)


def test_midconvex_sqnorm_examples():
    box = Box.cube(-1, 1, 2)
    mx = NormedSpace(2, "maximum")
    sq_max = RealFunction.from_text("max(abs(x1), abs(x2))^2", 2)
    res = check_strong_phi_midconvex(sq_max, ident(box), mx, 1.0, GridSpec(3, 3, 0))
    assert not res.holds and res.witness.slack == pytest.approx(-1.0)
    sq_euc = RealFunction.from_text("x1^2 + x2^2", 2)
    assert check_strong_phi_midconvex(sq_euc, ident(box), NormedSpace(2), 1.0, GridSpec(9, 3, 1)).holds


def test_segment_examples():
    phi = ident(Interval(0, 3))
    assert segment_restriction_convex(fn("x^2"), phi, 0.0, 1.0).holds
    assert not segment_restriction_convex(fn("sin(x)"), phi, 0.0, 3.0).holds
    lin = segment_restriction_convex(fn("2*x - 1"), phi, 0.5, 2.5)
    assert lin.holds and np.max(np.abs(lin.second_differences)) <= 1e-14


@pytest.mark.parametrize("kind, p", [("maximum", None), ("p_norm", 1.0), ("p_norm", 3.0)])
def test_shift_residual_zero_when_c_zero(kind, p):
    space = NormedSpace(2, kind, p)
    r = shift_identity_residual(fn("exp(x1) * x2", 2), ident(Box.cube(-1, 1, 2)), space, 0.0, (0.3, -0.2), (-0.9, 1.0), 0.4)
    assert abs(r) <= 1e-15


@pytest.mark.parametrize("text", ["x^2", "exp(x)", "x^4 - x", "abs(x - 0.2)"])
def test_convex_verdict_implies_convex_segments(text):
    f, phi = fn(text), ident(Interval(-1, 1))
    grid = GridSpec(15, 11, 0)
    assert check_strong_phi_convex(f, phi, E1, 0.0, grid).holds
    pts = np.linspace(-1, 1, 15)
    assert all(segment_restriction_convex(f, phi, x, y, tol=1e-9).holds for x in pts for y in pts)


@pytest.mark.parametrize("text, c", [("x1^2 + x2^2", 1.0), ("x1^2 + x2^2", 1.2), ("x1^4 + x2^2", 0.5), ("sin(x1) + x2^2", 0.2)])
def test_shift_verdicts_agree(text, c):
    space, phi, grid = NormedSpace(2), ident(Box.cube(-1, 1, 2)), GridSpec(9, 9, 1)
    f = fn(text, 2)
    g = ShiftedFunction(f, c, space)
    assert check_strong_phi_convex(f, phi, space, c, grid).holds == check_strong_phi_convex(g, phi, space, 0.0, grid).holds
