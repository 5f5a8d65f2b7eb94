"""Numerical analysis of strongly phi-convex functions."""

from .convexity import (
    CheckResult,
    ModulusEstimate,
    check_strong_phi_convex,
    check_strong_phi_midconvex,
    defect,
    estimate_modulus,
    segment_restriction_convex,
    shift_identity_residual,
    shift_lemma_report,
)
from .domain import (
    Box,
    GridSpec,
    Interval,
    NormedSpace,
    PhiMap,
    RealFunction,
    ShiftedFunction,
    SquaredNorm,
    ViolationWitness,
    make_grid,
    norm,
)
from .errors import PhiConvexError
from .exprlang import Expression, evaluate, parse
from .hadamard import HHPairReport, HHReport, hh_bounds, product_pair_bound, product_self_bound
from .normgeom import (
    SpaceVerdict,
    counterexample_search,
    jn_test,
    parallelogram_defect,
    sqnorm_strong_convexity_check,
)
from .quadrature import QuadResult, integrate

__version__ = "0.1.0"
