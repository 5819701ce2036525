"""Automorphic measures on Schottky-type circle groups and the finite-gap
function toolkit: group construction, measure extension and verification,
Herglotz evaluation, period maps with the positive-weight solver, extreme
point analysis, and the explicit two-sided h-function with Krein checks."""

from .errors import (
    ConvergenceError,
    DegenerateKernelError,
    DomainError,
    NonPositiveKernelError,
    NotSplittableError,
    ResourceLimitError,
    RlxError,
    ValidationError,
)
from .moebius import (
    IDENTITY,
    INF,
    MoebiusMap,
    apply,
    chordal,
    classify,
    cocycle,
    cocycle_at_image,
    compose,
    homogeneous,
    inverse,
    points_equal,
    transfer_density,
)
from .schottky import (
    CircleDatum,
    FundamentalIntervals,
    SchottkyConfig,
    enumerate_words,
    fundamental_intervals,
    generators,
    limit_set_sample,
    locate,
    quotient_bounds,
    word_matrix,
    word_of_matrix,
)
from .autmeasure import (
    Atom,
    AutomorphicAtoms,
    FundamentalMeasure,
    discretize,
    extend,
    poincare_many,
    poincare_series,
    pushforward,
    restrict,
    transform,
    verify_automorphic,
)
from .herglotz import (
    HerglotzData,
    WeightSolution,
    affine_action,
    balance,
    boundary_recover_atom,
    deriv_at_i,
    evaluate,
    evaluate_many,
    from_normalized,
    is_extreme,
    membership_x,
    period,
    period_map,
    period_matrix,
    solve_weights,
    split_nonextreme,
    to_normalized,
)
from .finitegap import (
    Divisor,
    GapSet,
    assign_atom,
    eval_h,
    krein_check,
    krein_xi,
    residue,
    torus_coords,
    torus_decode,
)

__version__ = "0.1.0"
