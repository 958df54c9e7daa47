"""Free Meixner states, free Sheffer families and a noncommutative Favard theorem,
with exact rational arithmetic on truncated noncommutative power series."""

from .ncseries import NCSeries, SeriesTuple, comp_inverse, compose, left_derive, mul, mul_inverse
from .ncstates import (
    CumulantFunctional,
    MomentFunctional,
    check_conditionally_positive,
    check_positive,
    cumulants_from_moments,
    exp_oplus,
    is_tracial,
    moments_from_cumulants,
    scale_cumulants,
    solve_cumulant_relation,
)
from .favard import RecursionData, check_favard, extract_recursion, gram_schmidt_monic, state_from_recursion
from .sheffer import (
    MeixnerParams1D,
    RationalOrthogonalMatrix,
    free_product_meixner,
    meixner_check,
    one_d_meixner,
    rotate,
    sheffer_from_state,
)

__version__ = "0.1.0"
