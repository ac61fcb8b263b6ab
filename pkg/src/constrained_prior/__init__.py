"""Gaussian priors that satisfy linear equality constraints exactly.

Condition ``N(0, diag(lambda_sq))`` on ``A beta = b`` and sample the resulting
degenerate normal through an orthonormal null-space basis.  Ready-made
sum-to-zero versions of the ridge, hierarchical ridge, horseshoe and
regularized horseshoe priors live in :mod:`constrained_prior.families`.
"""

__version__ = "0.1.0"

from .constraints import (
    ConstraintSystem,
    DiagonalScales,
    conditional_moments,
    new_constraint,
    rank_of,
)
from .errors import (
    CholeskyFailure,
    ConstrainedPriorError,
    DimensionMismatch,
    InvalidScale,
    InvalidShape,
    RankDeficient,
    SingularSystem,
    SVDFailure,
)
from .families import (
    Family,
    FamilySpec,
    HyperDraw,
    RhsParams,
    hier_ridge_sample,
    horseshoe_covariance,
    horseshoe_sample,
    rhs_local_scale,
    rhs_sample,
    rhs_tau0,
    ridge_covariance,
    ridge_sample,
)
from .nullspace import NullBasis, sum_zero_basis, svd_null_basis
from .rng import RngStream
from .sampler import ConstrainedGaussian, build, draw, draw_batch
