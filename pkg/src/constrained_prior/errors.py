"""Exception hierarchy shared across the package."""

import numpy as np


class ConstrainedPriorError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ConstrainedPriorError, ValueError):
    pass


class InvalidShape(ConstrainedPriorError, ValueError):
    pass


class InvalidScale(ConstrainedPriorError, ValueError):
    pass


class RankDeficient(ConstrainedPriorError, ValueError):
    pass


class SingularSystem(ConstrainedPriorError, np.linalg.LinAlgError):
    pass


class SVDFailure(ConstrainedPriorError, np.linalg.LinAlgError):
    pass


class CholeskyFailure(ConstrainedPriorError, np.linalg.LinAlgError):
    """Reduced covariance was not numerically positive definite, even after jitter."""
