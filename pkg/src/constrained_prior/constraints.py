"""Linear constraint systems and the conditional Gaussian they induce.

An unconstrained prior ``beta ~ N(0, D)`` with ``D = diag(lambda_sq)`` is
conditioned on the event ``A @ beta = b``.  The result is a degenerate normal
whose mean and covariance are computed by :func:`conditional_moments`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    InvalidScale,
    InvalidShape,
    RankDeficient,
    SingularSystem,
)

__all__ = [
    "ConstraintSystem",
    "DiagonalScales",
    "new_constraint",
    "conditional_moments",
    "rank_of",
    "rank_threshold",
]


def _frozen(x):
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


def rank_threshold(singular_values, shape):
    """Cutoff below which a singular value is treated as zero.

    Uses ``max(shape) * eps * sigma_max``, the same rule as
    :func:`numpy.linalg.matrix_rank`.
    """
    s = np.asarray(singular_values)
    if s.size == 0:
        return 0.0
    return max(shape) * np.finfo(float).eps * float(s.max())


def rank_of(cov) -> int:
    """Numerical rank of a square matrix via its singular values."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InvalidShape(f"expected a square matrix, got shape {cov.shape}")
    if cov.size == 0:
        return 0
    s = np.linalg.svd(cov, compute_uv=False)
    return int(np.count_nonzero(s > rank_threshold(s, cov.shape)))


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """A validated full-row-rank system ``A @ beta = b``.

    Build instances with :func:`new_constraint` (or the constructor, which runs
    the same checks).  Arrays are stored read-only.
    """

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim == 1:
            A = A[None, :]
        if A.ndim != 2 or A.size == 0:
            raise InvalidShape(f"A must be a non-empty matrix, got shape {A.shape}")
        b = np.array(self.b, dtype=float).reshape(-1)
        J, K = A.shape
        if b.shape[0] != J:
            raise DimensionMismatch(f"b has length {b.shape[0]} but A has {J} rows")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("A and b must be finite")
        s = np.linalg.svd(A, compute_uv=False)
        rank = int(np.count_nonzero(s > rank_threshold(s, A.shape)))
        if rank < J:
            raise RankDeficient(f"A has numerical rank {rank} < J={J}")
        if J >= K:
            raise InvalidShape(f"need 1 <= J <= K-1, got J={J}, K={K}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))

    @property
    def J(self) -> int:
        return self.A.shape[0]

    @property
    def K(self) -> int:
        return self.A.shape[1]

    def residual(self, beta) -> np.ndarray:
        """``A @ beta - b`` for a vector or for each row of a matrix."""
        beta = np.asarray(beta, dtype=float)
        return beta @ self.A.T - self.b

    def is_sum_to_zero(self) -> bool:
        """True when A is a positive multiple of the all-ones row and b is zero."""
        return (
            self.J == 1
            and self.A[0, 0] > 0
            and bool(np.all(self.A == self.A[0, 0]))
            and bool(np.all(self.b == 0))
        )

    @classmethod
    def sum_to_zero(cls, K: int) -> "ConstraintSystem":
        return cls(np.ones((1, K)), np.zeros(1))


def new_constraint(A, b) -> ConstraintSystem:
    return ConstraintSystem(A, b)


@dataclass(frozen=True, eq=False)
class DiagonalScales:
    """Diagonal of the unconstrained prior covariance, ``lambda_k**2``."""

    lambda_sq: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lambda_sq, dtype=float).reshape(-1)
        if lam.size == 0:
            raise InvalidShape("lambda_sq must be non-empty")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise InvalidScale("every lambda_sq entry must be finite and > 0")
        object.__setattr__(self, "lambda_sq", _frozen(lam))

    @property
    def K(self) -> int:
        return self.lambda_sq.shape[0]

    @classmethod
    def identity(cls, K: int) -> "DiagonalScales":
        return cls(np.ones(K))


def conditional_moments(c: ConstraintSystem, d: DiagonalScales):
    """Mean and covariance of ``N(0, D)`` conditioned on ``A beta = b``.

    Returns
    -------
    mean : ndarray, shape (K,)
        ``D A^T (A D A^T)^{-1} b``
    cov : ndarray, shape (K, K)
        ``D - D A^T (A D A^T)^{-1} A D``, symmetrized.

    Both are evaluated through a QR factorization of ``D^{1/2} A^T`` rather
    than by forming and solving with ``A D A^T``.
    """
    if c.K != d.K:
        raise DimensionMismatch(f"constraint has K={c.K}, scales have K={d.K}")
    A, b, lam = c.A, c.b, d.lambda_sq
    J = c.J
    root = np.sqrt(lam)
    # With G = D^{1/2} A^T = Q R, the projector D^{1/2} A^T (A D A^T)^{-1} A D^{1/2}
    # equals Q1 Q1^T, so the covariance is (D^{1/2} Q2)(D^{1/2} Q2)^T.  Forming it
    # as a product keeps the J null directions at roundoff relative to the
    # covariance itself instead of relative to D.
    try:
        Q, R = scipy.linalg.qr(root[:, None] * A.T, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SingularSystem(f"QR of D^(1/2) A^T failed: {exc}") from exc
    r = np.abs(np.diag(R))
    if r.min() <= rank_threshold(r, A.shape):
        raise SingularSystem("A D A^T is numerically singular")
    mean = root * (Q[:, :J] @ scipy.linalg.solve_triangular(R[:J], b, trans="T", check_finite=False))
    F = root[:, None] * Q[:, J:]
    cov = F @ F.T
    cov = 0.5 * (cov + cov.T)
    return mean, cov
