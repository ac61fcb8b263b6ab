"""Sampling from the degenerate conditional Gaussian.

The covariance ``Sigma*`` has rank ``K - J``, so it cannot be Cholesky
factored directly.  We project onto an orthonormal basis ``M`` of ``N(A)``,
factor the reduced covariance ``Omega = M^T Sigma* M = L L^T`` there, and map
standard normals back with ``beta = m* + M L z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSystem, DiagonalScales, conditional_moments
from .errors import CholeskyFailure, DimensionMismatch
from .nullspace import NullBasis, null_basis
from .rng import LANE_Z, RngStream

__all__ = [
    "JITTER_SCALE",
    "ReducedFactor",
    "ConstrainedGaussian",
    "cholesky_with_jitter",
    "reduce_covariance",
    "build",
    "draw",
    "draw_batch",
]

JITTER_SCALE = 1e-12


def cholesky_with_jitter(omega):
    """Lower Cholesky factor of ``omega`` and the jitter that was needed.

    One retry with ``1e-12 * trace / dim`` on the diagonal; beyond that the
    matrix is treated as genuinely indefinite.
    """
    omega = np.asarray(omega, dtype=float)
    try:
        return np.linalg.cholesky(omega), 0.0
    except np.linalg.LinAlgError:
        pass
    n = omega.shape[0]
    jitter = JITTER_SCALE * np.trace(omega) / n
    try:
        return np.linalg.cholesky(omega + jitter * np.eye(n)), jitter
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(
            f"reduced covariance not positive definite after jitter {jitter:.3g}"
        ) from exc


@dataclass(frozen=True, eq=False)
class ReducedFactor:
    omega: np.ndarray
    L: np.ndarray
    jitter: float = 0.0


def reduce_covariance(cov, M) -> ReducedFactor:
    omega = M.T @ cov @ M
    omega = 0.5 * (omega + omega.T)
    L, jitter = cholesky_with_jitter(omega)
    return ReducedFactor(omega, L, jitter)


@dataclass(frozen=True, eq=False)
class ConstrainedGaussian:
    """Everything needed for repeated draws from ``N(m*, Sigma*)``."""

    mean: np.ndarray
    cov: np.ndarray
    basis: np.ndarray
    reduced_chol: np.ndarray
    constraint: ConstraintSystem
    omega: np.ndarray
    jitter: float = 0.0
    basis_source: object = None

    @property
    def K(self) -> int:
        return self.mean.shape[0]

    @property
    def dim(self) -> int:
        """Dimension of the nondegenerate subspace, ``K - J``."""
        return self.basis.shape[1]

    @property
    def factor(self) -> np.ndarray:
        """``M @ L``, the K x (K-J) square-root of the covariance."""
        return self.basis @ self.reduced_chol


def build(c: ConstraintSystem, d: DiagonalScales | None = None, basis="auto") -> ConstrainedGaussian:
    """Precompute the conditional moments, null basis and reduced factor.

    ``basis`` is ``"auto"``, ``"svd"``, ``"closed_form"`` or a ready
    :class:`NullBasis`.
    """
    if d is None:
        d = DiagonalScales.identity(c.K)
    mean, cov = conditional_moments(c, d)
    nb = basis if isinstance(basis, NullBasis) else null_basis(c, basis)
    if nb.M.shape != (c.K, c.K - c.J):
        raise DimensionMismatch(f"basis has shape {nb.M.shape}, need {(c.K, c.K - c.J)}")
    rf = reduce_covariance(cov, nb.M)
    arrays = [mean, cov, rf.omega, rf.L]
    for a in arrays:
        a.setflags(write=False)
    return ConstrainedGaussian(
        mean=mean,
        cov=cov,
        basis=nb.M,
        reduced_chol=rf.L,
        constraint=c,
        omega=rf.omega,
        jitter=rf.jitter,
        basis_source=nb.source,
    )


def draw_batch(g: ConstrainedGaussian, rng: RngStream, n: int, start: int = 0, z=None) -> np.ndarray:
    """``n`` draws as an ``(n, K)`` array.

    Row ``i`` uses the standard normals at stream position ``start + i``.
    Pass ``z`` (shape ``(n, K-J)``) to bypass the generator.
    """
    if z is None:
        if n < 1:
            raise ValueError("n must be >= 1")
        z = rng.normal(start, n, g.dim, lane=LANE_Z)
    else:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] != g.dim:
            raise DimensionMismatch(f"z has {z.shape[1]} columns, need {g.dim}")
    return g.mean + (z @ g.reduced_chol.T) @ g.basis.T


def draw(g: ConstrainedGaussian, rng: RngStream, index: int = 0, z=None) -> np.ndarray:
    """A single draw at stream position ``index``."""
    if z is not None:
        z = np.reshape(z, (1, -1))
    return draw_batch(g, rng, 1, start=index, z=z)[0]
