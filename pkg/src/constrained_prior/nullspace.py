"""Orthonormal bases for the null space of a constraint matrix."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSystem
from .errors import InvalidShape, SVDFailure

__all__ = ["BasisSource", "NullBasis", "svd_null_basis", "sum_zero_basis", "null_basis"]


class BasisSource(enum.Enum):
    SVD = "svd"
    CLOSED_FORM_SUM_ZERO = "closed_form_sum_zero"


@dataclass(frozen=True, eq=False)
class NullBasis:
    """``M`` with ``A M = 0`` and ``M^T M = I``; columns span ``N(A)``."""

    M: np.ndarray
    source: BasisSource

    @property
    def projector(self) -> np.ndarray:
        return self.M @ self.M.T


def svd_null_basis(c: ConstraintSystem) -> NullBasis:
    """Last ``K - J`` right singular vectors of ``A``.

    The sign and rotation of the returned columns are whatever LAPACK gives;
    only ``M @ M.T`` is meaningful.
    """
    try:
        _, _, vt = np.linalg.svd(c.A, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SVDFailure(str(exc)) from exc
    M = np.ascontiguousarray(vt[c.J:].T)
    M.setflags(write=False)
    return NullBasis(M, BasisSource.SVD)


def sum_zero_basis(K: int) -> NullBasis:
    """Closed-form orthonormal basis of ``{x : sum(x) = 0}`` in R^K.

    Column ``i`` (1-based) has ``1/sqrt(i(i+1))`` in rows ``1..i`` and
    ``-i/sqrt(i(i+1))`` in row ``i+1``.  No decomposition is involved, so the
    result is reproducible bit-for-bit.
    """
    K = int(K)
    if K < 2:
        raise InvalidShape(f"sum-to-zero basis needs K >= 2, got {K}")
    M = np.zeros((K, K - 1))
    for i in range(1, K):
        norm = np.sqrt(i * (i + 1.0))
        M[:i, i - 1] = 1.0 / norm
        M[i, i - 1] = -i / norm
    M.setflags(write=False)
    return NullBasis(M, BasisSource.CLOSED_FORM_SUM_ZERO)


def null_basis(c: ConstraintSystem, method: str = "auto") -> NullBasis:
    """Pick a basis for ``N(A)``.

    ``method="auto"`` uses the closed form when ``c`` is a sum-to-zero system
    and the SVD otherwise.
    """
    if method == "auto":
        method = "closed_form" if c.is_sum_to_zero() else "svd"
    if method == "svd":
        return svd_null_basis(c)
    if method == "closed_form":
        if not (c.J == 1 and np.all(c.A == c.A[0, 0])):
            raise InvalidShape("closed-form basis only applies to a constant single-row A")
        return sum_zero_basis(c.K)
    raise ValueError(f"unknown basis method {method!r}")
