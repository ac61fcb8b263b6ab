import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constrained_prior import ConstraintSystem, InvalidShape, sum_zero_basis, svd_null_basis
from constrained_prior.nullspace import BasisSource, null_basis
from oracles import helmert_loop


def _orthonormal_null(M, A, K):
    assert np.abs(A @ M).max() <= 1e-12 * K
    assert np.abs(M.T @ M - np.eye(M.shape[1])).max() <= 1e-12


def test_svd_basis_two_dims():
    M = svd_null_basis(ConstraintSystem([[1, 1]], [0])).M
    assert M.shape == (2, 1)
    assert M[0, 0] == pytest.approx(-M[1, 0])
    assert abs(M[0, 0]) == pytest.approx(1 / np.sqrt(2))


def test_svd_basis_coordinate_null_space():
    A = np.array([[1.0, 0, 0]])
    M = svd_null_basis(ConstraintSystem(A, [0])).M
    assert np.abs(M[0]).max() <= 1e-15
    _orthonormal_null(M, A, 3)


def test_svd_basis_random():
    A = np.random.default_rng(3).normal(size=(2, 5))
    nb = svd_null_basis(ConstraintSystem(A, [0, 0]))
    assert nb.source is BasisSource.SVD
    _orthonormal_null(nb.M, A, 5)
    # independent projector onto N(A)
    P = np.eye(5) - A.T @ np.linalg.inv(A @ A.T) @ A
    np.testing.assert_allclose(nb.projector, P, atol=1e-12)


def test_closed_form_small():
    s2, s6 = np.sqrt(2), np.sqrt(6)
    np.testing.assert_allclose(sum_zero_basis(2).M, [[1 / s2], [-1 / s2]], rtol=1e-15)
    np.testing.assert_allclose(
        sum_zero_basis(3).M, [[1 / s2, 1 / s6], [-1 / s2, 1 / s6], [0, -2 / s6]], rtol=1e-15, atol=0
    )


@pytest.mark.parametrize("K", [2, 3, 4, 7, 20, 64])
def test_closed_form_matches_loop(K):
    nb = sum_zero_basis(K)
    assert nb.source is BasisSource.CLOSED_FORM_SUM_ZERO
    np.testing.assert_array_equal(nb.M, helmert_loop(K))
    _orthonormal_null(nb.M, np.ones((1, K)), K)


def test_closed_form_rejects_k1():
    with pytest.raises(InvalidShape):
        sum_zero_basis(1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 64))
def test_projectors_agree(K):
    c = ConstraintSystem.sum_to_zero(K)
    P1 = svd_null_basis(c).projector
    P2 = sum_zero_basis(K).projector
    assert np.abs(P1 - P2).max() <= 1e-10


def test_auto_selection():
    assert null_basis(ConstraintSystem([[2, 2, 2]], [0])).source is BasisSource.CLOSED_FORM_SUM_ZERO
    assert null_basis(ConstraintSystem([[1, 1, 1]], [1])).source is BasisSource.SVD
    assert null_basis(ConstraintSystem([[-1, -1, -1]], [0])).source is BasisSource.SVD
    assert null_basis(ConstraintSystem([[1, 2, 1]], [0])).source is BasisSource.SVD
