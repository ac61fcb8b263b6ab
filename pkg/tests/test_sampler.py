import numpy as np
import pytest

from constrained_prior import (
    CholeskyFailure,
    ConstraintSystem,
    DiagonalScales,
    RngStream,
    build,
    draw,
    draw_batch,
    sum_zero_basis,
)
from constrained_prior.sampler import cholesky_with_jitter
from conftest import random_system


def test_build_sum_to_zero_identity_reduces_to_identity():
    g = build(ConstraintSystem.sum_to_zero(3))
    np.testing.assert_allclose(g.omega, np.eye(2), atol=1e-15)
    np.testing.assert_array_equal(g.basis, sum_zero_basis(3).M)


def test_build_two_dim_scaled():
    g = build(ConstraintSystem([[1, 1]], [0]), DiagonalScales([4, 1]))
    assert g.omega.shape == (1, 1)
    assert g.omega[0, 0] == pytest.approx(8 / 5, rel=1e-14)
    assert g.reduced_chol[0, 0] == pytest.approx(np.sqrt(8 / 5), rel=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_reduced_factor_is_lower_with_positive_diagonal(seed):
    gen = np.random.default_rng(seed)
    K = int(gen.integers(2, 12))
    J = int(gen.integers(1, K))
    A, b, lam = random_system(gen, K, J)
    g = build(ConstraintSystem(A, b), DiagonalScales(lam))
    L = g.reduced_chol
    assert np.all(np.triu(L, 1) == 0)
    assert np.all(np.diag(L) > 0)
    assert g.jitter == 0.0
    assert np.linalg.norm(L @ L.T - g.omega) <= 1e-10 * np.linalg.norm(g.omega)
    F = g.factor
    assert np.linalg.norm(F @ F.T - g.cov) <= 1e-10 * np.linalg.norm(g.cov)


def test_zero_z_returns_mean(rng):
    g = build(ConstraintSystem([[1, 2, -1]], [3]), DiagonalScales([1, 2, 3]))
    np.testing.assert_array_equal(draw(g, rng, z=np.zeros(2)), g.mean)


def test_sum_to_zero_draws(rng):
    g = build(ConstraintSystem.sum_to_zero(5))
    x = draw_batch(g, rng, 1000)
    assert np.abs(x.sum(1)).max() <= 1e-10


def test_single_draw_matches_batch(rng):
    g = build(ConstraintSystem.sum_to_zero(4))
    batch = draw_batch(g, rng, 10)
    np.testing.assert_array_equal(draw(g, rng, index=0), draw_batch(g, rng, 1)[0])
    np.testing.assert_allclose(draw(g, rng, index=6), batch[6], rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(draw_batch(g, rng, 4, start=3), batch[3:7], rtol=1e-15, atol=1e-15)


def test_distinct_streams_do_not_repeat():
    g = build(ConstraintSystem.sum_to_zero(3))
    a = draw_batch(g, RngStream(9, 0), 500)
    b = draw_batch(g, RngStream(9, 1), 500)
    both = np.vstack([a, b])
    assert len(np.unique(both, axis=0)) == 1000
    assert abs(np.corrcoef(a[:, 0], b[:, 0])[0, 1]) < 4 / np.sqrt(500)


def test_batch_reproducible_bytes():
    g = build(ConstraintSystem([[1, 0, 2, 1]], [1]), DiagonalScales([1, 2, 3, 4]))
    assert draw_batch(g, RngStream(1, 4), 64).tobytes() == draw_batch(g, RngStream(1, 4), 64).tobytes()


@pytest.mark.slow
def test_monte_carlo_moments():
    g = build(ConstraintSystem.sum_to_zero(3))
    n = 100_000
    x = draw_batch(g, RngStream(42), n)
    se_mean = np.sqrt(np.diag(g.cov) / n)
    assert np.all(np.abs(x.mean(0) - g.mean) <= 4 * se_mean)
    prods = x[:, :, None] * x[:, None, :]
    se_cov = prods.std(0) / np.sqrt(n)
    assert np.all(np.abs(prods.mean(0) - g.cov) <= 3 * se_cov + 1e-15)


@pytest.mark.slow
def test_nonzero_mean_monte_carlo():
    g = build(ConstraintSystem([[1, 1, 0], [0, 1, -1]], [2, -1]), DiagonalScales([1, 4, 0.25]))
    n = 100_000
    x = draw_batch(g, RngStream(43), n)
    se = np.sqrt(np.diag(g.cov) / n)
    assert np.all(np.abs(x.mean(0) - g.mean) <= 4 * se + 1e-14)


def test_cholesky_jitter_policy():
    # singular by one ulp-scale eigenvalue: plain Cholesky fails, jitter rescues it
    v = np.array([1.0, -1.0]) / np.sqrt(2)
    near = np.eye(2) - np.outer(v, v) * (1 + 1e-15)
    L, jitter = cholesky_with_jitter(near)
    assert jitter == pytest.approx(1e-12 * np.trace(near) / 2)
    np.testing.assert_allclose(L @ L.T, near + jitter * np.eye(2), atol=1e-14)
    with pytest.raises(CholeskyFailure):
        cholesky_with_jitter(np.array([[1.0, 0.0], [0.0, -1.0]]))
