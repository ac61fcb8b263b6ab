from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from constrained_prior import (
    ConstraintSystem,
    DiagonalScales,
    InvalidScale,
    InvalidShape,
    RngStream,
    build,
    conditional_moments,
)
from constrained_prior.families import (
    Family,
    FamilySpec,
    HalfCauchy,
    HalfStudentT,
    InvGamma,
    RhsParams,
    hier_ridge_sample,
    horseshoe_covariance,
    horseshoe_sample,
    hyper_draws,
    rhs_local_scale,
    rhs_sample,
    rhs_tau0,
    ridge_covariance,
    ridge_sample,
    sample_family,
)
from oracles import horseshoe_entry


# -- ridge -----------------------------------------------------------------


def test_ridge_covariance_examples():
    np.testing.assert_array_equal(ridge_covariance(2), [[1, -1], [-1, 1]])
    S = ridge_covariance(3)
    np.testing.assert_array_equal(np.diag(S), 1.0)
    assert S[0, 1] == S[2, 1] == -0.5


@pytest.mark.parametrize("K", [2, 3, 7, 50, 200])
def test_ridge_covariance_row_sums(K):
    S = ridge_covariance(K)
    assert np.abs(S.sum(1)).max() <= 1e-12
    np.testing.assert_array_equal(np.diag(S), 1.0)


def test_ridge_covariance_matches_conditioned_prior():
    for K in (2, 5, 11):
        _, S = conditional_moments(ConstraintSystem.sum_to_zero(K), DiagonalScales(np.full(K, K / (K - 1))))
        np.testing.assert_allclose(S, ridge_covariance(K), atol=1e-14)


def test_ridge_rejects_small_K(rng):
    with pytest.raises(InvalidShape):
        ridge_covariance(1)
    with pytest.raises(InvalidShape):
        FamilySpec(Family.RIDGE, 1)


def test_ridge_zero_hook(rng):
    np.testing.assert_array_equal(ridge_sample(5, rng, z=np.zeros(4)), 0.0)


def test_ridge_draws_sum_to_zero(rng):
    beta = ridge_sample(9, rng, size=2000)
    assert np.abs(beta.sum(1)).max() <= 1e-12


def test_ridge_single_draw_is_row_of_batch(rng):
    batch = ridge_sample(4, rng, size=8)
    np.testing.assert_allclose(ridge_sample(4, rng, start=5), batch[5], rtol=1e-14, atol=1e-15)


@pytest.mark.slow
def test_ridge_marginals_and_correlation():
    n, K = 100_000, 4
    beta = ridge_sample(K, RngStream(11), size=n)
    assert np.all(np.abs(beta.var(0, ddof=1) - 1) <= 4 * np.sqrt(2 / n))
    R = np.corrcoef(beta, rowvar=False)[~np.eye(K, dtype=bool)]
    rho = -1 / 3
    assert np.all(np.abs(R - rho) <= 4 * (1 - rho**2) / np.sqrt(n))
    for k in range(K):
        assert stats.kstest(beta[:, k], "norm").pvalue >= 1e-3


# -- hierarchical ridge ----------------------------------------------------


def test_hier_ridge_unit_lambda_equals_ridge(rng):
    beta, lam = hier_ridge_sample(6, rng, size=10, lam=1.0)
    np.testing.assert_array_equal(beta, ridge_sample(6, rng, size=10))
    np.testing.assert_array_equal(lam, 1.0)


def test_hier_ridge_zero_hook(rng):
    beta, lam = hier_ridge_sample(3, rng, z=np.zeros(2), lam=2.0)
    np.testing.assert_array_equal(beta, 0.0)
    assert lam == 2.0


def test_hier_ridge_constraint_scales_with_lambda(rng):
    K = 8
    beta, lam = hier_ridge_sample(K, rng, size=5000)
    assert np.all(np.abs(beta.sum(1)) <= 1e-10 * lam * K)
    assert np.all(lam > 0)


def test_hier_ridge_lambda_is_global(rng):
    beta, lam = hier_ridge_sample(5, rng, size=50)
    np.testing.assert_allclose(beta / lam[:, None], ridge_sample(5, rng, size=50), rtol=1e-12, atol=1e-15)


# -- horseshoe -------------------------------------------------------------


def test_horseshoe_covariance_examples():
    S = horseshoe_covariance([1, 1, 1], 1.0, compensate=False)
    np.testing.assert_allclose(np.diag(S), 2 / 3, rtol=1e-15)
    np.testing.assert_allclose(S[~np.eye(3, dtype=bool)], -1 / 3, rtol=1e-15)
    S = horseshoe_covariance([4, 1, 1], 1.0, compensate=False)
    assert S[0, 0] == pytest.approx(4 / 3, rel=1e-15)
    assert S[0, 1] == pytest.approx(-2 / 3, rel=1e-15)


@pytest.mark.parametrize("K", [2, 3, 10, 50])
def test_horseshoe_equal_scales_is_ridge(K):
    np.testing.assert_allclose(horseshoe_covariance(np.ones(K), 1.0, True), ridge_covariance(K), rtol=1e-14, atol=1e-15)


def test_compensated_diagonal_under_equal_scales():
    K, lam_sq, tau = 6, 2.5, 0.7
    S = horseshoe_covariance(np.full(K, lam_sq), tau, True)
    np.testing.assert_allclose(np.diag(S), tau**2 * lam_sq, rtol=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.05, 20.0), min_size=2, max_size=8),
    st.floats(0.1, 5.0),
)
def test_horseshoe_covariance_closed_form(lam_sq, tau):
    K = len(lam_sq)
    S = horseshoe_covariance(lam_sq, tau, compensate=False)
    F = [Fraction(v) for v in lam_sq]
    t2 = Fraction(tau) ** 2
    for k in range(K):
        for j in range(K):
            exact = float(horseshoe_entry(F, t2, k, j))
            assert S[k, j] == pytest.approx(exact, rel=1e-12, abs=1e-14 * float(t2) * max(lam_sq))
    # conditioning the unconstrained prior gives the same matrix
    _, S2 = conditional_moments(ConstraintSystem.sum_to_zero(K), DiagonalScales(np.asarray(lam_sq) * tau**2))
    np.testing.assert_allclose(S, S2, rtol=1e-10, atol=1e-12 * tau**2 * max(lam_sq))


def test_horseshoe_covariance_validation():
    with pytest.raises(InvalidScale):
        horseshoe_covariance([1.0, 0.0, 2.0])
    with pytest.raises(InvalidScale):
        horseshoe_covariance([1.0, 2.0], tau=-1)
    with pytest.raises(InvalidShape):
        horseshoe_covariance([1.0])


def test_horseshoe_equal_scales_reduce_to_ridge(rng):
    z = rng.normal(0, 20, 4)
    ridge = ridge_sample(5, rng, size=20, z=z)
    beta, _ = horseshoe_sample(5, rng, True, size=20, z=z, lam=1.0, tau=2.0)
    np.testing.assert_allclose(beta, 2.0 * ridge, rtol=1e-12, atol=1e-13)
    # a common local scale acts like another global factor
    beta, _ = horseshoe_sample(5, rng, True, size=20, z=z, lam=3.0, tau=2.0)
    np.testing.assert_allclose(beta, 6.0 * ridge, rtol=1e-12, atol=1e-12)


def test_horseshoe_draw_constraint_and_hyper(rng):
    K = 10
    beta, h = horseshoe_sample(K, rng, size=5000)
    scale = h.tau * h.lambda_local.max(1) * K
    assert np.all(np.abs(beta.sum(1)) <= 1e-9 * scale)
    assert np.all(h.lambda_local > 0) and np.all(h.tau > 0)
    one, h1 = horseshoe_sample(K, rng, start=17)
    np.testing.assert_allclose(one, beta[17], rtol=1e-13, atol=1e-15 * scale[17])
    np.testing.assert_array_equal(h1.lambda_local, h.lambda_local[17])


@pytest.mark.slow
def test_horseshoe_conditional_covariance_monte_carlo():
    n = 100_000
    lam = np.array([2.0, 1.0, 1.0])
    beta, _ = horseshoe_sample(3, RngStream(12), compensate=False, size=n, lam=lam, tau=1.0)
    target = horseshoe_covariance(lam**2, 1.0, compensate=False)
    prods = beta[:, :, None] * beta[:, None, :]
    se = prods.std(0) / np.sqrt(n)
    assert np.all(np.abs(prods.mean(0) - target) <= 4 * se + 1e-15)


# -- regularized horseshoe -------------------------------------------------


def test_rhs_local_scale_examples():
    assert rhs_local_scale(4.0, 1e12, 1.0) == pytest.approx(4.0, rel=1e-10)
    assert rhs_local_scale(1.0, 1.0, 1.0) == 0.5
    assert rhs_local_scale(1e12, 1.0, 1.0) == pytest.approx(1.0, rel=1e-11)
    with pytest.raises(InvalidScale):
        rhs_local_scale(1.0, 0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-2, 1e2), st.floats(1.01, 10))
def test_rhs_local_scale_monotone_and_bounded(zeta_sq, c_sq, tau, bump):
    a = rhs_local_scale(zeta_sq, c_sq, tau)
    b = rhs_local_scale(zeta_sq * bump, c_sq, tau)
    assert a < b <= c_sq / tau**2 * (1 + 1e-14)
    # slab-off limit: relative gap bounded by zeta^2 tau^2 / c^2
    # rounding 1 + eps costs a few ulps in absolute terms
    assert abs(a - zeta_sq) / zeta_sq <= zeta_sq * tau**2 / c_sq * (1 + 1e-12) + 4 * np.finfo(float).eps


def test_rhs_tau0_examples():
    assert rhs_tau0(FamilySpec(Family.RHS, 10, RhsParams(p0=1, sigma_tilde=1, n_obs=100))) == pytest.approx(1 / 90, rel=1e-15)
    assert rhs_tau0(FamilySpec(Family.RHS, 8, RhsParams(p0=4, sigma_tilde=1, n_obs=1))) == 1.0
    with pytest.raises(InvalidShape):
        FamilySpec(Family.RHS, 6, RhsParams(p0=6))
    with pytest.raises(InvalidShape):
        rhs_tau0(FamilySpec(Family.RIDGE, 6, RhsParams(p0=6)))


@pytest.mark.parametrize("field, value", [("nu1", 0), ("nu2", -1), ("nu3", 0), ("s_sq", 0), ("sigma_tilde", -2), ("n_obs", 0)])
def test_rhs_params_validation(field, value):
    with pytest.raises(InvalidScale):
        FamilySpec(Family.RHS, 5, RhsParams(**{field: value}))


def test_rhs_slab_off_reduces_to_ridge(rng):
    spec = FamilySpec(Family.RHS, 6)
    z = rng.normal(0, 10, 5)
    beta, h = rhs_sample(spec, rng, size=10, z=z, zeta=1.0, c_sq=1e12, tau=1.0)
    np.testing.assert_allclose(beta, ridge_sample(6, rng, size=10, z=z), rtol=1e-6, atol=1e-6)


def test_rhs_fixed_hooks_covariance(rng):
    zt = rhs_local_scale(np.ones(4), 1.0, 1.0)
    np.testing.assert_array_equal(zt, 0.5)
    S = horseshoe_covariance(zt, 1.0, True)
    expected = (4 / 3) * 0.5 * (np.eye(4) - np.ones((4, 4)) / 4)
    np.testing.assert_allclose(S, expected, rtol=1e-14, atol=1e-16)
    np.testing.assert_allclose(np.diag(S), 0.5, rtol=1e-14)
    _, h = rhs_sample(FamilySpec(Family.RHS, 4), rng, zeta=1.0, c_sq=1.0, tau=1.0)
    np.testing.assert_array_equal(h.zeta_tilde_sq, 0.5)


def test_rhs_draws_constraint(rng):
    spec = FamilySpec(Family.RHS, 12, RhsParams(p0=3, sigma_tilde=2.0, n_obs=50))
    beta, h = rhs_sample(spec, rng, size=5000)
    scale = h.tau * np.sqrt(h.zeta_tilde_sq.max(1)) * spec.K
    assert np.all(np.abs(beta.sum(1)) <= 1e-9 * scale)
    assert np.all(h.zeta_tilde_sq <= (h.c_sq / h.tau**2)[:, None] * (1 + 1e-12))


def test_rhs_sample_wrong_family(rng):
    with pytest.raises(ValueError):
        rhs_sample(FamilySpec(Family.HORSESHOE, 4), rng)


# -- hyperpriors -----------------------------------------------------------


@pytest.mark.slow
def test_half_cauchy_median():
    n = 100_000
    x = hyper_draws(RngStream(13), HalfCauchy(), n)
    assert np.all(x > 0)
    # half-Cauchy density at its median 1 is 2/(pi * 2) = 1/pi
    assert abs(np.median(x) - 1.0) <= 4 / (2 * (1 / np.pi) * np.sqrt(n))


@pytest.mark.slow
def test_inverse_gamma_mean():
    n = 100_000
    x = hyper_draws(RngStream(14), InvGamma(3.0, 2.0), n)
    assert np.all(x > 0)
    assert abs(x.mean() - 1.0) <= 4 * x.std(ddof=1) / np.sqrt(n)


def test_hyper_ppf_against_scipy():
    u = np.linspace(0.01, 0.99, 99)
    np.testing.assert_allclose(HalfCauchy().ppf(u), stats.halfcauchy.ppf(u), rtol=1e-12)
    np.testing.assert_allclose(HalfStudentT(4.0, 2.0).ppf(u), np.abs(2.0 * stats.t.ppf(u, 4.0)), rtol=1e-10)
    np.testing.assert_allclose(HalfStudentT(1.0).ppf(u), np.abs(stats.cauchy.ppf(u)), rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(InvGamma(3.0, 2.0).ppf(u), stats.invgamma.ppf(u, 3.0, scale=2.0), rtol=1e-10)


def test_hyper_ks(rng):
    x = hyper_draws(rng, HalfStudentT(3.0, 0.5), 20_000)
    assert stats.kstest(x, lambda v: 2 * stats.t.cdf(v / 0.5, 3.0) - 1).pvalue >= 1e-3


@pytest.mark.parametrize("dist", [HalfCauchy(-1.0), HalfStudentT(0.0), HalfStudentT(2.0, 0.0), InvGamma(0.0, 1.0), InvGamma(1.0, -1.0)])
def test_hyper_validation(rng, dist):
    with pytest.raises(InvalidScale):
        hyper_draws(rng, dist, 3)


def test_hyper_draws_positive(rng):
    for dist in (HalfCauchy(), HalfStudentT(1.0), HalfStudentT(7.0, 3.0), InvGamma(2.0, 4.0)):
        assert np.all(hyper_draws(rng, dist, 5000) > 0)


# -- dispatch --------------------------------------------------------------


@pytest.mark.parametrize("family", list(Family))
def test_sample_family_shapes_and_constraint(rng, family):
    beta, hyper = sample_family(FamilySpec(family, 7), rng, 300)
    assert beta.shape == (300, 7)
    assert np.all(np.isfinite(beta))
    assert np.abs(beta.sum(1)).max() <= 1e-9 * np.abs(beta).max(1).max() * 7 + 1e-300
    if family is Family.RIDGE:
        assert hyper is None


def test_ridge_uses_closed_form_factor():
    K = 5
    g = build(ConstraintSystem.sum_to_zero(K), DiagonalScales(np.full(K, K / (K - 1))))
    from constrained_prior.families import _ridge_factor

    M, L = _ridge_factor(K)
    np.testing.assert_allclose(M @ L @ L.T @ M.T, g.cov, atol=1e-14)
