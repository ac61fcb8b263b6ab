"""Verification checks, per-family suites and the conjugate regression demo.

Every check returns a :class:`CheckResult` carrying its statistic and the
threshold it was compared against, so a serialized report can be audited
without rerunning anything.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import stats

from . import kernels
from .constraints import ConstraintSystem, DiagonalScales, rank_of
from .errors import DimensionMismatch, InvalidScale
from .families import (
    Family,
    FamilySpec,
    hier_ridge_sample,
    horseshoe_covariance,
    horseshoe_sample,
    rhs_local_scale,
    rhs_sample,
    rhs_tau0,
    ridge_covariance,
    ridge_sample,
)
from .nullspace import svd_null_basis, sum_zero_basis
from .rng import LANE_Z, RngStream
from .sampler import ConstrainedGaussian, build, draw_batch

__all__ = [
    "MOMENT_Z_MAX",
    "CheckResult",
    "VerificationReport",
    "check_constraint",
    "check_moments",
    "check_rank",
    "check_projector_equality",
    "check_covariance_identity",
    "check_marginal_variance",
    "check_correlation",
    "check_ks_normal",
    "check_median",
    "DemoResult",
    "conjugate_regression_demo",
    "run_family_suite",
    "run_constraint_suite",
    "default_suite",
]

MOMENT_Z_MAX = 5.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "statistic": float(self.statistic),
            "threshold": float(self.threshold),
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    subject: str
    seed: int
    n_samples: int
    stream: int = 0
    checks: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def to_dict(self):
        out = {
            "subject": self.subject,
            "seed": self.seed,
            "stream": self.stream,
            "n_samples": self.n_samples,
            "all_passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }
        if self.extra:
            out["extra"] = self.extra
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def summary_lines(self):
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            yield f"[{flag}] {self.subject}: {c.name} statistic={c.statistic:.4g} threshold={c.threshold:.4g}"


def _le(name, stat, thr, detail=""):
    return CheckResult(name, bool(stat <= thr), float(stat), float(thr), detail)


def _samples(samples, K=None):
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    if K is not None and x.shape[1] != K:
        raise DimensionMismatch(f"samples have {x.shape[1]} columns, expected {K}")
    return x


# -- individual checks -----------------------------------------------------


def check_constraint(samples, c: ConstraintSystem, threshold: float = 1e-9, scale=None,
                     name: str = "constraint_residual") -> CheckResult:
    """Max over rows of ``||A beta - b||_inf`` (optionally divided per row by ``scale``)."""
    x = _samples(samples, c.K)
    r = np.abs(c.residual(x)).max(axis=1)
    if scale is not None:
        r = r / np.asarray(scale, dtype=float)
    return _le(name, r.max(), threshold, "max_i ||A beta_i - b||_inf" + (" / scale_i" if scale is not None else ""))


def _z_scores(diff, se, ref):
    floor = 1e-12 * max(1.0, float(np.max(np.abs(ref))))
    return np.abs(diff) / np.maximum(se, floor)


def check_moments(samples, target_mean, target_cov, z_max: float = MOMENT_Z_MAX,
                  name: str = "moments") -> CheckResult:
    """Largest z-score of the empirical mean and covariance entries.

    Covariance entries are centered at ``target_mean``; each standard error
    is the sample standard deviation of the per-row products over sqrt(n).
    """
    x = _samples(samples)
    mu = np.asarray(target_mean, dtype=float).reshape(-1)
    cov = np.asarray(target_cov, dtype=float)
    n, K = x.shape
    if mu.shape != (K,) or cov.shape != (K, K):
        raise DimensionMismatch("target moments do not match the sample dimension")
    dof = max(n - 1, 1)
    zm = _z_scores(x.mean(0) - mu, x.std(0, ddof=1 if n > 1 else 0) / np.sqrt(n), mu)
    xc = x - mu
    emp = xc.T @ xc / n
    sq = xc * xc
    # sample variance of the products x_j x_k, without forming them
    var_prod = (sq.T @ sq / n - emp**2) * n / dof
    se = np.sqrt(np.maximum(var_prod, 0.0) / n)
    iu = np.triu_indices(K)
    zc = _z_scores(emp[iu] - cov[iu], se[iu], cov)
    worst = max(zm.max(), zc.max())
    return _le(name, worst, z_max, f"max |z| over {K} means and {len(iu[0])} covariance entries, n={n}")


def check_rank(cov, expected: int, name: str = "rank") -> CheckResult:
    r = rank_of(cov)
    return CheckResult(name, r == expected, float(r), float(expected), "numerical rank must equal threshold")


def check_projector_equality(M1, M2, tol: float = 1e-10, name: str = "projector_equality") -> CheckResult:
    M1 = getattr(M1, "M", M1)
    M2 = getattr(M2, "M", M2)
    if np.shape(M1)[0] != np.shape(M2)[0]:
        raise DimensionMismatch(f"bases have shapes {np.shape(M1)} and {np.shape(M2)}")
    P1 = M1 @ M1.T
    P2 = M2 @ M2.T
    return _le(name, np.abs(P1 - P2).max(), tol, "max |M1 M1^T - M2 M2^T|")


def check_covariance_identity(basis, L, cov, tol: float = 1e-10, name: str = "covariance_identity",
                              reference=None) -> CheckResult:
    """Frobenius error of ``M L L^T M^T`` against ``cov``, relative to ``||cov||_F``.

    Pass ``reference`` to normalize by another matrix instead (e.g. the
    unconstrained ``D``, giving a backward-error measure).
    """
    F = basis @ L
    ref = cov if reference is None else reference
    err = np.linalg.norm(F @ F.T - cov) / max(np.linalg.norm(ref), np.finfo(float).tiny)
    label = "Sigma" if reference is None else "reference"
    return _le(name, err, tol, f"||M L L^T M^T - Sigma||_F / ||{label}||_F")


def check_marginal_variance(samples, target_var=1.0, n_se: float = 4.0, name: str = "marginal_variance") -> CheckResult:
    """Each column's sample variance within ``target * (1 +- n_se sqrt(2/n))``."""
    x = _samples(samples)
    n = x.shape[0]
    rel = np.abs(x.var(0, ddof=1) / np.asarray(target_var) - 1.0).max()
    return _le(name, rel, n_se * np.sqrt(2.0 / n), "max_k |var_k / target - 1|")


def check_correlation(samples, target_corr: float, n_se: float = 4.0, name: str = "pairwise_correlation") -> CheckResult:
    """Off-diagonal sample correlations, in units of ``(1 - rho^2)/sqrt(n)``."""
    x = _samples(samples)
    n, K = x.shape
    if K < 2:
        return CheckResult(name, True, 0.0, n_se, "single column")
    R = np.corrcoef(x, rowvar=False)
    off = R[~np.eye(K, dtype=bool)]
    se = (1.0 - target_corr**2) / np.sqrt(n)
    z = _z_scores(off - target_corr, se, 1.0)
    return _le(name, z.max(), n_se, f"max |rho_jk - ({target_corr:.4g})| / MC-SE")


def check_ks_normal(samples, sd=1.0, alpha: float = 1e-3, name: str = "ks_marginal") -> CheckResult:
    """Kolmogorov-Smirnov of every column against ``N(0, sd^2)``; statistic is the smallest p-value."""
    x = _samples(samples)
    p = min(stats.kstest(x[:, k] / sd, "norm").pvalue for k in range(x.shape[1]))
    return CheckResult(name, bool(p >= alpha), float(p), float(alpha), "min_k KS p-value (pass iff >= threshold)")


def check_median(draws, median: float, density: float, z_max: float = MOMENT_Z_MAX, name: str = "median") -> CheckResult:
    """Sample median against its asymptotic standard error ``1 / (2 f(m) sqrt(n))``."""
    x = np.asarray(draws, dtype=float).reshape(-1)
    se = 1.0 / (2.0 * density * np.sqrt(x.size))
    return _le(name, abs(np.median(x) - median) / se, z_max, f"|median - {median:.4g}| / MC-SE")


# -- regression demo -------------------------------------------------------


@dataclass
class DemoResult:
    draws: np.ndarray
    posterior_mean: np.ndarray
    posterior_sd: np.ndarray
    report: VerificationReport


def _balanced_one_hot(X):
    if not np.all((X == 0) | (X == 1)) or not np.all(X.sum(1) == 1):
        return False
    counts = X.sum(0)
    return bool(np.all(counts == counts[0]) and counts[0] > 0)


def conjugate_regression_demo(X, y, noise_sd: float, g: ConstrainedGaussian, rng: RngStream,
                              n_draws: int = 1000) -> DemoResult:
    """Exact posterior for ``y = X beta + eps`` under the constrained prior ``g``.

    Writing ``beta = m* + M L z`` with ``z ~ N(0, I)`` turns the model into an
    ordinary Bayesian linear regression in ``z`` with design ``X M L``, whose
    posterior is Gaussian.  Every posterior draw therefore satisfies the
    constraint exactly.
    """
    if not noise_sd > 0:
        raise InvalidScale(f"noise_sd must be > 0, got {noise_sd}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[1] != g.K or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X is {X.shape}, y has {y.shape[0]} entries, prior has K={g.K}")
    F = g.factor
    Xr = X @ F / noise_sd
    prec = np.eye(g.dim) + Xr.T @ Xr
    cf = scipy.linalg.cho_factor(prec, lower=True)
    z_mean = scipy.linalg.cho_solve(cf, Xr.T @ ((y - X @ g.mean) / noise_sd))
    # z = z_mean + C^{-T} xi  has covariance prec^{-1}
    xi = rng.normal(0, n_draws, g.dim, LANE_Z)
    Ct = np.tril(cf[0])
    z = z_mean + scipy.linalg.solve_triangular(Ct, xi.T, lower=True, trans="T").T
    draws = g.mean + z @ F.T
    post_mean = g.mean + F @ z_mean
    zcov = scipy.linalg.cho_solve(cf, np.eye(g.dim))
    post_sd = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", F, zcov, F), 0.0))

    c = g.constraint
    report = VerificationReport("conjugate_regression_demo", rng.seed, n_draws, rng.stream_id)
    scale = 1.0 + np.abs(c.b).max()
    report.add(check_constraint(post_mean[None], c, 1e-9 * scale, name="posterior_mean_constraint"))
    report.add(check_constraint(draws, c, 1e-9 * scale, name="posterior_draws_constraint"))
    if _balanced_one_hot(X) and np.all(c.b == 0) and c.is_sum_to_zero():
        group_means = (X.T @ y) / X.sum(0)
        centered = group_means - group_means.mean()
        gap = np.abs(post_mean - centered) / np.maximum(post_sd, np.finfo(float).tiny)
        report.add(_le("centered_group_means", gap.max(), 3.0, "max_k |E[beta_k|y] - (ybar_k - mean ybar)| / posterior sd"))
    return DemoResult(draws, post_mean, post_sd, report)


# -- suites ----------------------------------------------------------------

_N_IDENTITY = 200


def _half_t_median(df, scale):
    m = stats.t.ppf(0.75, df)
    return scale * m, 2.0 * stats.t.pdf(m, df) / scale


def _ridge_suite(K, n, rng, report):
    c = ConstraintSystem.sum_to_zero(K)
    beta = ridge_sample(K, rng, size=n)
    cov = ridge_covariance(K)
    report.add(check_constraint(beta, c, 1e-9))
    report.add(check_moments(beta, np.zeros(K), cov))
    report.add(check_marginal_variance(beta, 1.0))
    report.add(check_ks_normal(beta))
    report.add(check_correlation(beta, -1.0 / (K - 1)))
    report.add(check_rank(cov, K - 1))
    report.add(check_projector_equality(svd_null_basis(c), sum_zero_basis(K)))
    g = build(c, DiagonalScales(np.full(K, K / (K - 1.0))))
    report.add(check_covariance_identity(g.basis, g.reduced_chol, cov))


def _hier_ridge_suite(K, n, rng, report):
    c = ConstraintSystem.sum_to_zero(K)
    beta, lam = hier_ridge_sample(K, rng, size=n)
    report.add(check_constraint(beta, c, 1e-10, scale=lam * K, name="constraint_residual_scaled"))
    report.add(check_moments(beta / lam[:, None], np.zeros(K), ridge_covariance(K), name="standardized_moments"))
    report.add(check_median(lam, 1.0, 1.0 / np.pi, name="global_scale_median"))


def _per_draw_identity(d_rows, compensate, report, name="per_draw_covariance_identity"):
    K = d_rows.shape[1]
    M = sum_zero_basis(K).M
    worst = 0.0
    factor = K / (K - 1.0) if compensate else 1.0
    for d in d_rows[:_N_IDENTITY]:
        L = kernels.sum_zero_factor(d, compensate)
        cov = horseshoe_covariance(d, 1.0, compensate)
        # heavy-tailed scales make Sigma tiny next to D; measure error on the scale of the inputs
        ref = np.diag(d * factor)
        worst = max(worst, check_covariance_identity(M, L, cov, reference=ref).statistic)
    report.add(_le(name, worst, 1e-10,
                   f"max over {min(len(d_rows), _N_IDENTITY)} draws of ||M L L^T M^T - Sigma||_F / ||D||_F"))


def _horseshoe_suite(K, n, rng, report, compensate):
    c = ConstraintSystem.sum_to_zero(K)
    beta, hyper = horseshoe_sample(K, rng, compensate, size=n)
    lam, tau = hyper.lambda_local, hyper.tau
    scale = tau * lam.max(1) * K
    report.add(check_constraint(beta, c, 1e-9, scale=scale, name="constraint_residual_scaled"))
    _per_draw_identity(lam**2, compensate, report)
    fixed = lam[0]
    cond, _ = horseshoe_sample(K, rng.spawn(rng.stream_id + 1), compensate, size=n, lam=fixed, tau=1.0)
    report.add(check_moments(cond, np.zeros(K), horseshoe_covariance(fixed**2, 1.0, compensate),
                             name="conditional_moments_fixed_scales"))
    report.add(check_median(lam.ravel(), 1.0, 1.0 / np.pi, name="local_scale_median"))
    report.add(check_median(tau, 1.0, 1.0 / np.pi, name="global_scale_median"))


def _rhs_suite(spec, n, rng, report, compensate):
    K, p = spec.K, spec.rhs
    c = ConstraintSystem.sum_to_zero(K)
    beta, hyper = rhs_sample(spec, rng, compensate, size=n)
    zt, tau, c_sq = hyper.zeta_tilde_sq, hyper.tau, hyper.c_sq
    scale = tau * np.sqrt(zt.max(1)) * K
    report.add(check_constraint(beta, c, 1e-9, scale=scale, name="constraint_residual_scaled"))
    bound = (zt * (tau**2 / c_sq)[:, None]).max()
    report.add(_le("slab_bound", bound, 1.0 + 1e-12, "max zeta_tilde^2 tau^2 / c^2"))
    _per_draw_identity(zt, compensate, report)
    fz, fc, ft = hyper.lambda_local[0], c_sq[0], tau[0]
    cond, _ = rhs_sample(spec, rng.spawn(rng.stream_id + 1), compensate, size=n, zeta=fz, c_sq=fc, tau=ft)
    target = horseshoe_covariance(rhs_local_scale(fz**2, fc, ft), ft, compensate)
    report.add(check_moments(cond, np.zeros(K), target, name="conditional_moments_fixed_scales"))
    m, f = _half_t_median(p.nu1, 1.0)
    report.add(check_median(hyper.lambda_local.ravel(), m, f, name="local_scale_median"))
    m, f = _half_t_median(p.nu3, rhs_tau0(spec))
    report.add(check_median(tau, m, f, name="global_scale_median"))
    ig = stats.invgamma(p.nu2 / 2, scale=p.nu2 * p.s_sq / 2)
    report.add(check_median(c_sq, ig.median(), ig.pdf(ig.median()), name="slab_median"))


def run_family_suite(spec: FamilySpec, n: int, rng: RngStream, compensate: bool = True) -> VerificationReport:
    """All checks for one shrinkage family.  Uses streams ``rng.stream_id`` and ``+1``."""
    report = VerificationReport(f"{spec.family.value}(K={spec.K})", rng.seed, n, rng.stream_id)
    report.extra["compensate"] = compensate
    if spec.family is Family.RIDGE:
        _ridge_suite(spec.K, n, rng, report)
    elif spec.family is Family.HIER_RIDGE:
        _hier_ridge_suite(spec.K, n, rng, report)
    elif spec.family is Family.HORSESHOE:
        _horseshoe_suite(spec.K, n, rng, report, compensate)
    else:
        _rhs_suite(spec, n, rng, report, compensate)
    return report


def run_constraint_suite(c: ConstraintSystem, d: DiagonalScales | None, n: int, rng: RngStream,
                         basis="auto") -> VerificationReport:
    """Checks for a general system ``A beta = b`` with diagonal prior scales ``d``."""
    g = build(c, d, basis=basis)
    report = VerificationReport(f"constraint(J={c.J}, K={c.K})", rng.seed, n, rng.stream_id)
    bscale = 1.0 + np.abs(c.b).max()
    report.add(check_constraint(g.mean[None], c, 1e-10 * bscale, name="mean_residual"))
    beta = draw_batch(g, rng, n)
    report.add(check_constraint(beta, c, 1e-9 * bscale))
    report.add(check_moments(beta, g.mean, g.cov))
    report.add(check_rank(g.cov, c.K - c.J))
    report.add(_le("reduced_cholesky_jitter", g.jitter, 0.0, "jitter added to Omega (0 = plain Cholesky succeeded)"))
    report.add(check_covariance_identity(g.basis, g.reduced_chol, g.cov))
    # orthogonal projector onto N(A) from the normal equations, independent of any SVD
    P = np.eye(c.K) - c.A.T @ np.linalg.solve(c.A @ c.A.T, c.A)
    report.add(_le("projector_equality", np.abs(g.basis @ g.basis.T - P).max(), 1e-10,
                   "max |M M^T - (I - A^T (A A^T)^{-1} A)|"))
    return report


DEFAULT_KS = (2, 3, 10, 50)


def default_suite(n: int, seed: int, Ks=DEFAULT_KS, compensate: bool = True):
    """Every family at every K, each on its own pair of streams."""
    reports = []
    stream = 0
    for fam in Family:
        for K in Ks:
            spec = FamilySpec(fam, K)
            reports.append(run_family_suite(spec, n, RngStream(seed, stream), compensate))
            stream += 2
    return reports
