"""Sum-to-zero shrinkage priors: ridge, hierarchical ridge, horseshoe, RHS.

All four condition a diagonal normal prior on ``sum(beta) = 0``.  Global
scales (``lambda`` for hierarchical ridge, ``tau`` for horseshoe and RHS) are
applied non-centered, ``beta = scale * beta_star``, so only the local scales
enter the per-draw reduced factor.

Sampling functions follow numpy's ``size`` convention: ``size=None`` returns a
single draw at stream position ``start``; an integer returns that many rows.
Keyword overrides (``z``, ``lam``, ``tau``, ...) pin the corresponding random
quantity, which is how the tests condition on fixed hyperparameters.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import kernels
from .errors import DimensionMismatch, InvalidScale, InvalidShape
from .nullspace import sum_zero_basis
from .rng import LANE_GLOBAL, LANE_LOCAL, LANE_SLAB, LANE_Z, RngStream
from .sampler import cholesky_with_jitter

__all__ = [
    "Family",
    "RhsParams",
    "FamilySpec",
    "HyperDraw",
    "HalfCauchy",
    "HalfStudentT",
    "InvGamma",
    "hyper_draws",
    "ridge_covariance",
    "ridge_sample",
    "hier_ridge_sample",
    "horseshoe_covariance",
    "horseshoe_sample",
    "rhs_local_scale",
    "rhs_tau0",
    "rhs_sample",
    "sample_family",
]


class Family(enum.Enum):
    RIDGE = "ridge"
    HIER_RIDGE = "hier_ridge"
    HORSESHOE = "horseshoe"
    RHS = "rhs"


@dataclass(frozen=True)
class RhsParams:
    """Hyperparameters of the regularized horseshoe.

    ``nu1``: d.o.f. of the local scales; ``nu2``, ``s_sq``: slab prior
    ``c^2 ~ InvGamma(nu2/2, nu2 s_sq/2)``; ``nu3``: d.o.f. of the global scale;
    ``p0``: prior guess of the number of nonzero effects; ``sigma_tilde``:
    pseudo standard deviation; ``n_obs``: sample size.
    """

    p0: int = 1
    sigma_tilde: float = 1.0
    n_obs: int = 1
    nu1: float = 1.0
    nu2: float = 4.0
    s_sq: float = 4.0
    nu3: float = 4.0


@dataclass(frozen=True)
class FamilySpec:
    family: Family
    K: int
    rhs: RhsParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if int(self.K) < 2:
            raise InvalidShape(f"K must be >= 2, got {self.K}")
        if self.family is Family.RHS:
            if self.rhs is None:
                object.__setattr__(self, "rhs", RhsParams())
            _validate_rhs(self.rhs, self.K)


def _validate_rhs(p: RhsParams, K: int):
    if int(p.p0) != p.p0 or not 1 <= p.p0 <= K - 1:
        raise InvalidShape(f"p0 must be an integer in 1..{K - 1}, got {p.p0}")
    for name in ("nu1", "nu2", "nu3", "s_sq", "sigma_tilde"):
        if not getattr(p, name) > 0:
            raise InvalidScale(f"{name} must be > 0, got {getattr(p, name)}")
    if int(p.n_obs) != p.n_obs or p.n_obs < 1:
        raise InvalidScale(f"n_obs must be a positive integer, got {p.n_obs}")


@dataclass(frozen=True, eq=False)
class HyperDraw:
    """Hyperparameters behind a draw (arrays with a leading row axis for batches).

    ``lambda_local`` holds the local scales (``lambda_k`` for the horseshoe,
    ``zeta_k`` for RHS).
    """

    lambda_local: np.ndarray | None
    tau: np.ndarray | float
    c_sq: np.ndarray | float | None = None
    zeta_tilde_sq: np.ndarray | None = field(default=None)


# -- hyperprior draws ------------------------------------------------------


@dataclass(frozen=True)
class HalfCauchy:
    scale: float = 1.0

    def ppf(self, u):
        return self.scale * np.tan(0.5 * np.pi * u)


@dataclass(frozen=True)
class HalfStudentT:
    df: float
    scale: float = 1.0

    def ppf(self, u):
        # |scale * t| with t drawn by inverse CDF; one d.o.f. is the Cauchy
        if self.df == 1:
            t = np.tan(np.pi * (u - 0.5))
        else:
            t = special.stdtrit(self.df, u)
        return np.abs(self.scale * t)


@dataclass(frozen=True)
class InvGamma:
    shape: float
    rate: float

    def ppf(self, u):
        # upper regularized inverse keeps the map increasing in u
        return self.rate / special.gammainccinv(self.shape, u)


def _check_dist(dist):
    for name in ("scale", "df", "shape", "rate"):
        v = getattr(dist, name, None)
        if v is not None and not v > 0:
            raise InvalidScale(f"{type(dist).__name__}.{name} must be > 0, got {v}")


def _hyper(rng: RngStream, dist, start, rows, width, lane):
    _check_dist(dist)
    return dist.ppf(rng.uniform(start, rows, width, lane))


def hyper_draws(rng: RngStream, dist, n: int, start: int = 0, lane: int = LANE_LOCAL) -> np.ndarray:
    """``n`` positive draws from a half-Cauchy, half-Student-t or inverse-gamma."""
    return _hyper(rng, dist, start, n, 1, lane)[:, 0]


# -- helpers ---------------------------------------------------------------


def _rows(size):
    if size is None:
        return 1
    if int(size) < 1:
        raise ValueError("size must be >= 1")
    return int(size)


def _pinned(value, n, width, name):
    """Broadcast a user override to ``(n, width)``."""
    a = np.asarray(value, dtype=float)
    if width == 1 and a.ndim <= 1 and a.size in (1, n):
        a = a.reshape(-1, 1)
    try:
        return np.broadcast_to(a, (n, width)).astype(float)
    except ValueError:
        raise DimensionMismatch(f"{name} cannot broadcast to {(n, width)}") from None


def _positive(a, name):
    if not np.all(a > 0) or not np.all(np.isfinite(a)):
        raise InvalidScale(f"{name} must be finite and > 0")
    return a


def _out(beta, size):
    return beta[0] if size is None else beta


def _normals(rng, start, n, width, z):
    if z is None:
        return rng.normal(start, n, width, LANE_Z)
    return _pinned(z, n, width, "z")


# -- ridge -----------------------------------------------------------------


def ridge_covariance(K: int) -> np.ndarray:
    """``K/(K-1) (I - 11^T/K)``: unit diagonal, ``-1/(K-1)`` off the diagonal."""
    K = int(K)
    if K < 2:
        raise InvalidShape(f"K must be >= 2, got {K}")
    cov = np.full((K, K), -1.0 / (K - 1))
    np.fill_diagonal(cov, 1.0)
    return cov


@functools.lru_cache(maxsize=64)
def _ridge_factor(K):
    M = sum_zero_basis(K).M
    S = M.T @ ridge_covariance(K) @ M
    L, _ = cholesky_with_jitter(0.5 * (S + S.T))
    L.setflags(write=False)
    return M, L


def ridge_sample(K: int, rng: RngStream, size=None, start: int = 0, z=None):
    """Sum-to-zero ridge draw with ``N(0, 1)`` marginals."""
    M, L = _ridge_factor(int(K))
    n = _rows(size)
    x = _normals(rng, start, n, K - 1, z)
    return _out((x @ L.T) @ M.T, size)


def hier_ridge_sample(K: int, rng: RngStream, size=None, start: int = 0, z=None, lam=None):
    """Ridge draw scaled by a global ``lambda ~ Cauchy+(0, 1)``.

    Returns ``(beta, lam)``.
    """
    n = _rows(size)
    if lam is None:
        lam = _hyper(rng, HalfCauchy(), start, n, 1, LANE_GLOBAL)[:, 0]
    else:
        lam = _positive(_pinned(lam, n, 1, "lam")[:, 0], "lam")
    beta = ridge_sample(K, rng, size=n, start=start, z=z) * lam[:, None]
    return _out(beta, size), (lam[0] if size is None else lam)


# -- horseshoe -------------------------------------------------------------


def horseshoe_covariance(lambda_sq, tau: float = 1.0, compensate: bool = True) -> np.ndarray:
    """``D - D 1 (1^T D 1)^{-1} 1^T D`` with ``D = tau^2 diag(lambda_sq)``.

    With ``compensate``, ``D`` is first multiplied by ``K/(K-1)``.
    """
    lam = np.asarray(lambda_sq, dtype=float).reshape(-1)
    if lam.size < 2:
        raise InvalidShape("need at least two local scales")
    _positive(lam, "lambda_sq")
    if not tau > 0:
        raise InvalidScale(f"tau must be > 0, got {tau}")
    K = lam.size
    d = tau**2 * lam * (K / (K - 1.0) if compensate else 1.0)
    cov = -np.outer(d, d) / d.sum()
    cov[np.diag_indices(K)] += d
    return cov


def _scaled_sum_zero(d, z, compensate, backend):
    return kernels.sum_zero_draws(d, z, compensate, backend=backend)


def horseshoe_sample(K: int, rng: RngStream, compensate: bool = True, size=None, start: int = 0,
                     z=None, lam=None, tau=None, backend=None):
    """Sum-to-zero horseshoe draw.

    Local ``lambda_k`` and global ``tau`` are half-Cauchy.  The reduced
    factor is rebuilt for every draw.  Returns ``(beta, HyperDraw)``.
    """
    K = int(K)
    if K < 2:
        raise InvalidShape(f"K must be >= 2, got {K}")
    n = _rows(size)
    if lam is None:
        lam = _hyper(rng, HalfCauchy(), start, n, K, LANE_LOCAL)
    else:
        lam = _positive(_pinned(lam, n, K, "lam"), "lam")
    if tau is None:
        tau = _hyper(rng, HalfCauchy(), start, n, 1, LANE_GLOBAL)[:, 0]
    else:
        tau = _positive(_pinned(tau, n, 1, "tau")[:, 0], "tau")
    x = _normals(rng, start, n, K - 1, z)
    beta = tau[:, None] * _scaled_sum_zero(lam**2, x, compensate, backend)
    if size is None:
        return beta[0], HyperDraw(lam[0], tau[0])
    return beta, HyperDraw(lam, tau)


# -- regularized horseshoe -------------------------------------------------


def rhs_local_scale(zeta_sq, c_sq, tau):
    """Slab-regularized local variance ``c^2 zeta^2 / (c^2 + tau^2 zeta^2)``.

    Increasing in ``zeta_sq`` and bounded above by ``c_sq / tau^2``.
    """
    zeta_sq, c_sq, tau = (np.asarray(v, dtype=float) for v in (zeta_sq, c_sq, tau))
    for v, name in ((zeta_sq, "zeta_sq"), (c_sq, "c_sq"), (tau, "tau")):
        _positive(v, name)
    out = zeta_sq / (1.0 + tau**2 * zeta_sq / c_sq)
    return float(out) if out.ndim == 0 else out


def rhs_tau0(spec: FamilySpec) -> float:
    """Scale of the global half-t prior, ``p0/(K-p0) * sigma_tilde/sqrt(n)``."""
    p = spec.rhs if spec.rhs is not None else RhsParams()
    _validate_rhs(p, spec.K)
    return p.p0 / (spec.K - p.p0) * p.sigma_tilde / np.sqrt(p.n_obs)


def rhs_sample(spec: FamilySpec, rng: RngStream, compensate: bool = True, size=None, start: int = 0,
               z=None, zeta=None, c_sq=None, tau=None, backend=None):
    """Sum-to-zero regularized-horseshoe draw.  Returns ``(beta, HyperDraw)``."""
    if spec.family is not Family.RHS:
        raise ValueError(f"rhs_sample needs an RHS spec, got {spec.family.value}")
    p, K = spec.rhs, spec.K
    n = _rows(size)
    if zeta is None:
        zeta = _hyper(rng, HalfStudentT(p.nu1), start, n, K, LANE_LOCAL)
    else:
        zeta = _positive(_pinned(zeta, n, K, "zeta"), "zeta")
    if c_sq is None:
        c_sq = _hyper(rng, InvGamma(p.nu2 / 2, p.nu2 * p.s_sq / 2), start, n, 1, LANE_SLAB)[:, 0]
    else:
        c_sq = _positive(_pinned(c_sq, n, 1, "c_sq")[:, 0], "c_sq")
    if tau is None:
        tau = _hyper(rng, HalfStudentT(p.nu3, rhs_tau0(spec)), start, n, 1, LANE_GLOBAL)[:, 0]
    else:
        tau = _positive(_pinned(tau, n, 1, "tau")[:, 0], "tau")
    zt = rhs_local_scale(zeta**2, c_sq[:, None], tau[:, None])
    x = _normals(rng, start, n, K - 1, z)
    beta = tau[:, None] * _scaled_sum_zero(zt, x, compensate, backend)
    if size is None:
        return beta[0], HyperDraw(zeta[0], tau[0], c_sq[0], zt[0])
    return beta, HyperDraw(zeta, tau, c_sq, zt)


def sample_family(spec: FamilySpec, rng: RngStream, n: int, start: int = 0, compensate: bool = True):
    """Batch of ``n`` draws for any family; returns ``(beta, HyperDraw | None)``."""
    if spec.family is Family.RIDGE:
        return ridge_sample(spec.K, rng, size=n, start=start), None
    if spec.family is Family.HIER_RIDGE:
        beta, lam = hier_ridge_sample(spec.K, rng, size=n, start=start)
        return beta, HyperDraw(None, lam)
    if spec.family is Family.HORSESHOE:
        return horseshoe_sample(spec.K, rng, compensate, size=n, start=start)
    return rhs_sample(spec, rng, compensate, size=n, start=start)
