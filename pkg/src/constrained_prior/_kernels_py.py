"""Pure-numpy implementation of the per-draw sum-to-zero kernels.

Mirrors ``_kernels.pyx``.  The compiled version exploits the sparsity pattern
of the closed-form basis; this one assembles ``Sigma`` and ``M^T Sigma M``
densely, in batches.
"""

import numpy as np

from .nullspace import sum_zero_basis
from .sampler import JITTER_SCALE

OK, JITTERED, FAILED = 0, 1, 2

_CHUNK = 1024


def _prepare(d, compensate):
    d = np.ascontiguousarray(d, dtype=float)
    if d.ndim != 2 or d.shape[1] < 2:
        raise ValueError(f"d must have shape (n, K) with K >= 2, got {d.shape}")
    K = d.shape[1]
    dmax = d.max(axis=1)
    scale = dmax * (K / (K - 1.0) if compensate else 1.0)
    return d / dmax[:, None], scale


def _reduced(dn, M):
    # Sigma = D - d d^T / sum(d), then Omega = M^T Sigma M
    n, K = dn.shape
    sigma = -(dn[:, :, None] * dn[:, None, :]) / dn.sum(axis=1)[:, None, None]
    idx = np.arange(K)
    sigma[:, idx, idx] += dn
    omega = M.T @ sigma @ M
    return 0.5 * (omega + np.swapaxes(omega, 1, 2))


def _chol_rows(omega, status):
    try:
        return np.linalg.cholesky(omega)
    except np.linalg.LinAlgError:
        pass
    L = np.zeros_like(omega)
    m = omega.shape[1]
    for i in range(omega.shape[0]):
        try:
            L[i] = np.linalg.cholesky(omega[i])
            continue
        except np.linalg.LinAlgError:
            pass
        jitter = JITTER_SCALE * np.trace(omega[i]) / m
        try:
            L[i] = np.linalg.cholesky(omega[i] + jitter * np.eye(m))
            status[i] = JITTERED
        except np.linalg.LinAlgError:
            status[i] = FAILED
    return L


def sum_zero_draws(d, z, compensate=True):
    """Draw ``M L z`` for a separate diagonal ``D = diag(d[i])`` on each row.

    Returns ``(beta, status)`` where status is 0 (ok), 1 (jitter used) or
    2 (Cholesky failed; that row of ``beta`` is meaningless).
    """
    dn, scale = _prepare(d, compensate)
    z = np.ascontiguousarray(z, dtype=float)
    n, K = dn.shape
    if z.shape != (n, K - 1):
        raise ValueError(f"z must have shape {(n, K - 1)}, got {z.shape}")
    M = sum_zero_basis(K).M
    beta = np.empty((n, K))
    status = np.zeros(n, dtype=np.int8)
    for s in range(0, n, _CHUNK):
        e = min(s + _CHUNK, n)
        L = _chol_rows(_reduced(dn[s:e], M), status[s:e])
        w = np.einsum("nij,nj->ni", L, z[s:e])
        beta[s:e] = (w @ M.T) * np.sqrt(scale[s:e])[:, None]
    return beta, status


def sum_zero_factor(d, compensate=True):
    """Reduced Cholesky factor for a single diagonal ``d``; returns ``(L, status)``."""
    dn, scale = _prepare(np.reshape(d, (1, -1)), compensate)
    M = sum_zero_basis(dn.shape[1]).M
    status = np.zeros(1, dtype=np.int8)
    L = _chol_rows(_reduced(dn, M), status)[0]
    return L * np.sqrt(scale[0]), int(status[0])
