"""Backend selection for the per-draw sum-to-zero kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is used.  Both are importable directly for benchmarking
(``kernels.compiled`` is ``None`` when the extension is missing).
"""

from . import _kernels_py as python
from .errors import CholeskyFailure

try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

BACKEND = "compiled" if compiled is not None else "python"
_impl = compiled if compiled is not None else python


def get_backend(name=None):
    if name is None:
        return _impl
    if name == "python":
        return python
    if name == "compiled":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available; reinstall with Cython")
        return compiled
    raise ValueError(f"unknown backend {name!r}")


def sum_zero_draws(d, z, compensate=True, backend=None):
    """``M L_i z_i`` per row, with ``L_i`` the reduced factor for ``diag(d[i])``.

    Raises :class:`CholeskyFailure` if any row fails even after jitter.
    """
    beta, status = get_backend(backend).sum_zero_draws(d, z, compensate)
    if (status == 2).any():
        bad = int((status == 2).sum())
        raise CholeskyFailure(f"{bad} of {len(status)} draws had an indefinite reduced covariance")
    return beta


def sum_zero_factor(d, compensate=True, backend=None):
    L, status = get_backend(backend).sum_zero_factor(d, compensate)
    if status == 2:
        raise CholeskyFailure("reduced covariance not positive definite after jitter")
    return L
