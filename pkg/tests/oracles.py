"""Independent reference computations used by the tests.

Exact rational arithmetic (``fractions.Fraction``) with explicit matrix
inverses, so nothing here shares code or floating-point paths with the
library.
"""

from fractions import Fraction


def _frac_matrix(A):
    return [[Fraction(x) for x in row] for row in A]


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def transpose(A):
    return [list(r) for r in zip(*A)]


def inverse(S):
    """Gauss-Jordan inverse of a small nonsingular rational matrix."""
    n = len(S)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(S)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def conditional_moments_exact(A, b, lambda_sq):
    """``D A^T (A D A^T)^{-1} b`` and ``D - D A^T (A D A^T)^{-1} A D`` exactly."""
    A = _frac_matrix(A)
    b = [[Fraction(x)] for x in b]
    K = len(A[0])
    D = [[Fraction(lambda_sq[i]) if i == j else Fraction(0) for j in range(K)] for i in range(K)]
    DAt = matmul(D, transpose(A))
    Sinv = inverse(matmul(A, DAt))
    mean = [r[0] for r in matmul(matmul(DAt, Sinv), b)]
    corr = matmul(matmul(DAt, Sinv), transpose(DAt))
    cov = [[D[i][j] - corr[i][j] for j in range(K)] for i in range(K)]
    return mean, cov


def helmert_loop(K):
    """Closed-form sum-to-zero basis, built entry by entry from the 1-based loop."""
    import math

    M = [[0.0] * (K - 1) for _ in range(K)]
    for i in range(1, K):
        for j in range(1, i + 1):
            M[j - 1][i - 1] = 1 / math.sqrt(i * (i + 1))
        M[i][i - 1] = -i / math.sqrt(i * (i + 1))
    return M


def horseshoe_entry(lambda_sq, tau_sq, k, j):
    """Closed-form covariance entry of the sum-to-zero horseshoe, exact."""
    lam = [Fraction(x) for x in lambda_sq]
    tot = sum(lam)
    if k == j:
        return tau_sq * (lam[k] - lam[k] ** 2 / tot)
    return -tau_sq * lam[k] * lam[j] / tot
