"""Compare the compiled and pure-Python sum-to-zero kernels.

Each case draws ``n`` horseshoe-style rows (half-Cauchy local scales, so the
reduced factor is rebuilt for every row) and reports the best wall time of
``--repeat`` runs for each backend, plus the largest disagreement between
the two outputs (relative to the largest draw).  The two backends assemble
the reduced covariance differently, so with scale ratios near 1e18 their
draws can differ at the 1e-6 level; both keep the backward error of the
factor near machine precision.

    python3 bench/bench_kernels.py --K 3 10 50 --n 20000
"""

import argparse
import time

import numpy as np

from constrained_prior import kernels


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--K", type=int, nargs="+", default=[3, 10, 50, 100])
    p.add_argument("--n", type=int, default=20_000, help="rows per case")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    if kernels.compiled is None:
        print("compiled kernels are not built; only the Python backend is available")
    print(f"{'K':>5} {'n':>8} {'python [s]':>11} {'compiled [s]':>13} {'speedup':>8} {'max |diff|':>11}")
    gen = np.random.default_rng(args.seed)
    for K in args.K:
        d = np.abs(gen.standard_cauchy((args.n, K))) ** 2
        z = gen.normal(size=(args.n, K - 1))
        t_py, out_py = _best(lambda: kernels.sum_zero_draws(d, z, backend="python"), args.repeat)
        if kernels.compiled is None:
            print(f"{K:>5} {args.n:>8} {t_py:>11.4f} {'-':>13} {'-':>8} {'-':>11}")
            continue
        t_c, out_c = _best(lambda: kernels.sum_zero_draws(d, z, backend="compiled"), args.repeat)
        diff = np.abs(out_py - out_c).max() / max(np.abs(out_py).max(), 1e-300)
        print(f"{K:>5} {args.n:>8} {t_py:>11.4f} {t_c:>13.4f} {t_py / t_c:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
