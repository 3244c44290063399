#!/usr/bin/env python3
"""Benchmark the compiled kernels against their vectorized numpy twins.

Calls both implementations of each hot kernel directly (bypassing the
import-time dispatch), checks that they agree on the benchmark inputs,
and reports per-call times with the speedup of the compiled path.

The compiled path must be active: run without RCASSOC_NO_NUMBA set.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --shape 8 8 --batch 5000 --repeat 7
"""

import argparse
import timeit

import numpy as np

from rcassoc import kernels
from rcassoc._numba import USE_NUMBA


def _tables(rng, count, shape):
    size = shape[0] * shape[1]
    pis = rng.dirichlet(np.ones(size), size=count).reshape((count,) + shape)
    pis = pis + 0.02 / size
    return pis / pis.sum(axis=(1, 2), keepdims=True)


def _per_call(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--shape", type=int, nargs=2, default=(5, 5), metavar=("ROWS", "COLS")
    )
    parser.add_argument("--batch", type=int, default=2000, help="tables per batch call")
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions")
    parser.add_argument("--lam", type=float, default=-0.04, help="divergence index")
    parser.add_argument("--seed", type=int, default=20260815)
    args = parser.parse_args(argv)

    if not USE_NUMBA:
        raise SystemExit(
            "compiled path unavailable (numba missing or RCASSOC_NO_NUMBA set);"
            " nothing to compare"
        )

    rng = np.random.default_rng(args.seed)
    shape = tuple(args.shape)
    pis = _tables(rng, args.batch, shape)
    pi = pis[0]
    lam = args.lam
    g = kernels.LOGIT_G

    cases = [
        (
            "gamma single",
            lambda: kernels._gamma_nb(pi, g, g, lam, False),
            lambda: kernels._gamma_np(pi, g, g, lam, False),
        ),
        (
            f"gamma batch x{args.batch}",
            lambda: kernels._gamma_batch_nb(pis, g, g, lam, False),
            lambda: kernels._gamma_np(pis, g, g, lam, False),
        ),
        (
            f"lor batch x{args.batch}",
            lambda: kernels._lor_batch_nb(pis, g, g),
            lambda: kernels._lor_np(pis, g, g),
        ),
        (
            "gamma jacobian",
            lambda: kernels._gamma_jacobian_nb(pi, g, g, lam, False),
            lambda: kernels._gamma_jacobian_np(pi, g, g, lam, False),
        ),
    ]

    print(
        f"shape {shape[0]}x{shape[1]}, batch {args.batch}, "
        f"lambda {lam}, repeat {args.repeat}"
    )
    print(f"{'kernel':<20} {'numba us':>10} {'numpy us':>10} {'speedup':>8} {'max|diff|':>10}")
    for name, compiled, plain in cases:
        # the first compiled call also triggers (or loads the cached) JIT
        diff = float(np.abs(np.asarray(compiled()) - np.asarray(plain())).max())
        t_nb = _per_call(compiled, args.repeat)
        t_np = _per_call(plain, args.repeat)
        print(
            f"{name:<20} {t_nb * 1e6:>10.1f} {t_np * 1e6:>10.1f}"
            f" {t_np / t_nb:>7.1f}x {diff:>10.2e}"
        )


if __name__ == "__main__":
    main()
