"""Compare the numba and numpy lanes of the hot kernels.

Run from the repository root:

    python3 benchmarks/bench_kernels.py --n 2000 --vocab 512

With RECSEL_NUMBA=0 (or numba missing) only the numpy lane is timed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from recsel import _kernels


def best_of(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def report(label: str, numpy_s: float, numba_s: float | None) -> None:
    if numba_s is None:
        print(f"{label:<24} numpy {numpy_s * 1000:9.2f} ms   (numba lane unavailable)")
        return
    speedup = numpy_s / numba_s if numba_s > 0 else float("inf")
    print(
        f"{label:<24} numpy {numpy_s * 1000:9.2f} ms   "
        f"numba {numba_s * 1000:9.2f} ms   x{speedup:.2f}"
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000, help="points for pairwise distances")
    parser.add_argument("--dim", type=int, default=32, help="point dimensionality")
    parser.add_argument("--tokens", type=int, default=20000, help="row pairs for JSD")
    parser.add_argument("--vocab", type=int, default=512, help="JSD support size")
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats (min wins)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    points = rng.normal(size=(args.n, args.dim))
    p_rows = rng.uniform(0.01, 1.0, size=(args.tokens, args.vocab))
    p_rows /= p_rows.sum(axis=1, keepdims=True)
    q_rows = rng.uniform(0.01, 1.0, size=(args.tokens, args.vocab))
    q_rows /= q_rows.sum(axis=1, keepdims=True)

    print(f"active lane: {'numba' if _kernels.USING_NUMBA else 'numpy'}")
    _kernels.warmup()

    numba_pairwise = None
    numba_jsd = None
    if _kernels.USING_NUMBA:
        # First call on real shapes, so compilation never lands in a timing.
        _kernels.pairwise_sq_dists_numba(points[:8])
        _kernels.jsd_rows_numba(p_rows[:8], q_rows[:8])
        numba_pairwise = best_of(
            _kernels.pairwise_sq_dists_numba, points, repeat=args.repeat
        )
        numba_jsd = best_of(_kernels.jsd_rows_numba, p_rows, q_rows, repeat=args.repeat)

    numpy_pairwise = best_of(_kernels.pairwise_sq_dists_numpy, points, repeat=args.repeat)
    numpy_jsd = best_of(_kernels.jsd_rows_numpy, p_rows, q_rows, repeat=args.repeat)

    report(f"pairwise ({args.n}x{args.dim})", numpy_pairwise, numba_pairwise)
    report(f"jsd ({args.tokens}x{args.vocab})", numpy_jsd, numba_jsd)

    if _kernels.USING_NUMBA:
        d_np = _kernels.pairwise_sq_dists_numpy(points)
        d_nb = _kernels.pairwise_sq_dists_numba(points)
        j_np = _kernels.jsd_rows_numpy(p_rows, q_rows)
        j_nb = _kernels.jsd_rows_numba(p_rows, q_rows)
        print(
            "lane agreement: pairwise "
            f"{np.max(np.abs(d_np - d_nb)):.3e}, jsd {np.max(np.abs(j_np - j_nb)):.3e}"
        )


if __name__ == "__main__":
    main()
