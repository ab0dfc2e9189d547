"""Timing comparison of the compiled kernels against the numpy reference.

Run as a script:

    python3 benchmarks/bench_kernels.py [--samples 400000] [--repeats 5]

Times the batch kernels on identical inputs through both backends and
prints per-kernel best-of-N wall times with the speedup factor.  The
suite-level effect is smaller than the per-kernel factors because the
samplers and reductions around the kernels are numpy either way.
"""

import argparse
import time

import numpy as np

from hessquot._kernels import reference

try:
    from hessquot._kernels import _speedups
except ImportError:
    _speedups = None


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=400_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _speedups is None:
        print("compiled extension not built; nothing to compare")
        return

    rng = np.random.default_rng(0)
    lam5 = np.abs(rng.standard_normal((args.samples, 5))) + 0.1
    sym = rng.standard_normal((args.samples, 6))
    m = max(16, round(args.samples ** (1.0 / 3.0)))
    u3 = rng.standard_normal((m, m, m))
    u2 = rng.standard_normal((4 * m, 4 * m))

    cases = [
        ("sigma12 (n=5)", "sigma12", (lam5,)),
        ("quotient_value_grad (n=5)", "quotient_value_grad", (lam5,)),
        ("sigma2_value_grad (n=5)", "sigma2_value_grad", (lam5,)),
        (
            "eigvals_sym3",
            "eigvals_sym3",
            tuple(sym[:, k] for k in range(6)),
        ),
        (
            "eigvals_sym2",
            "eigvals_sym2",
            (sym[:, 0], sym[:, 1], sym[:, 2]),
        ),
        (f"hessian_fields_2d ({4 * m}^2)", "hessian_fields_2d", (u2, 0.01)),
        (f"hessian_fields_3d ({m}^3)", "hessian_fields_3d", (u3, 0.01)),
    ]

    print(f"samples={args.samples} repeats={args.repeats} (best-of wall time)")
    print(f"{'kernel':34} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for label, name, call_args in cases:
        t_ref = best_of(getattr(reference, name), call_args, args.repeats)
        t_ext = best_of(getattr(_speedups, name), call_args, args.repeats)
        print(f"{label:34} {t_ref * 1e3:9.2f}ms {t_ext * 1e3:9.2f}ms {t_ref / t_ext:7.2f}x")


if __name__ == "__main__":
    main()
