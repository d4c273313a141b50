"""Time the two lattice-combine lanes against each other.

The dispatcher picks the compiled extension when it imports; combine_pure
always runs the numpy lane.  This script times both on identical inputs
and checks they agree, so a regression in either lane shows up as a gap
in the table or a mismatch error.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 128,512,2048 --repeats 9
"""

import argparse
import time

import numpy as np

from torusrenorm import kernels


def random_modes(rng, n, d, span=12):
    k = rng.integers(-span, span + 1, size=(n, d))
    m = rng.integers(-span, span + 1, size=(n, d))
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    return k, m, c


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,256,1024", help="mode counts, comma separated")
    ap.add_argument("--d", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--hbar", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(args.seed)
    mu = 1.0
    modes = [
        ("product", kernels.MODE_PRODUCT),
        ("commutator", kernels.MODE_COMMUTATOR),
        ("poisson", kernels.MODE_POISSON),
    ]

    print(f"dispatch lane: {kernels.backend_name()}")
    if not kernels.COMPILED:
        print("compiled lane unavailable or disabled; both columns below run numpy")
    header = f"{'mode':<12}{'n':>6}{'dispatch':>12}{'numpy':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, mode in modes:
        for n in sizes:
            k1, m1, c1 = random_modes(rng, n, args.d)
            k2, m2, c2 = random_modes(rng, n, args.d)
            t_fast, out_fast = best_of(
                lambda: kernels.combine(k1, m1, c1, k2, m2, c2, mu, args.hbar, mode),
                args.repeats,
            )
            t_pure, out_pure = best_of(
                lambda: kernels.combine_pure(k1, m1, c1, k2, m2, c2, mu, args.hbar, mode),
                args.repeats,
            )
            for a, b in zip(out_fast, out_pure):
                if not np.allclose(a, b, atol=1e-12):
                    raise SystemExit(f"lane mismatch at mode={name} n={n}")
            ratio = t_pure / t_fast if t_fast > 0 else float("inf")
            print(
                f"{name:<12}{n:>6}{t_fast * 1e3:>10.3f}ms{t_pure * 1e3:>10.3f}ms{ratio:>9.2f}x"
            )


if __name__ == "__main__":
    main()
