"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each job is run once per backend to warm up (numba compiles on first call),
then timed ``--repeat`` times; the best time is reported.
"""

from __future__ import annotations

import argparse
import time

from phiconvex import kernels
from phiconvex.convexity import check_strong_phi_convex, estimate_modulus
from phiconvex.domain import Box, GridSpec, Interval, NormedSpace, PhiMap, RealFunction
from phiconvex.normgeom import counterexample_search, jn_test


def jobs():
    unit = PhiMap.identity(Interval(0.0, 1.0))
    square = Box.cube(-1.0, 1.0, 2)
    quad2 = RealFunction.from_text("x1^2 + x2^2", 2)
    yield "check 1-D x^3 (41 pts, 3 rounds)", lambda b: check_strong_phi_convex(
        RealFunction.from_text("x^3", 1), unit, NormedSpace(1), 0.0, GridSpec(), backend=b
    )
    yield "modulus 1-D exp (41 pts, 3 rounds)", lambda b: estimate_modulus(
        RealFunction.from_text("exp(x)", 1), unit, NormedSpace(1), GridSpec(), backend=b
    )
    yield "check 2-D max norm (17 pts, 3 rounds)", lambda b: check_strong_phi_convex(
        quad2, PhiMap.identity(square), NormedSpace(2, "maximum"), 1.0, GridSpec(17), backend=b
    )
    yield "jn_test euclidean, 1e6 random pairs", lambda b: jn_test(NormedSpace(2), "random", 1_000_000, backend=b)
    yield "jn_test p=3, 1e6 random pairs", lambda b: jn_test(
        NormedSpace(2, "p_norm", 3.0), "random", 1_000_000, backend=b
    )
    yield "counterexample l-inf, 1e5 budget", lambda b: counterexample_search(
        NormedSpace(2, "maximum"), 1.0, 100_000, backend=b
    )


def best_time(fn, backend, repeat):
    fn(backend)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(backend)
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = kernels.available_backends()
    print(f"{'job':<42}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in jobs():
        times = {b: best_time(fn, b, args.repeat) for b in backends}
        row = f"{name:<42}" + "".join(f"{times[b] * 1e3:>10.1f}ms" for b in backends)
        if "numba" in times:
            row += f"{times['numpy'] / times['numba']:>11.2f}x"
        print(row)


if __name__ == "__main__":
    main()
