"""Time the numba and pure-numpy versions of each hot kernel.

    python benchmarks/bench_kernels.py --points 1024

Both versions are called on identical inputs; the table lists the best of
``--repeat`` wall-clock times and the largest relative difference between
the two outputs, then times a spatially averaged FFR rate end to end with
each t-integral kernel. Numba compile time is excluded by a warm-up call.
"""
import argparse
import time

import numpy as np

from ffrplan import analytics as an
from ffrplan import kernels


def best_time(fn, repeat):
    fn()  # warm-up (jit compile, caches)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def rel_diff(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    scale = np.maximum(np.abs(y), 1e-300)
    return float(np.max(np.abs(x - y) / scale))


def make_cases(n_points, seed):
    rng = np.random.default_rng(seed)
    params = an.SystemParams.from_db(alpha=3.0, target_db=0.0)
    lay = params.layout
    r = np.sqrt(rng.random(n_points)) * lay.cell_radius
    th = rng.random(n_points) * 2 * np.pi
    ps = an.point_set(params, r, th)
    t0 = np.log1p(rng.random(n_points) * 3)
    target = an.cp1(ps, 1.5)

    return {
        "tail_integral": (
            lambda: kernels.tail_integral_numba(ps.a1, t0)[0],
            lambda: kernels.tail_integral_numpy(ps.a1, t0)[0],
            n_points,
        ),
        "matched_threshold": (
            lambda: kernels.solve_matched_threshold_numba(ps.a3, 0.0, target, np.full(n_points, 1.5)),
            lambda: kernels.solve_matched_threshold_numpy(ps.a3, 0.0, target, np.full(n_points, 1.5)),
            n_points,
        ),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1024, help="quadrature points per call")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cases = make_cases(args.points, args.seed)
    print(f"{'kernel':<18} {'size':>8} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max rel diff':>13}")
    for name, (fast, slow, size) in cases.items():
        t_fast = best_time(fast, args.repeat)
        t_slow = best_time(slow, args.repeat)
        diff = rel_diff(fast(), slow())
        print(f"{name:<18} {size:>8d} {1e3 * t_fast:>10.2f} {1e3 * t_slow:>10.2f} "
              f"{t_slow / t_fast:>8.1f} {diff:>13.2e}")

    # end to end: 64x16-node average of the correlated FFR rate
    params = an.SystemParams.from_db(alpha=3.0, target_db=0.0, threshold_db=1.0)
    saved = kernels.tail_integral, kernels.solve_matched_threshold
    timings, values = [], []
    for tail, matched in ((kernels.tail_integral_numba, kernels.solve_matched_threshold_numba),
                          (kernels.tail_integral_numpy, kernels.solve_matched_threshold_numpy)):
        kernels.tail_integral, kernels.solve_matched_threshold = tail, matched
        timings.append(best_time(lambda: values.append(an.rate_ffr(params, "correlated")), args.repeat))
    kernels.tail_integral, kernels.solve_matched_threshold = saved
    print(f"{'rate_ffr (1024 pts)':<18} {'':>8} {1e3 * timings[0]:>10.2f} {1e3 * timings[1]:>10.2f} "
          f"{timings[1] / timings[0]:>8.1f} {abs(values[0] / values[-1] - 1):>13.2e}")


if __name__ == "__main__":
    main()
