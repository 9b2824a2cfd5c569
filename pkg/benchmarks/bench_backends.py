"""Compare the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_backends.py [--quick]

Times the four hot kernels (gradient-field evaluation, Gauss-Seidel
Nash solve, single-player Riccati solve, gradient-play simulation) on a
representative two-player game, then reports per-call times and the
speedup ratio.
"""

import argparse
import time

import numpy as np

from lqgame import _backend
from lqgame import _kernels_py as kpy
from lqgame.game import load_fixture
from lqgame.nash import auto_initial_policy, lyapunov_iterations


def timeit(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="fewer repetitions")
    args = ap.parse_args()
    scale = 0.1 if args.quick else 1.0

    try:
        from lqgame import _speedups as kc
    except ImportError:
        print("compiled backend not available; nothing to compare")
        return

    game = load_fixture("game_i")
    ga = _backend.game_args(game)
    init = auto_initial_policy(game).stack()
    k_near = lyapunov_iterations(game).policy.stack() + 0.01

    n_sim = 20_000
    bufs = lambda: (np.zeros(n_sim + 2, np.int64), np.zeros((n_sim + 2, 4)),
                    np.zeros((n_sim + 2, 2)), np.zeros(n_sim + 2))
    cases = [
        ("omega", int(20000 * scale), int(200 * scale),
         lambda k: (lambda: k.omega2(*ga, k_near))),
        ("gs_solve", int(200 * scale), int(5 * scale),
         lambda k: (lambda: k.gs_solve2(*ga, init.copy(), 1e-9, 10_000))),
        ("dare", int(5000 * scale), int(100 * scale),
         lambda k: (lambda: k.dare2(ga[0], ga[1], ga[3], ga[5], 1e-12, 100_000))),
        (f"simulate ({n_sim} iters)", int(20 * scale), 1,
         lambda k: (lambda: k.simulate2(*ga, k_near.copy(), 0.05, 0.05,
                                        n_sim, 1, 1e-10, *bufs()))),
    ]

    print(f"{'kernel':<24} {'compiled':>12} {'python':>12} {'speedup':>9}")
    for name, reps_c, reps_p, make in cases:
        tc = timeit(make(kc), max(1, reps_c))
        tp = timeit(make(kpy), max(1, reps_p))
        print(f"{name:<24} {tc * 1e6:>10.2f}us {tp * 1e6:>10.2f}us "
              f"{tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
