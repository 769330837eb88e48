"""Time the compiled RK4 kernels against the numpy reference.

Run with ``python3 benchmarks/bench_kernels.py [--N 200] [--steps 200]``.
"""

import argparse
import math
import time

import numpy as np

from milattice import BACKEND, ModelParams, TrigSeries, newton_solve
from milattice import _backend
from milattice.floquet import step_lattice, wave_samples, wave_state


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=200)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--columns", type=int, default=40, help="perturbation columns")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    lam = 12 / (37 * math.sqrt(2))
    P = ModelParams.with_rational_phase(0.1, lam, math.sqrt(37) / 5, 1, 4,
                                        TrigSeries.from_cos_sin(0.0, {1: 0.01}))
    wave = newton_solve(P, J=32)
    dt = 2 * math.pi / P.omega / 2000
    s0 = wave_state(P, wave, args.N)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((2 * args.N, args.columns))

    print(f"default backend: {BACKEND}; N={args.N}, steps={args.steps}, columns={args.columns}")
    W, Wd, Wdd = wave_samples(P, wave, args.N, 0.5 * dt * np.arange(2 * args.steps + 1))
    cases = {
        "lattice_rk4": lambda b: step_lattice(P, s0, dt, args.steps, backend=b).u,
        # a block of perturbation columns in one call, as in the monodromy computation
        "linearized_rk4": lambda b: _backend.linearized_rk4(
            X, dt, args.steps, P.lam, P.gamma, W, Wd, Wdd, backend=b)[0],
    }

    print(f"{'kernel':<16}{'python [s]':>12}{'default [s]':>13}{'speedup':>10}{'max diff':>11}")
    for name, fn in cases.items():
        tp, a = best_of(lambda: fn("python"), args.repeat)
        tc, b = best_of(lambda: fn(None), args.repeat)
        print(f"{name:<16}{tp:>12.4f}{tc:>13.4f}{tp / tc:>10.1f}{np.max(np.abs(a - b)):>11.1e}")


if __name__ == "__main__":
    main()
