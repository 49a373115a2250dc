"""Time the compiled and numpy time-loop kernels on the bundled example.

    python3 benchmarks/bench_galerkin.py [--T 5] [--modes 24 48 96] [--repeat 3]

Prints wall time per backend, the speedup, and the largest coefficient
difference between the two trajectories.
"""

import argparse
import time

import numpy as np

from certkit.config import load_example
from certkit.galerkin import HAVE_COMPILED, SimConfig, simulate


def run(cfg, N, T, dt, scheme, backend):
    return simulate(
        cfg.cascade(), cfg.scalar_nonlinearity(), cfg.vector_field(), cfg.disturbance_model(),
        phi=cfg.phi(), x0=cfg.x0(), config=SimConfig(N=N, dt=dt, T=T, record_dt=0.1, scheme=scheme),
        backend=backend,
    )


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--modes", type=int, nargs="+", default=[24, 48, 96])
    ap.add_argument("--scheme", default="etdrk2", choices=["etdrk2", "imex-euler"])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if not HAVE_COMPILED:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")

    cfg = load_example()
    steps = int(round(args.T / args.dt))
    print(f"example system, scheme={args.scheme}, dt={args.dt:g}, T={args.T:g} ({steps} steps), best of {args.repeat}")
    print(f"{'N':>5} {'python s':>10} {'compiled s':>11} {'speedup':>8} {'max |diff|':>11}")
    for N in args.modes:
        tp, a = best_time(lambda: run(cfg, N, args.T, args.dt, args.scheme, "python"), args.repeat)
        tc, b = best_time(lambda: run(cfg, N, args.T, args.dt, args.scheme, "compiled"), args.repeat)
        diff = max(np.max(np.abs(a.uhat - b.uhat)), np.max(np.abs(a.x - b.x)))
        print(f"{N:>5} {tp:>10.3f} {tc:>11.3f} {tp / tc:>8.2f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
