"""Problem builders shared by several test modules."""

import math

import numpy as np

from certkit.gridfn import Grid, SampledFn
from certkit.green_bvp import CouplingProblem


def const_fn(grid, *values):
    return SampledFn(grid, np.tile(np.asarray(values, dtype=float), (grid.m, 1)))


def reference_problem(m=401, P=1.0, b=1.0, d=-5.0, c=0.25):
    g = Grid(1.0, m)
    return CouplingProblem(1.0, np.array([[c]]), np.array([[P]]), const_fn(g, b), const_fn(g, d))


def closed_form_p12(z, b=1.0, d=-5.0, P=1.0, c=0.25, a=1.0, l=1.0):
    lam = math.sqrt(c) / a
    return (b + d * P) / c * (np.cos(lam * z) - 1 + math.tan(lam * l / 2) * np.sin(lam * z))


def random_spd(rng, n, lo, hi):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(rng.uniform(lo, hi, n)) @ Q.T


def smooth_profile(rng, n):
    c0, c1, c2 = rng.uniform(-2, 2, (3, n))
    return lambda z: c0 + np.outer(np.cos(np.ravel(z)), c1) + np.outer(np.ravel(z), c2)


def random_problem(rng, n, m=401):
    """Scalar or symmetric positive-definite C away from resonance."""
    a = rng.uniform(0.6, 1.5)
    l = rng.uniform(0.6, 1.5)
    # keep sqrt(eig C) l / a inside (0, 2.5) so sin(lambda l) stays away from 0
    hi = (2.5 * a / l) ** 2
    C = random_spd(rng, n, 0.05 * hi, hi) if n > 1 else np.array([[rng.uniform(0.05, 1) * hi]])
    P = random_spd(rng, n, 0.5, 2.0)
    g = Grid(l, m)
    B = g.sample(smooth_profile(rng, n))
    D = g.sample(smooth_profile(rng, n))
    return CouplingProblem(a, C, P, B, D)


# acceptance lines, printed by the terminal-summary hook in conftest
ACCEPTANCE = []


def record_acceptance(number, title, passed, detail):
    ACCEPTANCE.append((number, title, bool(passed), detail))
    assert passed, f"criterion {number} ({title}): {detail}"
