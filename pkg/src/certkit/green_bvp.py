"""The coupling-weight boundary value problem.

Solves

    a^2 P12''(z) + C^T P12(z) = -B(z) - P D(z),   P12(0) = P12(l) = 0

for the vector function P12 on a grid, two ways:

* ``solve_p12_green`` integrates the explicit Green's function against the
  forcing. Needs ``C`` symmetric positive definite (or a positive scalar).
* ``solve_p12_direct`` propagates the first-order companion system with matrix
  exponentials and fixes the unknown initial slope from the right boundary.
  Works for any real ``C`` and serves as the oracle for the first route.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, SingularProblemError, UnsupportedRegimeError
from .gridfn import Grid, SampledFn, cumulative_integral, lp_norm, simpson_weights

SIN_TOL = 1e-12
DET_SIN_TOL = 1e-10
COND_LIMIT = 1e12
SYM_TOL = 1e-12
RESIDUAL_RTOL = 1e-6


@dataclass(frozen=True)
class CouplingProblem:
    a: float
    C: np.ndarray
    P: np.ndarray
    B: SampledFn
    D: SampledFn

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        n = C.shape[0]
        if C.shape != (n, n) or P.shape != (n, n):
            raise DomainError(f"C and P must be square of equal size, got {C.shape}, {P.shape}")
        if not self.a > 0:
            raise DomainError(f"diffusion coefficient must be positive, got {self.a}")
        if np.max(np.abs(P - P.T)) > SYM_TOL * max(1.0, np.max(np.abs(P))):
            raise DomainError("P must be symmetric")
        if np.linalg.eigvalsh(P)[0] <= 0:
            raise DomainError("P must be positive definite")
        if self.B.grid != self.D.grid:
            raise DomainError("B and D must share one grid")
        if self.B.components != n or self.D.components != n:
            raise DomainError(f"B and D need {n} components")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "P", P)

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def grid(self) -> Grid:
        return self.B.grid

    @property
    def l(self) -> float:
        return self.grid.l

    def forcing(self) -> np.ndarray:
        """F(z) = -(B + P D) / a^2 sampled on the grid, shape ``m x n``."""
        return -(self.B.values + self.D.values @ self.P.T) / self.a**2


@dataclass(frozen=True)
class GreenKernel:
    """Green's function of ``y'' + C^T y / a^2 = F`` with zero Dirichlet data.

    ``evaluate(z, xi)`` broadcasts over array arguments and returns ``(..., n, n)``.
    """

    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    regime: str
    n: int
    l: float

    def __call__(self, z, xi):
        return self.evaluate(np.asarray(z, dtype=float), np.asarray(xi, dtype=float))


@dataclass(frozen=True)
class P12Solution:
    values: SampledFn
    norm_l1: float
    norm_l2: float
    norm_linf: float
    residual_norm: float
    method: str
    valid: bool

    @property
    def grid(self) -> Grid:
        return self.values.grid


def _scalar_green(lam: np.ndarray, l: float, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
    # per-eigenvalue kernel sin(lam*lo) sin(lam*(hi - l)) / (lam sin(lam l))
    lo = np.minimum(z, xi)[..., None]
    hi = np.maximum(z, xi)[..., None]
    return np.sin(lam * lo) * np.sin(lam * (hi - l)) / (lam * np.sin(lam * l))


def green_kernel_scalar(c: float, a: float, l: float) -> GreenKernel:
    """Kernel for scalar ``C = c > 0``; wavenumber ``lambda = sqrt(c) / a``."""
    if not c > 0:
        raise UnsupportedRegimeError(f"scalar Green kernel needs c > 0, got {c}")
    lam = np.array([np.sqrt(c) / a])
    s = np.sin(lam[0] * l)
    if abs(s) < SIN_TOL:
        raise SingularProblemError(
            f"resonance: sin(lambda*l) = {s:.3e} for lambda = {lam[0]:.9g}, l = {l}"
        )

    def evaluate(z, xi):
        return _scalar_green(lam, l, z, xi)[..., None]

    return GreenKernel(evaluate, "scalar-closed-form", 1, l)


def green_kernel_sym(C: np.ndarray, a: float, l: float) -> GreenKernel:
    """Kernel for symmetric positive definite ``C`` via ``C = Q diag(c_k) Q^T``."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[0] == 1:
        return green_kernel_scalar(float(C[0, 0]), a, l)
    if np.max(np.abs(C - C.T)) > SYM_TOL * max(1.0, np.max(np.abs(C))):
        raise UnsupportedRegimeError("C is not symmetric; use solve_p12_direct")
    evals, Q = np.linalg.eigh(C)
    if evals[0] <= 0:
        raise UnsupportedRegimeError("C is not positive definite; use solve_p12_direct")
    lam = np.sqrt(evals) / a
    sines = np.sin(lam * l)
    if abs(np.prod(sines)) < DET_SIN_TOL:
        k = int(np.argmin(np.abs(sines)))
        raise SingularProblemError(
            f"det sin(C^(1/2) l / a) = {np.prod(sines):.3e}; offending eigenvalue {evals[k]:.9g}"
        )

    def evaluate(z, xi):
        g = _scalar_green(lam, l, z, xi)
        return np.einsum("ik,...k,jk->...ij", Q, g, Q)

    return GreenKernel(evaluate, "symmetric-PD-matrix", C.shape[0], l)


def _kernel_for(problem: CouplingProblem) -> GreenKernel:
    if problem.n == 1:
        return green_kernel_scalar(float(problem.C[0, 0]), problem.a, problem.l)
    return green_kernel_sym(problem.C, problem.a, problem.l)


def split_quadrature_weights(grid: Grid) -> np.ndarray:
    """Row ``i`` integrates over [0, z_i] and [z_i, l] separately.

    The Green kernel has a derivative jump on the diagonal, so each row's
    quadrature is split there to keep both pieces smooth.
    """
    m, h = grid.m, grid.h
    W = np.zeros((m, m))
    for i in range(m):
        W[i, : i + 1] += simpson_weights(i + 1, h)
        W[i, i:] += simpson_weights(m - i, h)
    return W


def second_difference(y: np.ndarray, h: float) -> np.ndarray:
    """Second derivative at interior nodes 1..m-2.

    Fourth-order centred stencil where five points fit, fourth-order
    one-sided stencils at nodes 1 and m-2; plain 3-point below 7 nodes.
    """
    m = y.shape[0]
    if m < 7:
        return (y[2:] - 2.0 * y[1:-1] + y[:-2]) / h**2
    d2 = np.empty((m - 2,) + y.shape[1:])
    d2[1:-1] = (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (12 * h**2)
    c = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / (12 * h**2)
    d2[0] = np.tensordot(c, y[:6], axes=1)
    d2[-1] = np.tensordot(c, y[::-1][:6], axes=1)
    return d2


def p12_residual(solution: P12Solution | SampledFn, problem: CouplingProblem) -> float:
    """Max over interior nodes of ``|a^2 P12'' + C^T P12 + B + P D|`` by finite differences."""
    values = solution.values if isinstance(solution, (P12Solution,)) else solution
    if values.grid != problem.grid:
        raise DomainError("solution and problem use different grids")
    y = values.values
    d2 = second_difference(y, problem.grid.h)
    r = (
        problem.a**2 * d2
        + y[1:-1] @ problem.C  # rows of C^T y
        + problem.B.values[1:-1]
        + problem.D.values[1:-1] @ problem.P.T
    )
    return float(np.max(np.linalg.norm(r, axis=1))) if len(r) else 0.0


def residual_tolerance(problem: CouplingProblem, rtol: float = RESIDUAL_RTOL) -> float:
    return rtol * (1.0 + float(np.max(np.linalg.norm(problem.forcing(), axis=1))))


def _finish(values: np.ndarray, problem: CouplingProblem, method: str, rtol: float) -> P12Solution:
    values = np.array(values)
    values[0] = 0.0
    values[-1] = 0.0
    f = SampledFn(problem.grid, values)
    res = p12_residual(f, problem)
    return P12Solution(
        values=f,
        norm_l1=lp_norm(f, 1),
        norm_l2=lp_norm(f, 2),
        norm_linf=lp_norm(f, np.inf),
        residual_norm=res,
        method=method,
        valid=res <= residual_tolerance(problem, rtol),
    )


def solve_p12_green(problem: CouplingProblem, rtol: float = RESIDUAL_RTOL) -> P12Solution:
    """P12(z) = int_0^l G(z, xi) F(xi) dxi.

    On each side of the diagonal the kernel factors as a product of a function
    of z and a function of xi, so per eigen-direction of C

        P12(z) = [sin(lam (z - l)) int_0^z sin(lam xi) F dxi
                  + sin(lam z) int_z^l sin(lam (xi - l)) F dxi] / (lam sin(lam l))

    and both integrands are smooth over the whole interval. Running integrals
    replace the row-by-row split quadrature, which keeps the error a smooth
    function of z.
    """
    kernel = _kernel_for(problem)  # validates the regime and resonance
    z = problem.grid.nodes
    h, l = problem.grid.h, problem.l
    F = problem.forcing()
    if problem.n == 1:
        lam = np.array([np.sqrt(problem.C[0, 0]) / problem.a])
        Q = np.eye(1)
    else:
        evals, Q = np.linalg.eigh(0.5 * (problem.C + problem.C.T))
        lam = np.sqrt(evals) / problem.a
    Ft = F @ Q  # components along the eigenvectors
    sz = np.sin(np.outer(z, lam))
    szl = np.sin(np.outer(z - l, lam))
    left = cumulative_integral(sz * Ft, h)
    tail = cumulative_integral(szl * Ft, h)
    right = tail[-1] - tail
    Pt = (szl * left + sz * right) / (lam * np.sin(lam * l))
    return _finish(Pt @ Q.T, problem, f"green:{kernel.regime}", rtol)


def _panel_propagators(A: np.ndarray, n: int, h: float):
    """Exact propagators for y' = A y + E g(s) with quadratic g over one or two steps.

    The forcing coefficients (g0, g1, g2) of ``g(s) = g0 + g1 s + g2 s^2`` are
    appended to the state so that a single matrix exponential carries both the
    homogeneous flow and the Duhamel integral.
    """
    k = 2 * n
    Z = np.zeros((k + 3 * n, k + 3 * n))
    Z[:k, :k] = A
    Z[n:k, k : k + n] = np.eye(n)  # forcing enters the derivative rows
    Z[k : k + n, k + n : k + 2 * n] = np.eye(n)
    Z[k + n : k + 2 * n, k + 2 * n :] = 2.0 * np.eye(n)
    E1 = expm(Z * h)[:k]
    E2 = expm(Z * (2.0 * h))[:k]
    return E1, E2


def solve_p12_direct(problem: CouplingProblem, rtol: float = RESIDUAL_RTOL) -> P12Solution:
    """Companion-system solve valid for arbitrary real ``C``.

    ``Y = (P12, P12')`` obeys ``Y' = A Y + (0, F)`` with
    ``A = [[0, I], [-C^T / a^2, 0]]``. ``F`` is interpolated by a quadratic on
    each two-interval panel and the panel flow is computed exactly, so the
    scheme is exact whenever ``F`` is piecewise quadratic. The initial slope is
    then fixed by ``P12(l) = 0``.
    """
    n, grid = problem.n, problem.grid
    m, h = grid.m, grid.h
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -problem.C.T / problem.a**2
    E1, E2 = _panel_propagators(A, n, h)
    F = problem.forcing()

    # Columns 0..n-1: homogeneous response to unit initial slopes; column n: particular part.
    Y = np.zeros((m, 2 * n, n + 1))
    Y[0, n:, :n] = np.eye(n)
    for i in range(0, m - 1, 2):
        f0, f1, f2 = F[i], F[i + 1], F[i + 2]
        g0 = f0
        g1 = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
        g2 = (f0 - 2.0 * f1 + f2) / (2.0 * h * h)
        aug = np.zeros((5 * n, n + 1))
        aug[: 2 * n] = Y[i]
        aug[2 * n :, n] = np.concatenate([g0, g1, g2])
        Y[i + 1] = E1 @ aug
        Y[i + 2] = E2 @ aug

    M = Y[-1, :n, :n]
    rhs = -Y[-1, :n, n]
    # relative to the size of the slope-response flow, so a scalar M is also judged
    smin = np.linalg.svd(M, compute_uv=False)[-1]
    scale = max(1.0, float(np.linalg.norm(Y[-1, :, :n], 2)))
    cond = scale / smin if smin > 0 else np.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularProblemError(
            f"boundary solve ill-conditioned (cond = {cond:.3e}); problem is at or near resonance"
        )
    slope = np.linalg.solve(M, rhs)
    values = Y[:, :n, :n] @ slope + Y[:, :n, n]
    return _finish(values, problem, "direct", rtol)


def solve_p12(problem: CouplingProblem, rtol: float = RESIDUAL_RTOL) -> P12Solution:
    """Green route when the kernel exists, companion-system route otherwise."""
    try:
        return solve_p12_green(problem, rtol)
    except UnsupportedRegimeError:
        return solve_p12_direct(problem, rtol)
