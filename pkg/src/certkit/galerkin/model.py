"""Sine-Galerkin model of the boundary-driven cascade.

The PDE state is split as ``u = u~ + H`` where ``H`` is the linear
interpolant of the boundary data, so ``u~`` vanishes at both ends and lives in
the span of ``e_j(z) = sqrt(2/l) sin(pi j z / l)``. The heat extension
``w = w~ + H`` is advanced in lockstep; ``v = u - w = u~ - w~`` is the
argument of the Lyapunov function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigurationError, DivergenceError, DomainError
from ..functions import ZERO_SIGNAL, Signal, nonlinearity, vector_field
from ..gridfn import Grid, SampledFn
from ..green_bvp import P12Solution
from ..system import CascadeSystem
from . import backend as _backend
from ._pykernels import BLOWUP, ETDRK2, IMEX_EULER

SCHEMES = {"etdrk2": ETDRK2, "imex-euler": IMEX_EULER}
D0_TOL = 1e-12


@dataclass(frozen=True)
class SineBasis:
    N: int
    l: float
    a: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"basis size must be a positive integer, got {self.N}")
        if not self.l > 0:
            raise ConfigurationError("basis length must be positive")

    @property
    def wavenumbers(self) -> np.ndarray:
        return math.pi * np.arange(1, self.N + 1) / self.l

    @property
    def eigenvalues(self) -> np.ndarray:
        return -(self.a**2) * self.wavenumbers**2

    def default_grid(self) -> Grid:
        # 4N+1 nodes: 2x padding for quadratic-and-higher nonlinearities
        return Grid(self.l, 4 * self.N + 1)

    def evaluate(self, z) -> np.ndarray:
        """Matrix ``E[i, j] = e_{j+1}(z_i)``."""
        z = np.asarray(z, dtype=float).reshape(-1)
        return math.sqrt(2.0 / self.l) * np.sin(np.outer(z, self.wavenumbers))

    def reconstruct(self, coeffs, grid: Grid) -> SampledFn:
        return SampledFn(grid, self.evaluate(grid.nodes) @ np.asarray(coeffs, dtype=float))


@dataclass
class SpectralState:
    """Coefficients of u~ (and of the heat extension w~), ODE state ``x``, time ``t``."""

    uhat: np.ndarray
    x: np.ndarray
    t: float = 0.0
    what: Optional[np.ndarray] = None

    def __post_init__(self):
        self.uhat = np.asarray(self.uhat, dtype=float).reshape(-1)
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.what = np.zeros_like(self.uhat) if self.what is None else np.asarray(self.what, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(self.uhat)) and np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.what))):
            raise DomainError("spectral state contains non-finite values")


@dataclass(frozen=True)
class Disturbance:
    """Boundary data ``u(0,t) = d1(t)``, ``u(l,t) = d2(t)`` with ``|d_i| <= d_inf``."""

    d1: Signal = ZERO_SIGNAL
    d2: Signal = ZERO_SIGNAL
    d_inf: float = 0.0

    def check(self, t: np.ndarray) -> None:
        t = np.asarray(t, dtype=float)
        for name, d in (("d1", self.d1), ("d2", self.d2)):
            d0 = float(d.value(np.array([0.0]))[0])
            if abs(d0) > D0_TOL:
                raise ConfigurationError(f"{name}(0) = {d0:g}; boundary disturbances must start at 0")
            vals = np.abs(d.value(t))
            k = int(np.argmax(vals))
            if vals[k] > self.d_inf * (1 + 1e-9) + 1e-15:
                raise ConfigurationError(
                    f"|{name}(t)| = {vals[k]:.9g} at t = {t[k]:.9g} exceeds d_inf = {self.d_inf:.9g}"
                )

    def sample(self, t: np.ndarray):
        t = np.asarray(t, dtype=float)
        return (
            np.asarray(self.d1.value(t), dtype=float) * np.ones_like(t),
            np.asarray(self.d2.value(t), dtype=float) * np.ones_like(t),
            np.asarray(self.d1.deriv(t), dtype=float) * np.ones_like(t),
            np.asarray(self.d2.deriv(t), dtype=float) * np.ones_like(t),
        )


def lift(z, t, disturbance: Disturbance, l: float):
    """H(z, t) = (l - z)/l d1(t) + z/l d2(t)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > l):
        raise DomainError(f"lift evaluated outside [0, {l}]")
    d1 = disturbance.d1.value(np.asarray(t, dtype=float))
    d2 = disturbance.d2.value(np.asarray(t, dtype=float))
    return (l - z) / l * d1 + z / l * d2


def project(f: SampledFn, basis: SineBasis) -> np.ndarray:
    """Sine coefficients ``<f, e_j>`` by the grid's composite quadrature."""
    if f.components != 1:
        raise ConfigurationError("project expects a scalar function")
    g = f.grid
    return (basis.evaluate(g.nodes) * g.weights[:, None]).T @ f.values[:, 0]


@dataclass(frozen=True)
class SimConfig:
    N: int = 48
    dt: float = 1e-3
    T: float = 1.0
    record_dt: Optional[float] = None
    m: Optional[int] = None
    scheme: str = "etdrk2"

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not self.T >= 0:
            raise ConfigurationError("T must be non-negative")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")

    @property
    def nsteps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def rec_every(self) -> int:
        if self.record_dt is None:
            return max(1, int(round(0.01 / self.dt)))
        return max(1, int(round(self.record_dt / self.dt)))


class GalerkinOperator:
    """Projected operators of the cascade on an ``N``-mode basis.

    The dict ``ops`` is what the time-loop kernels consume.
    """

    def __init__(self, system: CascadeSystem, N: int, m: Optional[int] = None):
        self.system = system
        self.basis = SineBasis(N, system.l, system.a)
        self.grid = Grid(system.l, m) if m is not None else self.basis.default_grid()
        z, w = self.grid.nodes, self.grid.weights
        Phi = self.basis.evaluate(z)
        Proj = (Phi * w[:, None]).T
        h1 = (system.l - z) / system.l
        h2 = z / system.l
        Bg = self.system.sample_B(self.grid).values
        Dg = self.system.sample_D(self.grid).values
        self.ops = {
            "Phi": np.ascontiguousarray(Phi),
            "Proj": np.ascontiguousarray(Proj),
            "h1g": h1,
            "h2g": h2,
            "h1hat": Proj @ h1,
            "h2hat": Proj @ h2,
            "Bhat": np.ascontiguousarray(Proj @ Bg),
            "Dhat": np.ascontiguousarray((Dg * w[:, None]).T @ Phi),
            "Dh1": Dg.T @ (w * h1),
            "Dh2": Dg.T @ (w * h2),
            "C": np.ascontiguousarray(system.C),
            "mu": self.basis.eigenvalues,
        }

    @property
    def n(self) -> int:
        return self.system.n

    def u_l2(self, uhat: np.ndarray, d1, d2) -> np.ndarray:
        """|u~ + H|_2 from coefficients; rows of ``uhat`` are times."""
        uhat = np.atleast_2d(uhat)
        d1 = np.asarray(d1, dtype=float)
        d2 = np.asarray(d2, dtype=float)
        l = self.system.l
        cross = uhat @ self.ops["h1hat"] * d1 + uhat @ self.ops["h2hat"] * d2
        hh = l / 3.0 * (d1 * d1 + d1 * d2 + d2 * d2)
        sq = np.einsum("ij,ij->i", uhat, uhat) + 2.0 * cross + hh
        return np.sqrt(np.maximum(sq, 0.0))


@dataclass
class Trajectory:
    times: np.ndarray
    u_l2: np.ndarray
    x_norm: np.ndarray
    V: Optional[np.ndarray]
    uhat: np.ndarray
    what: np.ndarray
    x: np.ndarray
    w_sup: np.ndarray
    backend: str
    scheme: str
    dt: float
    N: int
    m: int

    def __len__(self):
        return self.times.size


def _default_fields(f, X):
    if f is None:
        f = nonlinearity("zero")
    if X is None:
        X = vector_field("zero")
    return f, X


def rhs(state: SpectralState, op: GalerkinOperator, disturbance: Disturbance, f=None, X=None):
    """Time derivatives ``(duhat, dx)`` of the Galerkin system at ``state``."""
    f, X = _default_fields(f, X)
    ops = op.ops
    t = np.array([state.t])
    d1, d2, d1dot, d2dot = (float(v[0]) for v in disturbance.sample(t))
    ug = ops["Phi"] @ state.uhat + d1 * ops["h1g"] + d2 * ops["h2g"]
    fu = np.asarray(f(ug), dtype=float)
    bad = ~np.isfinite(fu)
    if bad.any():
        i = int(np.argmax(bad))
        raise DomainError(f"nonlinearity returned {fu[i]} at z = {op.grid.nodes[i]:.9g}, u = {ug[i]:.9g}")
    duhat = (
        ops["mu"] * state.uhat
        + ops["Proj"] @ fu
        + ops["Bhat"] @ state.x
        - (d1dot * ops["h1hat"] + d2dot * ops["h2hat"])
    )
    dx = (
        ops["C"] @ state.x
        + np.asarray(X(state.x), dtype=float)
        + ops["Dhat"] @ state.uhat
        + d1 * ops["Dh1"]
        + d2 * ops["Dh2"]
    )
    return duhat, dx


def _advance(op, state, dt, nsteps, rec_every, disturbance, f, X, scheme, backend):
    t = state.t + dt * np.arange(nsteps + 1)
    forcing = disturbance.sample(t)
    status, fail, U, W, Xs, used = _backend.run(
        SCHEMES[scheme], dt, nsteps, rec_every, state.uhat, state.what, state.x, op.ops, forcing, f, X, backend
    )
    if status:
        raise DivergenceError(
            f"state norm exceeded {BLOWUP:g} at step {fail} (t = {t[fail]:.9g})", step=fail, time=float(t[fail])
        )
    return U, W, Xs, used


def step(state: SpectralState, dt: float, op: GalerkinOperator, disturbance: Disturbance = Disturbance(),
         f=None, X=None, scheme: str = "etdrk2", backend: Optional[str] = None) -> SpectralState:
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    f, X = _default_fields(f, X)
    U, W, Xs, _ = _advance(op, state, dt, 1, 1, disturbance, f, X, scheme, backend)
    return SpectralState(U[-1], Xs[-1], state.t + dt, W[-1])


def _coefficients(values, basis: SineBasis, grid: Grid) -> np.ndarray:
    return project(SampledFn(grid, np.reshape(values, (grid.m, 1))), basis)


def p12_coefficients(p12: P12Solution, basis: SineBasis) -> np.ndarray:
    """N x n matrix of sine coefficients of the P12 components."""
    g = p12.values.grid
    E = basis.evaluate(g.nodes) * g.weights[:, None]
    return E.T @ p12.values.values


def simulate(
    system: CascadeSystem,
    f: Optional[Callable] = None,
    X: Optional[Callable] = None,
    disturbance: Disturbance = Disturbance(),
    phi: Optional[Callable] = None,
    x0=None,
    config: SimConfig = SimConfig(),
    p12: Optional[P12Solution] = None,
    P=None,
    backend: Optional[str] = None,
) -> Trajectory:
    """Integrate the Galerkin system on [0, T].

    ``phi`` maps z to the initial PDE profile (zero by default). When ``p12``
    and ``P`` are given, V(u - w, x) is recorded with ``w`` the heat extension
    of the boundary data, advanced alongside.
    """
    f, X = _default_fields(f, X)
    op = GalerkinOperator(system, config.N, config.m)
    n = system.n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != n:
        raise ConfigurationError(f"x0 has {x0.size} entries, system has n = {n}")
    grid = op.grid
    if phi is None:
        u0 = np.zeros(config.N)
    else:
        u0 = _coefficients(np.asarray(phi(grid.nodes), dtype=float), op.basis, grid)
    t_all = config.dt * np.arange(config.nsteps + 1)
    disturbance.check(t_all)
    state = SpectralState(u0, x0, 0.0)
    U, W, Xs, used = _advance(op, state, config.dt, config.nsteps, config.rec_every, disturbance, f, X,
                              config.scheme, backend)
    times = t_all[:: config.rec_every][: U.shape[0]]
    d1, d2, _, _ = disturbance.sample(times)
    u_l2 = op.u_l2(U, d1, d2)
    x_norm = np.linalg.norm(Xs, axis=1)
    V = None
    if p12 is not None:
        if P is None:
            raise ConfigurationError("recording V needs P together with P12")
        P = np.atleast_2d(np.asarray(P, dtype=float))
        ph = p12_coefficients(p12, op.basis)
        v = U - W
        V = np.einsum("ij,ij->i", v, v) + 2.0 * np.einsum("ij,jk,ik->i", v, ph, Xs) + np.einsum("ij,jk,ik->i", Xs, P, Xs)
    wg = W @ op.ops["Phi"].T + np.outer(d1, op.ops["h1g"]) + np.outer(d2, op.ops["h2g"])
    return Trajectory(
        times=times, u_l2=u_l2, x_norm=x_norm, V=V, uhat=U, what=W, x=Xs,
        w_sup=np.max(np.abs(wg), axis=1), backend=used, scheme=config.scheme,
        dt=config.dt, N=config.N, m=grid.m,
    )


def simulate_heat_extension(disturbance: Disturbance, config: SimConfig = SimConfig(), a: float = 1.0,
                            l: float = 1.0, backend: Optional[str] = None) -> Trajectory:
    """Heat equation with boundary data d1, d2 and zero initial data.

    Returned ``u_l2``/``uhat`` describe ``w``; ``w_sup`` is max over grid
    nodes of |w| at each recorded time.
    """
    zero = np.zeros((1, 1))
    system = CascadeSystem(a, l, zero, lambda z: np.zeros((np.size(z), 1)), lambda z: np.zeros((np.size(z), 1)))
    traj = simulate(system, disturbance=disturbance, config=config, backend=backend)
    # u and w coincide when f = 0 and the ODE is decoupled
    return traj


def lyapunov_V(v: SampledFn, x, p12: P12Solution, P) -> float:
    """<v, v> + 2 x^T int P12 v dz + x^T P x by quadrature on the shared grid."""
    g = p12.values.grid
    if v.grid != g:
        raise ConfigurationError("v and P12 must share a grid")
    x = np.asarray(x, dtype=float).reshape(-1)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    vv = v.values[:, 0]
    cross = x @ (p12.values.values.T @ (g.weights * vv))
    return float(g.weights @ (vv * vv) + 2.0 * cross + x @ P @ x)
