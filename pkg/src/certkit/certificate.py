"""Certificate quantities, feasibility verdicts and explicit ISS bounds.

Given a coupling problem (a, l, C, P, B, D) and the nonlinearity constants,
this module builds the Lyapunov sandwich matrices, the dissipation rates
``omega`` and ``Omega``, the coupling matrix ``Xi``, the Young-inequality
split points ``tau1``/``tau2``, and from them the decay rate and gain of the
ISS estimate. A sampling auditor checks the growth hypotheses on ``f`` and
``X``; a pass there is evidence, not proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .errors import (
    ConfigurationError,
    DomainError,
    InfeasibleCertificateError,
    NoRootError,
    NumericDegeneracyError,
    SingularProblemError,
    StaleSolutionError,
)
from .gridfn import DEFAULT_NODES, Grid, SampledFn, lp_norm
from .green_bvp import (
    CouplingProblem,
    P12Solution,
    _kernel_for,
    p12_residual,
    residual_tolerance,
    solve_p12,
    split_quadrature_weights,
)

POSITIVITY_MARGIN = 1e-10
STALE_RTOL = 1e-4
MAX_HALVINGS = 60

LIPSCHITZ = "lipschitz"
GENERAL = "general"


@dataclass(frozen=True)
class NonlinearitySpec:
    """Growth constants of ``f = f0 + f1`` and ``X``.

    In ``lipschitz`` mode only ``sigma`` and ``L`` enter the certificate; the
    remaining constants are ignored.
    """

    mode: str = LIPSCHITZ
    sigma: float = 0.0
    L: float = 0.0
    alpha: float = 0.0
    q: float = 1.5
    c0: float = 0.0
    zeta: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    f0: Optional[Callable] = field(default=None, compare=False, repr=False)
    f1: Optional[Callable] = field(default=None, compare=False, repr=False)
    X: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.mode not in (LIPSCHITZ, GENERAL):
            raise ConfigurationError(f"unknown nonlinearity mode {self.mode!r}")
        if self.L < 0:
            raise ConfigurationError("Lipschitz constant L must be >= 0")
        if self.mode == GENERAL:
            if not self.alpha > 0:
                raise ConfigurationError("general mode needs alpha > 0")
            if self.q < 1.5:
                raise ConfigurationError("general mode needs q >= 3/2")
            for name in ("c0", "zeta", "delta1", "delta2"):
                if getattr(self, name) < 0:
                    raise ConfigurationError(f"{name} must be >= 0")

    def f(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        if self.f0 is not None:
            out = out + self.f0(s)
        if self.f1 is not None:
            out = out + self.f1(s)
        return out


# ---------------------------------------------------------------------------
# small symmetric eigenvalue helpers


def eig2(M: np.ndarray) -> tuple[float, float]:
    """(lambda_min, lambda_max) of a symmetric 2x2 matrix in closed form."""
    a, b, d = float(M[0, 0]), float(M[0, 1]), float(M[1, 1])
    mean = 0.5 * (a + d)
    r = math.hypot(0.5 * (a - d), b)
    hi, lo = mean + r, mean - r
    # det / lambda_max avoids cancellation when lambda_min << lambda_max
    if mean > 0 and hi > 0:
        lo = (a * d - b * b) / hi
    elif mean < 0 and lo < 0:
        hi = (a * d - b * b) / lo
    return lo, hi


def lambda_min_sym(M: np.ndarray) -> float:
    M = np.atleast_2d(M)
    S = 0.5 * (M + M.T)
    if S.shape == (2, 2):
        return eig2(S)[0]
    return float(np.linalg.eigvalsh(S)[0])


def build_pi_matrices(p12_l2: float, P: np.ndarray):
    """Sandwich matrices bounding V between multiples of |v|^2 + |x|^2."""
    ev = np.linalg.eigvalsh(np.atleast_2d(P))
    Pi1 = np.array([[1.0, -p12_l2], [-p12_l2, ev[0]]])
    Pi2 = np.array([[1.0, p12_l2], [p12_l2, ev[-1]]])
    return Pi1, Pi2, eig2(Pi1)[0], eig2(Pi2)[1]


def compute_omega(a: float, l: float, D_l2: float, p12_l2: float, sigma: float) -> float:
    return 2.0 * (math.pi**2 * a**2 / l**2 - D_l2 * p12_l2 - sigma)


def compute_Omega(
    problem: CouplingProblem, p12: P12Solution, stale_rtol: float = STALE_RTOL
) -> tuple[np.ndarray, float]:
    """Omega = -(C^T P + P C + int (P12 B^T + B P12^T) dz).

    Uses that the Green double integral collapses to ``-int P12 B^T dz``
    once P12 solves the boundary value problem, so ``p12`` is re-checked
    against ``problem`` first.
    """
    res = p12_residual(p12, problem)
    tol = residual_tolerance(problem, stale_rtol)
    if res > tol:
        raise StaleSolutionError(
            f"P12 residual {res:.3e} exceeds {tol:.3e}; solution does not belong to this problem"
        )
    w = problem.grid.weights
    cross = np.einsum("i,ia,ib->ab", w, p12.values.values, problem.B.values)
    C, P = problem.C, problem.P
    Omega = -(C.T @ P + P @ C + cross + cross.T)
    Omega = 0.5 * (Omega + Omega.T)
    return Omega, lambda_min_sym(Omega)


def compute_Omega_double(problem: CouplingProblem) -> tuple[np.ndarray, float]:
    """Omega from the double integral over the Green kernel (no P12 needed)."""
    kernel = _kernel_for(problem)
    grid = problem.grid
    z = grid.nodes
    G = kernel(z[:, None], z[None, :])
    W = split_quadrature_weights(grid)
    S = problem.B.values + problem.D.values @ problem.P.T  # B + P D
    inner_int = np.einsum("ij,ijab,jb->ia", W, G, S)  # int G(z, zeta) S(zeta) dzeta
    first = np.einsum("i,ia,ib->ab", grid.weights, inner_int, problem.B.values)
    C, P = problem.C, problem.P
    Omega = -(C.T @ P + P @ C - (first + first.T) / problem.a**2)
    Omega = 0.5 * (Omega + Omega.T)
    return Omega, lambda_min_sym(Omega)


def compute_Xi(omega: float, lambda_min_Omega: float, L: float, p12_l2: float):
    off = -L * p12_l2
    Xi = np.array([[omega, off], [off, lambda_min_Omega]])
    return Xi, eig2(Xi)[0]


# ---------------------------------------------------------------------------
# tau roots


def tau_coefficients(spec: NonlinearitySpec, norms: Sequence[float], l: float):
    """Coefficients (A1, B1, A2, B2) of the two monotone tau equations.

    tau1:  A1 t^(2q) + B1 t^(2q/(2q-1)) = 2 delta1     (increasing)
    tau2:  A2 t^(-2q) + B2 t^(-2q/(2q-1)) = 2 alpha    (decreasing)
    ``norms`` are the (L1, L2, Linf) norms of P12.
    """
    n1, n2, ninf = norms
    q = spec.q
    A1 = spec.zeta * n1 / q
    B1 = spec.delta2 * n2 * (2 * q - 1) / q
    A2 = spec.delta2 * n2 * l ** (q - 1) / q
    B2 = spec.zeta * (2 * q - 1) * ninf / q
    return A1, B1, A2, B2


def tau1_lhs(t, q, A1, B1):
    return A1 * t ** (2 * q) + B1 * t ** (2 * q / (2 * q - 1))


def tau2_lhs(t, q, A2, B2):
    return A2 * t ** (-2 * q) + B2 * t ** (-2 * q / (2 * q - 1))


def _monotone_root(g: Callable[[float], float], increasing: bool) -> float:
    lo = hi = 1.0
    sign = 1.0 if increasing else -1.0
    # expand until sign * g(lo) < 0 < sign * g(hi)
    for _ in range(2100):
        if sign * g(hi) >= 0:
            break
        hi *= 2.0
    else:
        raise NoRootError("could not bracket the root from above")
    for _ in range(2100):
        if sign * g(lo) <= 0:
            break
        lo *= 0.5
    else:
        raise NoRootError("could not bracket the root from below")
    if g(lo) == 0:
        return lo
    if g(hi) == 0:
        return hi
    return bisect(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=5000)


def solve_tau(spec: NonlinearitySpec, norms: Sequence[float], l: float) -> tuple[float, float]:
    """Roots tau1, tau2 of the two split-point equations.

    ``delta1 = 0`` gives ``tau1 = 0`` and ``alpha = 0`` gives ``tau2 = inf``;
    both then fail the ordering ``tau2 < tau1``. A side whose coefficients all
    vanish while its right-hand side is positive has no root.
    """
    A1, B1, A2, B2 = tau_coefficients(spec, norms, l)
    return _tau_roots(spec.q, (A1, B1, A2, B2), spec.delta1, spec.alpha)


def _tau_roots(q, coeffs, delta1, alpha):
    A1, B1, A2, B2 = coeffs
    if min(A1, B1, A2, B2) < 0:
        raise DomainError("tau equation coefficients must be nonnegative")

    if delta1 == 0:
        tau1 = 0.0
    elif A1 == 0 and B1 == 0:
        raise NoRootError("tau1 equation: left side vanishes identically but 2*delta1 > 0")
    else:
        tau1 = _monotone_root(lambda t: tau1_lhs(t, q, A1, B1) - 2 * delta1, increasing=True)

    if alpha == 0:
        tau2 = math.inf
    elif A2 == 0 and B2 == 0:
        raise NoRootError("tau2 equation: left side vanishes identically but 2*alpha > 0")
    else:
        tau2 = _monotone_root(lambda t: tau2_lhs(t, q, A2, B2) - 2 * alpha, increasing=False)
    return tau1, tau2


# ---------------------------------------------------------------------------
# certificate


@dataclass(frozen=True)
class Verdict:
    condition: int
    name: str
    passed: Optional[bool]  # None: not applicable in this mode
    value: float


@dataclass(frozen=True)
class Certificate:
    mode: str
    p12: P12Solution
    Pi1: np.ndarray
    Pi2: np.ndarray
    lambda_min_Pi1: float
    lambda_max_Pi2: float
    omega: float
    Omega: np.ndarray
    lambda_min_Omega: float
    Xi: np.ndarray
    lambda_min_Xi: float
    tau1: Optional[float]
    tau2: Optional[float]
    verdicts: tuple[Verdict, ...]
    feasible: bool
    a: float
    l: float
    D_l2: float
    P_norm: float
    L: float

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def failed_conditions(self) -> list[int]:
        return sorted({v.condition for v in self.verdicts if v.passed is False})


def _tau_pair(spec: NonlinearitySpec, p12: P12Solution, l: float) -> tuple[float, float]:
    # an identically vanishing left side satisfies its strict inequality for every tau
    norms = (p12.norm_l1, p12.norm_l2, p12.norm_linf)
    A1, B1, A2, B2 = tau_coefficients(spec, norms, l)
    deg1 = A1 == 0 and B1 == 0 and spec.delta1 > 0
    deg2 = A2 == 0 and B2 == 0 and spec.alpha > 0
    tau1, tau2 = _tau_roots(
        spec.q, (A1, B1, A2, B2), 0.0 if deg1 else spec.delta1, 0.0 if deg2 else spec.alpha
    )
    if deg1:
        tau1 = math.inf
    if deg2:
        tau2 = 0.0
    return tau1, tau2


def certify(
    problem: CouplingProblem,
    spec: NonlinearitySpec,
    p12: Optional[P12Solution] = None,
    stale_rtol: float = STALE_RTOL,
) -> Certificate:
    if p12 is None:
        p12 = solve_p12(problem)
    D_l2 = lp_norm(problem.D, 2)
    Pi1, Pi2, lmin1, lmax2 = build_pi_matrices(p12.norm_l2, problem.P)
    omega = compute_omega(problem.a, problem.l, D_l2, p12.norm_l2, spec.sigma)
    Omega, lmin_Omega = compute_Omega(problem, p12, stale_rtol)
    Xi, lmin_Xi = compute_Xi(omega, lmin_Omega, spec.L, p12.norm_l2)

    m = POSITIVITY_MARGIN
    verdicts = [
        Verdict(2, "Pi1 positive definite", lmin1 > m, lmin1),
        Verdict(3, "omega > 0", omega > m, omega),
        Verdict(3, "Omega positive definite", lmin_Omega > m, lmin_Omega),
        Verdict(4, "Xi positive definite", lmin_Xi > m, lmin_Xi),
    ]
    tau1 = tau2 = None
    if spec.mode == GENERAL:
        tau1, tau2 = _tau_pair(spec, p12, problem.l)
        verdicts.append(Verdict(5, "tau2 < tau1", tau2 < tau1, tau1 - tau2))
    else:
        verdicts.append(Verdict(5, "tau2 < tau1", None, math.nan))
    feasible = all(v.passed for v in verdicts if v.passed is not None)
    return Certificate(
        mode=spec.mode,
        p12=p12,
        Pi1=Pi1,
        Pi2=Pi2,
        lambda_min_Pi1=lmin1,
        lambda_max_Pi2=lmax2,
        omega=omega,
        Omega=Omega,
        lambda_min_Omega=lmin_Omega,
        Xi=Xi,
        lambda_min_Xi=lmin_Xi,
        tau1=tau1,
        tau2=tau2,
        verdicts=tuple(verdicts),
        feasible=bool(feasible),
        a=problem.a,
        l=problem.l,
        D_l2=D_l2,
        P_norm=float(np.linalg.norm(problem.P, 2)),
        L=spec.L,
    )


# ---------------------------------------------------------------------------
# ISS constants


def rho(x0, phi: SampledFn) -> float:
    """Size of the initial state, (|x0|^2 + |phi|_2^2)^(1/2)."""
    return math.sqrt(float(np.dot(np.ravel(x0), np.ravel(x0))) + lp_norm(phi, 2) ** 2)


@dataclass(frozen=True)
class IssConstants:
    mode: str
    lambda_min_Pi1: float
    lambda_max_Pi2: float
    lambda_min_Xi: float
    l: float
    # corollary mode
    K1: float = math.nan
    K2: float = math.nan
    theta: float = math.nan
    beta: float = math.nan
    # general mode
    theta0: float = math.nan
    epsilon: float = math.nan
    tau: float = math.nan
    H1: float = math.nan
    H2: float = math.nan
    H3: float = math.nan
    H4: float = math.nan
    vartheta: float = math.nan
    d_inf: float = math.nan

    @property
    def overshoot(self) -> float:
        """Coefficient sqrt(lambda_max(Pi2) / lambda_min(Pi1)) multiplying rho."""
        return math.sqrt(self.lambda_max_Pi2 / self.lambda_min_Pi1)

    @property
    def decay_rate(self) -> float:
        return self.theta if self.mode == "corollary" else self.theta0

    @property
    def gain(self) -> float:
        """Disturbance gain of the x-bound (corollary mode: per unit d_inf)."""
        if self.mode == "corollary":
            return math.sqrt(self.beta / (self.theta * self.lambda_min_Pi1))
        return math.sqrt(self.vartheta / (self.lambda_min_Pi1 * self.theta0))

    @property
    def V_offset_coefficient(self) -> float:
        """2 beta lambda_max(Pi2) / lambda_min(Xi), the steady V level per d_inf^2."""
        return 2.0 * self.beta * self.lambda_max_Pi2 / self.lambda_min_Xi

    def bounds(self, t, d_inf: float, rho_0: float):
        """(x_bound, u_bound) at times ``t``.

        In general mode the disturbance term was fixed when the constants were
        built, so ``d_inf`` must not exceed the value used there.
        """
        t = np.asarray(t, dtype=float)
        decay = self.overshoot * rho_0 * np.exp(-self.decay_rate * t / 2.0)
        if self.mode == "corollary":
            gx = self.gain * d_inf
        else:
            if d_inf > self.d_inf * (1 + 1e-12):
                raise ConfigurationError(
                    f"general-mode constants were built for d_inf <= {self.d_inf}, got {d_inf}"
                )
            gx = self.gain
        x_b = decay + gx
        u_b = x_b + math.sqrt(self.l) * d_inf
        return x_b, u_b


def corollary_constants(cert: Certificate) -> IssConstants:
    if not cert.feasible:
        raise InfeasibleCertificateError(
            f"certificate infeasible (failed conditions {cert.failed_conditions()})"
        )
    if cert.mode != LIPSCHITZ:
        raise ConfigurationError("corollary constants need the globally Lipschitz mode")
    p = cert.p12.norm_l2
    K1 = cert.L + cert.D_l2 * p
    K2 = cert.L * p + cert.D_l2 * cert.P_norm
    lam = cert.lambda_min_Xi
    return IssConstants(
        mode="corollary",
        lambda_min_Pi1=cert.lambda_min_Pi1,
        lambda_max_Pi2=cert.lambda_max_Pi2,
        lambda_min_Xi=lam,
        l=cert.l,
        K1=K1,
        K2=K2,
        theta=lam / (2.0 * cert.lambda_max_Pi2),
        beta=2.0 * cert.l * (K1**2 + K2**2) / lam,
    )


def iss_bound(constants: IssConstants, t, d_inf: float, rho_0: float):
    if constants.mode != "corollary":
        raise ConfigurationError("iss_bound expects corollary-mode constants")
    return constants.bounds(t, d_inf, rho_0)


def psi0(eps: float, d_inf: float, spec: NonlinearitySpec) -> float:
    """Constant part of the bound on f(v + w) - f(v)."""
    q, c0 = spec.q, spec.c0
    k = 2.0 ** (2 * q - 3) * c0
    return (
        k * eps ** (1 - 2 * q) / (2 * q - 1) * d_inf ** (2 * q - 1)
        + (spec.L + c0) * d_inf
        + k * d_inf ** (2 * q - 1)
    )


def psi1(eps: float, spec: NonlinearitySpec) -> float:
    """Coefficient of |v|^(2q-1) in the bound on f(v + w) - f(v)."""
    q = spec.q
    return 2.0 ** (2 * q - 3) * spec.c0 * (2 * q - 2) / (2 * q - 1) * eps ** ((2 * q - 1) / (2 * q - 2))


def h_terms(
    eps: float, tau: float, d_inf: float, spec: NonlinearitySpec, cert: Certificate
) -> tuple[float, float, float, float]:
    """(H1, H2, H3, H4) of the dissipation estimate at the split point (eps, tau)."""
    q, l = spec.q, cert.l
    n1, n2, ninf = cert.p12.norm_l1, cert.p12.norm_l2, cert.p12.norm_linf
    p0 = psi0(eps, d_inf, spec) if eps > 0 else (spec.L * d_inf if spec.c0 == 0 else math.inf)
    p1 = psi1(eps, spec)
    sl = math.sqrt(l)
    H1 = 2 * sl * (p0 + d_inf * cert.D_l2 * n2)
    H2 = 2 * sl * (n2 * p0 + cert.P_norm * cert.D_l2 * d_inf)
    H3 = (
        2 * p1 * (1 + (2 * q - 1) / (2 * q) * ninf)
        + spec.delta2 * n2 * l ** (q - 1) / q * tau ** (-2 * q)
        + spec.zeta * (2 * q - 1) * ninf / q * tau ** (-2 * q / (2 * q - 1))
        - 2 * spec.alpha
    )
    H4 = (
        p1 * n1 / q
        + spec.zeta * n1 / q * tau ** (2 * q)
        + spec.delta2 * n2 * (2 * q - 1) / q * tau ** (2 * q / (2 * q - 1))
        - 2 * spec.delta1
    )
    return H1, H2, H3, H4


def select_tau(tau1: float, tau2: float) -> float:
    """A point strictly inside (tau2, tau1): the midpoint when both ends are finite."""
    if math.isinf(tau1) and tau2 == 0:
        return 1.0
    if math.isinf(tau1):
        return 2.0 * tau2
    if tau2 == 0:
        return 0.5 * tau1
    return 0.5 * (tau1 + tau2)


def general_bound_constants(
    cert: Certificate, spec: NonlinearitySpec, d_inf: float
) -> IssConstants:
    if spec.mode != GENERAL:
        raise ConfigurationError("general bound constants need the general mode")
    if not cert.feasible:
        raise InfeasibleCertificateError(
            f"certificate infeasible (failed conditions {cert.failed_conditions()})"
        )
    tau = select_tau(cert.tau1, cert.tau2)
    eps = 1.0
    for _ in range(MAX_HALVINGS + 1):
        H1, H2, H3, H4 = h_terms(eps, tau, d_inf, spec, cert)
        if H3 < 0 and H4 < 0:
            break
        eps *= 0.5
    else:
        raise NumericDegeneracyError(
            f"no epsilon in [2^-{MAX_HALVINGS}, 1] makes H3 and H4 negative at tau = {tau}"
        )
    lam = cert.lambda_min_Xi
    return IssConstants(
        mode="general",
        lambda_min_Pi1=cert.lambda_min_Pi1,
        lambda_max_Pi2=cert.lambda_max_Pi2,
        lambda_min_Xi=lam,
        l=cert.l,
        theta0=lam / (2.0 * cert.lambda_max_Pi2),
        epsilon=eps,
        tau=tau,
        H1=H1,
        H2=H2,
        H3=H3,
        H4=H4,
        vartheta=(H1**2 + H2**2) / (2.0 * lam),
        d_inf=d_inf,
    )


# ---------------------------------------------------------------------------
# scalar example helpers


def kappa_chi(lam: float, l: float, m: int = DEFAULT_NODES):
    """kappa, chi of the scalar example together with their small-(lam l) forms.

    ``chi`` is the L2 norm of cos(lam z) - 1 + tan(lam l / 2) sin(lam z).
    """
    x = lam * l
    if abs(math.cos(x / 2)) < 1e-12:
        raise SingularProblemError(f"tan(lam l / 2) has a pole at lam l = {x}")
    if abs(math.sin(x)) < 1e-12:
        raise SingularProblemError(f"sin(lam l) vanishes at lam l = {x}")
    kappa = 2.0 / lam * math.tan(x / 2) - l
    grid = Grid(l, m)
    z = grid.nodes
    integrand = (math.sin(x) + np.sin(lam * (z - l)) - np.sin(lam * z)) ** 2
    chi = math.sqrt(float(grid.weights @ integrand)) / abs(math.sin(x))
    kappa_approx = lam**2 * l**3 / 12.0
    chi_approx = lam**2 * l**2 * math.sqrt(l) / (2.0 * math.sqrt(30.0))
    return kappa, chi, kappa_approx, chi_approx


# ---------------------------------------------------------------------------
# hypothesis audit


@dataclass(frozen=True)
class AuditCheck:
    name: str
    applicable: bool
    passed: bool
    samples: int
    worst_excess: float = 0.0
    witness: Optional[tuple] = None
    informational: bool = False


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[AuditCheck, ...]
    note: str = "sampling audit: a pass is evidence, not proof"

    @property
    def violations(self) -> list[AuditCheck]:
        return [c for c in self.checks if c.applicable and not c.informational and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.violations


def _finite(arr, what):
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} returned non-finite values")
    return arr


def _check(name, lhs, rhs, witness_args, samples, applicable=True, informational=False, rtol=1e-9):
    """Pass iff lhs <= rhs up to a relative slack."""
    excess = lhs - rhs - rtol * (np.abs(lhs) + np.abs(rhs)) - 1e-300
    k = int(np.argmax(excess)) if excess.size else 0
    worst = float(excess[k]) if excess.size else 0.0
    passed = worst <= 0
    wit = None if passed else tuple(np.asarray(a[k]).tolist() for a in witness_args)
    return AuditCheck(name, applicable, bool(passed), int(samples), worst, wit, informational)


def audit_hypotheses(
    spec: NonlinearitySpec,
    P: np.ndarray,
    samples: int = 100_000,
    seed: int = 0,
    s_range: tuple[float, float] = (1e-4, 1e4),
    n: Optional[int] = None,
) -> AuditReport:
    """Sample the growth and sign hypotheses on f0, f1 and X."""
    if samples < 1:
        raise ConfigurationError("audit needs a positive sample count")
    rng = np.random.default_rng(seed)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[0] if n is None else n
    half = max(samples // 2, 1)
    mag = np.logspace(np.log10(s_range[0]), np.log10(s_range[1]), half)
    s = np.concatenate([-mag[::-1], mag])
    general = spec.mode == GENERAL
    q = spec.q if general else 1.0
    zero = lambda v: np.zeros_like(v, dtype=float)  # noqa: E731
    f0 = spec.f0 or zero
    f1 = spec.f1 or zero
    checks = []

    # Lipschitz bound on f0: random pairs plus neighbouring samples
    s1 = np.concatenate([s[:-1], rng.choice(s, samples)])
    s2 = np.concatenate([s[1:], rng.choice(s, samples)])
    keep = s1 != s2
    s1, s2 = s1[keep], s2[keep]
    lhs = np.abs(_finite(f0(s2), "f0") - _finite(f0(s1), "f0"))
    checks.append(_check("f0 Lipschitz with constant L", lhs, spec.L * np.abs(s2 - s1), (s1, s2), len(s1)))

    fs = _finite(f0(s), "f0") + _finite(f1(s), "f1")
    alpha = spec.alpha if general else 0.0
    checks.append(
        _check(
            "s f(s) <= sigma s^2 - alpha |s|^(2q)",
            s * fs,
            spec.sigma * s**2 - alpha * np.abs(s) ** (2 * q),
            (s,),
            len(s),
        )
    )
    f1s = _finite(f1(s), "f1")
    checks.append(
        _check("|f1(s)| <= zeta |s|^(2q-1)", np.abs(f1s), spec.zeta * np.abs(s) ** (2 * q - 1), (s,), len(s), applicable=general)
    )
    hstep = 1e-6 * np.maximum(np.abs(s), 1.0)
    df1 = (_finite(f1(s + hstep), "f1") - _finite(f1(s - hstep), "f1")) / (2 * hstep)
    checks.append(
        _check(
            "|f1'(s)| <= c0 (1 + |s|^(2q-2))",
            np.abs(df1),
            spec.c0 * (1 + np.abs(s) ** (2 * q - 2)),
            (s,),
            len(s),
            applicable=general,
            rtol=1e-5,
        )
    )
    checks.append(
        _check("f1'(s) < 0 for s != 0", df1, np.zeros_like(df1), (s,), len(s), applicable=general, informational=True, rtol=0.0)
    )

    # X on random directions and log-spaced magnitudes
    Xf = spec.X or (lambda x: np.zeros_like(x))
    dirs = rng.standard_normal((samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = np.exp(rng.uniform(np.log(s_range[0]), np.log(s_range[1]), samples))
    xs = dirs * r[:, None]
    Xv = _finite(np.array([Xf(x) for x in xs]).reshape(samples, n), "X")
    Xn = np.linalg.norm(Xv, axis=1)
    delta2 = spec.delta2 if general else 0.0
    checks.append(
        _check("|X(x)| <= delta2 |x|^(2q-1)", Xn, delta2 * r ** (2 * q - 1), (xs,), samples)
    )
    xPX = np.einsum("ia,ab,ib->i", xs, P, Xv)
    checks.append(
        _check(
            "x^T P X(x) <= -delta1 |x|^(2q)",
            xPX,
            -spec.delta1 * r ** (2 * q),
            (xs,),
            samples,
            applicable=general,
        )
    )
    return AuditReport(tuple(checks))


# ---------------------------------------------------------------------------
# scalar multiple scan


@dataclass(frozen=True)
class ScanRow:
    p: float
    certificate: Optional[Certificate]
    error: Optional[str] = None

    @property
    def feasible(self) -> bool:
        return self.certificate is not None and self.certificate.feasible


@dataclass(frozen=True)
class ScanResult:
    rows: tuple[ScanRow, ...]
    best: Optional[ScanRow]

    @property
    def feasible_anywhere(self) -> bool:
        return self.best is not None


def scan_scalar_P(
    problem: CouplingProblem,
    spec: NonlinearitySpec,
    grid_p: Sequence[float],
    map_fn=map,
) -> ScanResult:
    """Certify P = p I for each ``p`` and keep the feasible one with the largest lambda_min(Xi)."""
    grid_p = list(grid_p)
    if not grid_p:
        raise ConfigurationError("empty P grid")
    if any(not p > 0 for p in grid_p):
        raise ConfigurationError("P multiples must be positive")
    eye = np.eye(problem.n)

    def one(p):
        try:
            cert = certify(replace(problem, P=p * eye), spec)
            return ScanRow(float(p), cert)
        except (SingularProblemError, StaleSolutionError, NoRootError) as exc:
            return ScanRow(float(p), None, str(exc))

    rows = tuple(map_fn(one, grid_p))
    feasible = [r for r in rows if r.feasible]
    best = max(feasible, key=lambda r: r.certificate.lambda_min_Xi) if feasible else None
    return ScanResult(rows, best)
