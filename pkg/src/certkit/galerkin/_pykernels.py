"""Reference numpy implementation of the Galerkin time loop.

The compiled module ``_ckernels`` implements the same ``run`` signature; this
one is used when the extension is missing, when ``CERTKIT_BACKEND=python`` is
set, or when ``f``/``X`` are arbitrary Python callables without a kernel code.

State: ``u`` sine coefficients of the lifted PDE state, ``w`` sine
coefficients of the lifted heat extension, ``x`` the ODE state.
"""

import numpy as np

from ..functions import F_POLY, F_POWER, F_SINE, X_POWER, X_ZERO

ETDRK2, IMEX_EULER = 0, 1
BLOWUP = 1e12


def scalar_from_code(kind, params):
    params = tuple(params)
    if kind == F_POLY:
        if not params:
            return lambda s: np.zeros_like(s)
        return lambda s: np.polynomial.polynomial.polyval(s, params)
    if kind == F_SINE:
        amp, w = params
        return lambda s: amp * np.sin(w * s)
    if kind == F_POWER:
        sigma, alpha, q = params
        if q == 2.0:
            return lambda s: sigma * s - alpha * s * s * s
        return lambda s: sigma * s - alpha * np.abs(s) ** (2 * q - 2) * s
    raise ValueError(f"unknown nonlinearity code {kind}")


def vector_from_code(kind, params):
    if kind == X_ZERO:
        return lambda x: np.zeros_like(x)
    if kind == X_POWER:
        delta, q = params
        return lambda x: -delta * np.sqrt(x @ x) ** (2 * q - 2) * x
    raise ValueError(f"unknown vector field code {kind}")


def run(scheme, dt, nsteps, rec_every, u0, w0, x0, ops, forcing, f, X):
    """Advance the Galerkin system ``nsteps`` steps of size ``dt``.

    ``ops`` is the dict of assembled operators (see ``GalerkinOperator``),
    ``forcing`` holds ``d1, d2, d1dot, d2dot`` sampled at ``t_k = k dt``.
    Returns ``(status, fail_step, U, W, Xs)`` with status 0 on success and 1
    on blow-up; records are taken every ``rec_every`` steps starting at 0.
    """
    Phi, Proj = ops["Phi"], ops["Proj"]
    h1g, h2g, h1hat, h2hat = ops["h1g"], ops["h2g"], ops["h1hat"], ops["h2hat"]
    Bhat, Dhat, Dh1, Dh2, C = ops["Bhat"], ops["Dhat"], ops["Dh1"], ops["Dh2"], ops["C"]
    mu = ops["mu"]
    d1, d2, d1dot, d2dot = forcing

    E = np.exp(mu * dt)
    P1, P2 = phi_coefficients(mu, dt)
    denom = 1.0 - dt * mu

    u = np.array(u0, dtype=float)
    w = np.array(w0, dtype=float)
    x = np.array(x0, dtype=float)
    nrec = nsteps // rec_every + 1
    U = np.empty((nrec, u.size))
    W = np.empty((nrec, u.size))
    Xs = np.empty((nrec, x.size))
    U[0], W[0], Xs[0] = u, w, x

    def nonlin(u, x, k):
        ug = Phi @ u + d1[k] * h1g + d2[k] * h2g
        nw = -(d1dot[k] * h1hat + d2dot[k] * h2hat)
        nu = Proj @ f(ug) + Bhat @ x + nw
        nx = C @ x + X(x) + Dhat @ u + d1[k] * Dh1 + d2[k] * Dh2
        return nu, nx, nw

    r = 1
    for k in range(nsteps):
        nu0, nx0, nw0 = nonlin(u, x, k)
        if scheme == ETDRK2:
            ua = E * u + P1 * nu0
            xa = x + dt * nx0
            wa = E * w + P1 * nw0
            nu1, nx1, nw1 = nonlin(ua, xa, k + 1)
            u = ua + P2 * (nu1 - nu0)
            x = xa + 0.5 * dt * (nx1 - nx0)
            w = wa + P2 * (nw1 - nw0)
        else:
            u = (u + dt * nu0) / denom
            x = x + dt * nx0
            w = (w + dt * nw0) / denom
        size = u @ u + x @ x + w @ w
        if not size <= BLOWUP * BLOWUP:
            return 1, k + 1, U[:r], W[:r], Xs[:r]
        if (k + 1) % rec_every == 0:
            U[r], W[r], Xs[r] = u, w, x
            r += 1
    return 0, nsteps, U, W, Xs


def phi_coefficients(mu, dt):
    """dt * phi1(mu dt) and dt * phi2(mu dt) with a series branch near zero.

    phi1(z) = (e^z - 1) / z,  phi2(z) = (e^z - 1 - z) / z^2.
    """
    z = np.asarray(mu, dtype=float) * dt
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    p1 = np.where(small, 1 + z / 2 + z * z / 6, np.expm1(zs) / zs)
    p2 = np.where(small, 0.5 + z / 6 + z * z / 24, (np.expm1(zs) - zs) / (zs * zs))
    return dt * p1, dt * p2
