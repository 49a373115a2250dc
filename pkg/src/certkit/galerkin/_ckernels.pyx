# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Galerkin time loop; mirrors ``_pykernels.run`` step for step."""

import numpy as np
from libc.math cimport sin, pow, fabs, sqrt
from scipy.linalg.cython_blas cimport dgemv

from ._pykernels import phi_coefficients

cdef enum:
    ETDRK2 = 0
    F_POLY = 0
    F_SINE = 1
    X_POWER = 1

cdef double BLOWUP2 = 1e24


cdef inline double _f(int kind, const double[::1] p, double s) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc
    if kind == F_POLY:
        acc = 0.0
        for i in range(p.shape[0] - 1, -1, -1):
            acc = acc * s + p[i]
        return acc
    if kind == F_SINE:
        return p[0] * sin(p[1] * s)
    if p[2] == 2.0:
        return p[0] * s - p[1] * s * s * s
    return p[0] * s - p[1] * pow(fabs(s), 2.0 * p[2] - 2.0) * s


cdef void _nonlin(
    const double[::1] u, const double[::1] x, Py_ssize_t k,
    const double[:, ::1] Phi, const double[:, ::1] Proj,
    const double[::1] h1g, const double[::1] h2g,
    const double[::1] h1hat, const double[::1] h2hat,
    const double[:, ::1] Bhat, const double[:, ::1] Dhat,
    const double[::1] Dh1, const double[::1] Dh2, const double[:, ::1] C,
    const double[::1] d1, const double[::1] d2,
    const double[::1] d1dot, const double[::1] d2dot,
    int fkind, const double[::1] fp, int xkind, const double[::1] xp,
    double[::1] grid_buf, double[::1] nu, double[::1] nx, double[::1] nw,
) noexcept nogil:
    cdef Py_ssize_t m = Phi.shape[0], N = Phi.shape[1], n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, a1 = d1[k], a2 = d2[k], b1 = d1dot[k], b2 = d2dot[k], r2, scale
    # row-major m x N is column-major N x m, hence trans = 'T'
    cdef char trans = b'T'
    cdef int im = <int>m, iN = <int>N, inc = 1
    cdef double one = 1.0

    for i in range(m):
        grid_buf[i] = a1 * h1g[i] + a2 * h2g[i]
    dgemv(&trans, &iN, &im, &one, <double*>&Phi[0, 0], &iN, <double*>&u[0], &inc, &one, &grid_buf[0], &inc)
    for i in range(m):
        grid_buf[i] = _f(fkind, fp, grid_buf[i])
    for j in range(N):
        nw[j] = -(b1 * h1hat[j] + b2 * h2hat[j])
        acc = nw[j]
        for i in range(n):
            acc = acc + Bhat[j, i] * x[i]
        nu[j] = acc
    dgemv(&trans, &im, &iN, &one, <double*>&Proj[0, 0], &im, &grid_buf[0], &inc, &one, &nu[0], &inc)

    scale = 0.0
    if xkind == X_POWER:
        r2 = 0.0
        for i in range(n):
            r2 = r2 + x[i] * x[i]
        if xp[1] == 2.0:
            scale = -xp[0] * r2
        else:
            scale = -xp[0] * pow(sqrt(r2), 2.0 * xp[1] - 2.0)
    for i in range(n):
        acc = scale * x[i] + a1 * Dh1[i] + a2 * Dh2[i]
        for j in range(n):
            acc = acc + C[i, j] * x[j]
        for j in range(N):
            acc = acc + Dhat[i, j] * u[j]
        nx[i] = acc


def run(int scheme, double dt, Py_ssize_t nsteps, Py_ssize_t rec_every,
        u0, w0, x0, dict ops, forcing, fcode, xcode):
    cdef const double[:, ::1] Phi = np.ascontiguousarray(ops["Phi"], dtype=float)
    cdef const double[:, ::1] Proj = np.ascontiguousarray(ops["Proj"], dtype=float)
    cdef const double[::1] h1g = np.ascontiguousarray(ops["h1g"], dtype=float)
    cdef const double[::1] h2g = np.ascontiguousarray(ops["h2g"], dtype=float)
    cdef const double[::1] h1hat = np.ascontiguousarray(ops["h1hat"], dtype=float)
    cdef const double[::1] h2hat = np.ascontiguousarray(ops["h2hat"], dtype=float)
    cdef const double[:, ::1] Bhat = np.ascontiguousarray(ops["Bhat"], dtype=float)
    cdef const double[:, ::1] Dhat = np.ascontiguousarray(ops["Dhat"], dtype=float)
    cdef const double[::1] Dh1 = np.ascontiguousarray(ops["Dh1"], dtype=float)
    cdef const double[::1] Dh2 = np.ascontiguousarray(ops["Dh2"], dtype=float)
    cdef const double[:, ::1] C = np.ascontiguousarray(ops["C"], dtype=float)
    mu_arr = np.ascontiguousarray(ops["mu"], dtype=float)
    cdef const double[::1] mu = mu_arr
    cdef const double[::1] d1 = np.ascontiguousarray(forcing[0], dtype=float)
    cdef const double[::1] d2 = np.ascontiguousarray(forcing[1], dtype=float)
    cdef const double[::1] d1dot = np.ascontiguousarray(forcing[2], dtype=float)
    cdef const double[::1] d2dot = np.ascontiguousarray(forcing[3], dtype=float)
    cdef int fkind = fcode[0]
    cdef const double[::1] fp = np.ascontiguousarray(fcode[1], dtype=float).reshape(-1)
    cdef int xkind = xcode[0]
    cdef const double[::1] xp = np.ascontiguousarray(xcode[1], dtype=float).reshape(-1)

    P1a, P2a = phi_coefficients(mu_arr, dt)
    cdef const double[::1] E = np.exp(mu_arr * dt)
    cdef const double[::1] P1 = np.ascontiguousarray(P1a)
    cdef const double[::1] P2 = np.ascontiguousarray(P2a)

    cdef Py_ssize_t N = Phi.shape[1], n = C.shape[0], m = Phi.shape[0]
    cdef double[::1] u = np.array(u0, dtype=float)
    cdef double[::1] w = np.array(w0, dtype=float)
    cdef double[::1] x = np.array(x0, dtype=float)
    cdef double[::1] ua = np.empty(N), wa = np.empty(N), xa = np.empty(n)
    cdef double[::1] nu0 = np.empty(N), nu1 = np.empty(N), nw0 = np.empty(N), nw1 = np.empty(N)
    cdef double[::1] nx0 = np.empty(n), nx1 = np.empty(n)
    cdef double[::1] gbuf = np.empty(m)

    cdef Py_ssize_t nrec = nsteps // rec_every + 1
    U_arr = np.empty((nrec, N))
    W_arr = np.empty((nrec, N))
    X_arr = np.empty((nrec, n))
    cdef double[:, ::1] U = U_arr, W = W_arr, Xs = X_arr
    cdef Py_ssize_t k, j, r = 1
    cdef double size
    cdef int status = 0
    cdef Py_ssize_t fail = nsteps

    U[0, :] = u
    W[0, :] = w
    Xs[0, :] = x
    with nogil:
        for k in range(nsteps):
            _nonlin(u, x, k, Phi, Proj, h1g, h2g, h1hat, h2hat, Bhat, Dhat, Dh1, Dh2, C,
                    d1, d2, d1dot, d2dot, fkind, fp, xkind, xp, gbuf, nu0, nx0, nw0)
            if scheme == ETDRK2:
                for j in range(N):
                    ua[j] = E[j] * u[j] + P1[j] * nu0[j]
                    wa[j] = E[j] * w[j] + P1[j] * nw0[j]
                for j in range(n):
                    xa[j] = x[j] + dt * nx0[j]
                _nonlin(ua, xa, k + 1, Phi, Proj, h1g, h2g, h1hat, h2hat, Bhat, Dhat, Dh1, Dh2, C,
                        d1, d2, d1dot, d2dot, fkind, fp, xkind, xp, gbuf, nu1, nx1, nw1)
                for j in range(N):
                    u[j] = ua[j] + P2[j] * (nu1[j] - nu0[j])
                    w[j] = wa[j] + P2[j] * (nw1[j] - nw0[j])
                for j in range(n):
                    x[j] = xa[j] + 0.5 * dt * (nx1[j] - nx0[j])
            else:
                for j in range(N):
                    u[j] = (u[j] + dt * nu0[j]) / (1.0 - dt * mu[j])
                    w[j] = (w[j] + dt * nw0[j]) / (1.0 - dt * mu[j])
                for j in range(n):
                    x[j] = x[j] + dt * nx0[j]
            size = 0.0
            for j in range(N):
                size = size + u[j] * u[j] + w[j] * w[j]
            for j in range(n):
                size = size + x[j] * x[j]
            if not size <= BLOWUP2:
                status = 1
                fail = k + 1
                break
            if (k + 1) % rec_every == 0:
                U[r, :] = u
                W[r, :] = w
                Xs[r, :] = x
                r = r + 1
    if status:
        return status, fail, U_arr[:r], W_arr[:r], X_arr[:r]
    return status, fail, U_arr, W_arr, X_arr
