"""Kernel selection: compiled extension when importable, numpy otherwise.

``CERTKIT_BACKEND=python`` forces the numpy kernel; ``compiled`` makes a
missing extension an error instead of a silent fallback.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

HAVE_COMPILED = _ckernels is not None


def default_backend() -> str:
    choice = os.environ.get("CERTKIT_BACKEND", "auto").lower()
    if choice == "python":
        return "python"
    if choice == "compiled":
        if not HAVE_COMPILED:
            raise ImportError("CERTKIT_BACKEND=compiled but certkit.galerkin._ckernels is not built")
        return "compiled"
    return "compiled" if HAVE_COMPILED else "python"


def run(scheme, dt, nsteps, rec_every, u0, w0, x0, ops, forcing, f, X, backend=None):
    """Dispatch one time loop; returns ``(status, fail_step, U, W, Xs, backend_used)``."""
    backend = backend or default_backend()
    fcode = getattr(f, "kernel", None)
    xcode = getattr(X, "kernel", None)
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise ImportError("compiled kernel requested but not built")
        if fcode is not None and xcode is not None:
            out = _ckernels.run(scheme, dt, nsteps, rec_every, u0, w0, x0, ops, forcing, fcode, xcode)
            return (*out, "compiled")
        # arbitrary callables cannot run inside the compiled loop
    out = _pykernels.run(scheme, dt, nsteps, rec_every, u0, w0, x0, ops, forcing, f, X)
    return (*out, "python")
