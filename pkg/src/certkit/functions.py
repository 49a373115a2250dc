"""Built-in function library used by configs and the simulator.

Three families:

* spatial functions z -> R^n (B, D, initial profile), returned as callables
  producing an ``len(z) x n`` array;
* scalar nonlinearities f = f0 + f1 and vector fields X, which also carry a
  ``kernel`` code so the compiled time stepper can evaluate them without
  calling back into Python;
* disturbance signals t -> R with derivatives.

Anything else is supplied as a CSV sample file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError

# kernel codes shared with the compiled stepper
F_POLY, F_SINE, F_POWER = 0, 1, 2
X_ZERO, X_POWER = 0, 1


# ---------------------------------------------------------------------------
# spatial functions


def _as_components(value) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=float))


def _load_table(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"sample file not found: {path}")
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise ConfigurationError(f"{path}: need a coordinate column and at least one value column")
    return data


def spatial(kind: str, l: float = 1.0, **params) -> Callable[[np.ndarray], np.ndarray]:
    """Callable z -> array of shape (len(z), n) for a named spatial profile."""
    if kind == "zero":
        n = int(params.get("components", 1))
        return lambda z: np.zeros((np.size(z), n))
    if kind == "constant":
        v = _as_components(params["value"])
        return lambda z: np.broadcast_to(v, (np.size(z), v.size)).copy()
    if kind == "linear":
        v0 = _as_components(params["value"])
        v1 = _as_components(params["slope"])
        return lambda z: v0 + np.outer(np.ravel(z), v1)
    if kind == "polynomial":
        coeffs = [np.asarray(c, dtype=float) for c in params["coeffs"]]
        # coeffs[k] holds ascending coefficients of component k
        return lambda z: np.stack([np.polynomial.polynomial.polyval(np.ravel(z), c) for c in coeffs], axis=1)
    if kind in ("sin", "cos"):
        amp = _as_components(params.get("amplitude", 1.0))
        freq = _as_components(params.get("freq", 1.0)) * np.ones_like(amp)
        trig = np.sin if kind == "sin" else np.cos
        return lambda z: amp * trig(np.outer(np.ravel(z), freq))
    if kind == "sine-mode":
        amp = _as_components(params.get("amplitude", 1.0))
        j = int(params.get("mode", 1))
        return lambda z: np.outer(np.sin(j * math.pi * np.ravel(z) / l), amp)
    if kind == "samples":
        data = _load_table(params["file"])
        spline = CubicSpline(data[:, 0], data[:, 1:], axis=0)
        return lambda z: np.asarray(spline(np.ravel(z))).reshape(np.size(z), -1)
    raise ConfigurationError(f"unknown spatial function kind {kind!r}")


# ---------------------------------------------------------------------------
# nonlinearities


@dataclass(frozen=True)
class ScalarNonlinearity:
    """f = f0 + f1 with an optional compiled-kernel encoding."""

    f0: Callable
    f1: Optional[Callable]
    kernel: Optional[tuple[int, tuple[float, ...]]] = None

    def __call__(self, s):
        out = self.f0(s)
        if self.f1 is not None:
            out = out + self.f1(s)
        return out


@dataclass(frozen=True)
class VectorField:
    fn: Callable
    kernel: Optional[tuple[int, tuple[float, ...]]] = None

    def __call__(self, x):
        return self.fn(x)


def _power_damping_scalar(alpha: float, q: float):
    return lambda s: -alpha * np.abs(s) ** (2 * q - 2) * s


def nonlinearity(kind: str, **params) -> ScalarNonlinearity:
    if kind == "zero":
        return ScalarNonlinearity(lambda s: np.zeros_like(np.asarray(s, dtype=float)), None, (F_POLY, ()))
    if kind == "linear":
        k = float(params["k"])
        return ScalarNonlinearity(lambda s: k * np.asarray(s, dtype=float), None, (F_POLY, (0.0, k)))
    if kind == "sine":
        amp = float(params.get("amplitude", 1.0))
        w = float(params.get("freq", 1.0))
        return ScalarNonlinearity(lambda s: amp * np.sin(w * np.asarray(s, dtype=float)), None, (F_SINE, (amp, w)))
    if kind == "polynomial":
        c = tuple(float(v) for v in params["coeffs"])
        return ScalarNonlinearity(
            lambda s: np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), c), None, (F_POLY, c)
        )
    if kind in ("power-damping", "cubic-damping"):
        sigma = float(params.get("sigma", 0.0))
        alpha = float(params["alpha"])
        q = 2.0 if kind == "cubic-damping" else float(params["q"])
        return ScalarNonlinearity(
            lambda s: sigma * np.asarray(s, dtype=float),
            _power_damping_scalar(alpha, q),
            (F_POWER, (sigma, alpha, q)),
        )
    raise ConfigurationError(f"unknown nonlinearity kind {kind!r}")


def vector_field(kind: str, **params) -> VectorField:
    if kind == "zero":
        return VectorField(lambda x: np.zeros_like(np.asarray(x, dtype=float)), (X_ZERO, ()))
    if kind in ("power-damping", "cubic-damping"):
        delta = float(params["delta"])
        q = 2.0 if kind == "cubic-damping" else float(params["q"])

        def fn(x):
            x = np.asarray(x, dtype=float)
            return -delta * np.linalg.norm(x) ** (2 * q - 2) * x

        return VectorField(fn, (X_POWER, (delta, q)))
    if kind == "linear":
        K = np.atleast_2d(np.asarray(params["matrix"], dtype=float))
        return VectorField(lambda x: K @ np.asarray(x, dtype=float))
    raise ConfigurationError(f"unknown vector field kind {kind!r}")


# ---------------------------------------------------------------------------
# disturbance signals


@dataclass(frozen=True)
class Signal:
    """Scalar signal with derivative, both vectorized over t."""

    value: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t):
        return self.value(t)


ZERO_SIGNAL = Signal(lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                     lambda t: np.zeros_like(np.asarray(t, dtype=float)))


def _base_signal(kind: str, amp: float, params) -> Signal:
    if kind == "zero":
        return ZERO_SIGNAL
    if kind == "constant":
        return Signal(lambda t: amp * np.ones_like(np.asarray(t, dtype=float)),
                      lambda t: np.zeros_like(np.asarray(t, dtype=float)))
    if kind in ("sine", "cosine"):
        w = float(params.get("freq", 1.0))
        ph = float(params.get("phase", 0.0))
        if kind == "sine":
            return Signal(lambda t: amp * np.sin(w * np.asarray(t) + ph),
                          lambda t: amp * w * np.cos(w * np.asarray(t) + ph))
        return Signal(lambda t: amp * np.cos(w * np.asarray(t) + ph),
                      lambda t: -amp * w * np.sin(w * np.asarray(t) + ph))
    if kind == "exp-ramp":
        r = float(params.get("rate", 1.0))
        return Signal(lambda t: amp * -np.expm1(-r * np.asarray(t, dtype=float)),
                      lambda t: amp * r * np.exp(-r * np.asarray(t, dtype=float)))
    if kind == "samples":
        data = _load_table(params["file"])
        spline = CubicSpline(data[:, 0], data[:, 1])
        dspline = spline.derivative()
        scale = amp
        return Signal(lambda t: scale * spline(np.asarray(t, dtype=float)),
                      lambda t: scale * dspline(np.asarray(t, dtype=float)))
    raise ConfigurationError(f"unknown signal kind {kind!r}")


def signal(kind: str, amplitude: float = 1.0, ramp_time: float = 0.0, **params) -> Signal:
    """Named signal, optionally multiplied by the envelope 1 - exp(-t / ramp_time).

    The envelope forces a zero initial value on signals that do not start at 0.
    """
    base = _base_signal(kind, float(amplitude), params)
    if ramp_time <= 0:
        return base
    tr = float(ramp_time)

    def env(t):
        return -np.expm1(-np.asarray(t, dtype=float) / tr)

    def denv(t):
        return np.exp(-np.asarray(t, dtype=float) / tr) / tr

    return Signal(
        lambda t: env(t) * base.value(t),
        lambda t: denv(t) * base.value(t) + env(t) * base.deriv(t),
    )
