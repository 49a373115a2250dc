"""Sampled functions on a uniform grid over [0, l] and composite Simpson quadrature.

Every integral in the package (L^p norms, inner products, Galerkin projections,
Green's-function quadrature) goes through the weights built here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError

DEFAULT_NODES = 401


def simpson_weights(k: int, h: float) -> np.ndarray:
    """Quadrature weights for ``k`` equispaced samples with spacing ``h``.

    Odd ``k`` gives composite Simpson. Even ``k >= 4`` uses Simpson on the first
    ``k - 4`` intervals and the 3/8 rule on the last three, which keeps the
    fourth-order accuracy. ``k == 2`` falls back to the trapezoid rule.
    """
    if k < 1:
        raise ConfigurationError("need at least one sample")
    w = np.zeros(k)
    if k == 1:
        return w
    if k == 2:
        w[:] = h / 2.0
        return w
    if k % 2 == 1:
        w[0:k:2] = 2.0
        w[1:k:2] = 4.0
        w[0] = w[-1] = 1.0
        return w * (h / 3.0)
    s = k - 3  # samples covered by the Simpson part
    if s >= 3:
        w[:s] = simpson_weights(s, h)
    w[s - 1 :] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    return w


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``m`` nodes on [0, l]; ``m`` must be odd."""

    l: float
    m: int = DEFAULT_NODES

    def __post_init__(self):
        if not (np.isfinite(self.l) and self.l > 0):
            raise ConfigurationError(f"interval length must be positive, got {self.l}")
        if int(self.m) != self.m or self.m < 3 or self.m % 2 == 0:
            raise ConfigurationError(f"grid needs an odd node count >= 3, got {self.m}")

    @cached_property
    def nodes(self) -> np.ndarray:
        z = np.linspace(0.0, self.l, self.m)
        z.setflags(write=False)
        return z

    @property
    def h(self) -> float:
        return self.l / (self.m - 1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = simpson_weights(self.m, self.h)
        w.setflags(write=False)
        return w

    def refine(self) -> "Grid":
        """Grid with halved spacing (``m -> 2m - 1``)."""
        return Grid(self.l, 2 * self.m - 1)

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "SampledFn":
        return SampledFn(self, fn(self.nodes))


@dataclass(frozen=True)
class SampledFn:
    """Values of a (possibly vector-valued) function at the nodes of ``grid``.

    ``values`` is stored as an ``m x k`` array; 1-D input is promoted to one
    component.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.m:
            raise DomainError(
                f"expected {self.grid.m} rows of samples, got shape {np.shape(self.values)}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("sampled function contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def components(self) -> int:
        return self.values.shape[1]

    def pointwise_norm(self) -> np.ndarray:
        """Euclidean norm of the value vector at every node."""
        if self.components == 1:
            return np.abs(self.values[:, 0])
        return np.linalg.norm(self.values, axis=1)

    def __add__(self, other: "SampledFn") -> "SampledFn":
        _check_same_grid(self, other)
        return SampledFn(self.grid, self.values + other.values)

    def __sub__(self, other: "SampledFn") -> "SampledFn":
        _check_same_grid(self, other)
        return SampledFn(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "SampledFn":
        return SampledFn(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


def _check_same_grid(f: SampledFn, g: SampledFn) -> None:
    if f.grid != g.grid:
        raise DomainError("sampled functions live on different grids")


def cumulative_integral(values: np.ndarray, h: float) -> np.ndarray:
    """Running integral from the first node, exact for cubics.

    Each interval uses the 4-point interpolant through its neighbours
    (one-sided at the ends), so the local error is O(h^5) with a smooth
    coefficient. ``values`` may carry trailing component axes.
    """
    y = np.asarray(values, dtype=float)
    k = y.shape[0]
    if k < 2:
        raise ConfigurationError("cumulative integral needs at least 2 samples")
    if k == 2:
        seg = 0.5 * h * (y[0] + y[1])[None]
    elif k == 3:
        seg = h / 12.0 * np.stack([5 * y[0] + 8 * y[1] - y[2], -y[0] + 8 * y[1] + 5 * y[2]])
    else:
        seg = np.empty((k - 1,) + y.shape[1:])
        seg[1:-1] = h / 24.0 * (-y[:-3] + 13 * y[1:-2] + 13 * y[2:-1] - y[3:])
        seg[0] = h / 24.0 * (9 * y[0] + 19 * y[1] - 5 * y[2] + y[3])
        seg[-1] = h / 24.0 * (9 * y[-1] + 19 * y[-2] - 5 * y[-3] + y[-4])
    out = np.zeros_like(y)
    out[1:] = np.cumsum(seg, axis=0)
    return out


def integrate(f: SampledFn) -> float:
    """Composite Simpson approximation of the integral of a scalar function."""
    if f.components != 1:
        raise DomainError("integrate() expects a scalar-valued function")
    return float(f.grid.weights @ f.values[:, 0])


def lp_norm(f: SampledFn, p: float = 2) -> float:
    """L^p norm over [0, l] of the pointwise euclidean norm of ``f``.

    ``p`` may be any real ``>= 1`` or ``np.inf``.
    """
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ConfigurationError(f"unsupported norm order {p!r}") from None
    if np.isnan(p) or p < 1:
        raise ConfigurationError(f"unsupported norm order {p!r}")
    r = f.pointwise_norm()
    if np.isinf(p):
        return float(r.max())
    if p == 2:
        return float(np.sqrt(max(f.grid.weights @ (r * r), 0.0)))
    if p == 1:
        return float(f.grid.weights @ r)
    return float((f.grid.weights @ r**p) ** (1.0 / p))


def inner(f: SampledFn, g: SampledFn) -> float:
    """L^2 inner product summed over components."""
    _check_same_grid(f, g)
    if f.components != g.components:
        raise DomainError(
            f"component mismatch in inner product: {f.components} vs {g.components}"
        )
    return float(f.grid.weights @ np.einsum("ik,ik->i", f.values, g.values))
