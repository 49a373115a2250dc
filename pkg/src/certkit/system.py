"""Linear data of the cascade: diffusion ``a``, length ``l``, ``C``, ``B(z)``, ``D(z)``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .gridfn import DEFAULT_NODES, Grid, SampledFn
from .green_bvp import CouplingProblem


@dataclass(frozen=True)
class CascadeSystem:
    """``u_t = a^2 u_zz + f(u) + B(z)^T x``, ``x' = C x + X(x) + int D u dz`` on [0, l].

    ``B`` and ``D`` are callables mapping an array of ``z`` to ``len(z) x n``.
    """

    a: float
    l: float
    C: np.ndarray
    B: Callable[[np.ndarray], np.ndarray]
    D: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if C.shape[0] != C.shape[1]:
            raise DomainError(f"C must be square, got {C.shape}")
        if not (self.a > 0 and self.l > 0):
            raise DomainError("a and l must be positive")
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def sample_B(self, grid: Grid) -> SampledFn:
        return SampledFn(grid, np.reshape(self.B(grid.nodes), (grid.m, self.n)))

    def sample_D(self, grid: Grid) -> SampledFn:
        return SampledFn(grid, np.reshape(self.D(grid.nodes), (grid.m, self.n)))

    def coupling_problem(self, P, m: int = DEFAULT_NODES) -> CouplingProblem:
        grid = Grid(self.l, m)
        return CouplingProblem(self.a, self.C, P, self.sample_B(grid), self.sample_D(grid))
