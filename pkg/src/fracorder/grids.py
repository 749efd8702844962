"""Uniform space and time grids for the 1-D solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on (0, L) with M intervals and M - 1 interior nodes."""

    L: float
    M: int

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ValueError(f"domain length must be positive, got {self.L}")
        if self.M < 2:
            raise ValueError(f"need at least 2 intervals, got {self.M}")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.M + 1)

    @property
    def interior_count(self) -> int:
        return self.M - 1

    def nearest_node(self, x0: float) -> int:
        """Index of the grid node nearest to x0.

        x0 must lie within half a spacing of a node; there is no
        interpolation between nodes.
        """
        if not 0.0 < x0 < self.L:
            raise ValueError(f"observation point {x0} outside (0, {self.L})")
        m0 = int(round(x0 / self.h))
        # round() guarantees |x0 - m0*h| <= h/2; the slack covers ties.
        if abs(x0 - m0 * self.h) > 0.5 * self.h * (1.0 + 1e-12):
            raise ValueError(f"no grid node within h/2 of x0 = {x0}")
        return m0


@dataclass(frozen=True)
class TimeGrid:
    """Equidistant partition 0 = t_0 < t_1 < ... < t_N = T."""

    T: float
    N: int

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"time horizon must be positive, got {self.T}")
        if self.N < 1:
            raise ValueError(f"need at least 1 time step, got {self.N}")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)
