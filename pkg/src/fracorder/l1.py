"""Quadrature weights for the piecewise-linear (L1) time discretization
of Caputo-type fractional derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import TimeGrid


@dataclass(frozen=True)
class L1Weights:
    """Weights b_j = (j+1)^(1-alpha) - j^(1-alpha) and scale
    d = tau^(-alpha) / Gamma(2 - alpha) for one fractional order."""

    alpha: float
    b: np.ndarray
    scale: float


def l1_weights(alpha: float, time: TimeGrid) -> L1Weights:
    """Weights for order alpha on the given time grid.

    b_0 equals 1 exactly and the sequence decreases strictly to 0.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"fractional order must lie in (0, 1), got {alpha}")
    j = np.arange(time.N, dtype=float)
    b = (j + 1.0) ** (1.0 - alpha) - j ** (1.0 - alpha)
    scale = time.tau ** (-alpha) / math.gamma(2.0 - alpha)
    return L1Weights(alpha=alpha, b=b, scale=scale)
