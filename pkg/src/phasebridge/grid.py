"""Uniform cell-centered grids on the periodic phase-space square.

The phase-space domain is the 2-torus: x in [0, 2*pi) and v in [-pi, pi),
both with periodic wrap.  Everything here is geometric bookkeeping; grids
are immutable and all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi
X_LO, X_HI = 0.0, TWO_PI
V_LO, V_HI = -math.pi, math.pi


class NonFiniteError(ValueError):
    """Array values are NaN or infinite."""


def wrap_x(x):
    """Reduce x to the canonical interval [0, 2*pi), elementwise.

    Accepts scalars or arrays.  Raises ValueError on non-finite input.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("wrap_x: input must be finite")
    out = np.mod(x, TWO_PI)
    # np.mod can return the period itself when x is a tiny negative number.
    out = np.where(out >= TWO_PI, out - TWO_PI, out)
    if out.ndim == 0:
        return float(out)
    return out


def wrap_v(v):
    """Reduce v to the canonical interval [-pi, pi), elementwise."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("wrap_v: input must be finite")
    out = np.mod(v + math.pi, TWO_PI) - math.pi
    out = np.where(out >= math.pi, out - math.pi - math.pi, out)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform cell-centered grid with nx cells in x and nv cells in v.

    Cell centers sit at (i + 1/2)*dx in x and -pi + (j + 1/2)*dv in v.
    """

    nx: int
    nv: int

    def __post_init__(self) -> None:
        if self.nx <= 0 or self.nv <= 0:
            raise ValueError("PhaseGrid: nx and nv must be positive")

    @property
    def dx(self) -> float:
        return TWO_PI / self.nx

    @property
    def dv(self) -> float:
        return TWO_PI / self.nv

    @property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def v_centers(self) -> np.ndarray:
        return V_LO + (np.arange(self.nv) + 0.5) * self.dv

    @property
    def x_faces(self) -> np.ndarray:
        # length nx + 1; faces 0 and nx are identified by periodicity
        return np.arange(self.nx + 1) * self.dx

    @property
    def v_faces(self) -> np.ndarray:
        return V_LO + np.arange(self.nv + 1) * self.dv

    @property
    def cell_area(self) -> float:
        return self.dx * self.dv


def cell_centers(grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    """Return (x-centers, v-centers) as strictly increasing arrays."""
    return grid.x_centers, grid.v_centers


@dataclass(frozen=True)
class DensityArray:
    """Cell-averaged density values on a PhaseGrid.

    Row index runs over x, column index over v.  Values must be finite;
    positivity is monitored by diagnostics, never enforced here.
    """

    grid: PhaseGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.nx, self.grid.nv):
            raise ValueError(
                f"DensityArray: values shape {values.shape} does not match "
                f"grid ({self.grid.nx}, {self.grid.nv})"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("DensityArray: values must be finite")
        object.__setattr__(self, "values", values)

    def min(self) -> float:
        return float(self.values.min())


def fixed_order_sum(values: np.ndarray) -> float:
    """Exactly rounded sum of the row-major flattened array.

    math.fsum is compensated and order-independent up to the final rounding,
    which makes every integral here bit-reproducible regardless of how the
    caller parallelizes the surrounding work.
    """
    return math.fsum(np.ascontiguousarray(values, dtype=float).ravel())


def integrate(arr: DensityArray) -> float:
    """Midpoint-rule integral of the density over the phase-space square."""
    return fixed_order_sum(arr.values) * arr.grid.cell_area
