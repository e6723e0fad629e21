"""Uniform periodic grid on the unit torus and the discrete calculus on it.

Cells are indexed 0..n-1 with centers x_i = (i + 1/2)*dx.  Interface i sits
at x = (i+1)*dx, between cells i and i+1 (indices wrap), so cell-centered
fields and interface fields both hold n values.  All operators below are
exact summation-by-parts partners: sum_i a_i div(g)_i dx = -sum_i grad(a)_i
g_i dx up to roundoff, and div_cell telescopes to zero over the torus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [0, 1) with dx = 1/n_cells."""

    n_cells: int

    def __post_init__(self):
        if self.n_cells < 4:
            raise ValueError(f"n_cells must be >= 4, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    def interfaces(self) -> np.ndarray:
        # interface i is the right edge of cell i; the seam maps to x = 0
        return ((np.arange(self.n_cells) + 1) % self.n_cells) * self.dx


def make_grid(n_cells: int) -> GridSpec:
    return GridSpec(int(n_cells))


@dataclass(frozen=True)
class Field:
    """Cell-averaged (or interface-located) scalar field on a GridSpec.

    Values are stored as a read-only float64 copy and must be finite.
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise ValueError(
                f"field length {v.shape} does not match grid with {self.grid.n_cells} cells"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "Field":
        return cls(grid, np.full(grid.n_cells, float(value)))


def grad_interface(f: Field) -> Field:
    """Two-point gradient at interfaces: (f[i+1] - f[i])/dx at interface i."""
    v = f.values
    return Field(f.grid, (np.roll(v, -1) - v) / f.grid.dx)


def div_cell(g: Field) -> Field:
    """Conservative divergence: (g[i] - g[i-1])/dx in cell i."""
    v = g.values
    return Field(g.grid, (v - np.roll(v, 1)) / g.grid.dx)


def integrate(f: Field) -> float:
    """Midpoint quadrature over the torus, exact for trig polynomials of degree < n."""
    return float(np.sum(f.values) * f.grid.dx)


def shift(f: Field, m: int) -> Field:
    """Circular rotation by m cells (shift(delta_0, 1) = delta_1)."""
    return Field(f.grid, np.roll(f.values, m % f.grid.n_cells))
