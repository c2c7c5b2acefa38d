"""Finite-difference reference solver for -d^2/dy^2 + V(y) with a quartic V."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .coefficients import PotentialPoly
from .errors import GridTooNarrowError
from .spectra import Spectrum

MARGIN = 50.0


@dataclass(frozen=True)
class Grid:
    y_min: float = -12.0
    y_max: float = 12.0
    step: float = 0.005

    def __post_init__(self):
        if not self.y_max > self.y_min:
            raise ValueError("y_max must exceed y_min")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.points < 100:
            raise ValueError(f"grid has {self.points} interior points, at least 100 needed")

    @property
    def points(self) -> int:
        """Number of interior points (the Dirichlet end points are excluded)."""
        return int(round((self.y_max - self.y_min) / self.step)) - 1

    def nodes(self) -> np.ndarray:
        return self.y_min + self.step * np.arange(1, self.points + 1)

    def widened(self, factor: float = 1.5) -> "Grid":
        mid = 0.5 * (self.y_min + self.y_max)
        half = 0.5 * (self.y_max - self.y_min) * factor
        return Grid(mid - half, mid + half, self.step)

    def refined(self) -> "Grid":
        return Grid(self.y_min, self.y_max, self.step / 2)


def _potential_minimum(pp: PotentialPoly) -> float:
    # stationary points of a4 y^4 + a2 y^2 + a1 y + a0
    roots = np.roots([4 * pp.a4, 0.0, 2 * pp.a2, pp.a1])
    real = roots[np.abs(roots.imag) < 1e-9].real
    return float(np.min(pp(real)))


def margin_ok(pp: PotentialPoly, grid: Grid, margin: float = MARGIN) -> bool:
    vmin = _potential_minimum(pp)
    return bool(min(pp(grid.y_min), pp(grid.y_max)) >= vmin + margin)


def _fd_levels(pp: PotentialPoly, grid: Grid, k: int) -> np.ndarray:
    y = grid.nodes()
    h2 = grid.step ** 2
    diag = 2.0 / h2 + pp(y)
    off = np.full(len(y) - 1, -1.0 / h2)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1), eigvals_only=True)


def fd_doublewell_spectrum(pp: PotentialPoly, grid: Grid | None = None, k: int = 5,
                           widen: int = 3) -> Spectrum:
    """Lowest ``k`` Dirichlet levels of the second-order central-difference operator.

    The box is widened by 1.5x up to ``widen`` times until the potential at the
    walls exceeds its minimum by 50. Error estimates compare with the doubled
    step: |E(h) - E(2h)| / 3.
    """
    if not (pp.a4 > 0 or (pp.a4 == 0 and pp.a2 > 0)):
        raise ValueError("potential must be confining (a4 > 0, or a4 = 0 with a2 > 0)")
    grid = grid or Grid()
    tries = 0
    while not margin_ok(pp, grid):
        if tries == widen:
            raise GridTooNarrowError(
                f"grid [{grid.y_min:g}, {grid.y_max:g}] too narrow for t={pp.t!r}: "
                f"potential at the walls is within {MARGIN:g} of its minimum")
        grid = grid.widened()
        tries += 1
    fine = _fd_levels(pp, grid, k)
    coarse = _fd_levels(pp, Grid(grid.y_min, grid.y_max, 2 * grid.step), k)
    err = np.abs(fine - coarse) / 3.0
    return Spectrum(fine.astype(complex), None, k, err, label=f"gridref(step={grid.step:g})", t=pp.t)


def richardson(pp: PotentialPoly, grid: Grid | None = None, k: int = 5) -> np.ndarray:
    """Step-halving extrapolation (4 E(h/2) - E(h)) / 3."""
    grid = grid or Grid()
    a = fd_doublewell_spectrum(pp, grid, k).levels.real
    b = fd_doublewell_spectrum(pp, grid.refined(), k).levels.real
    return (4 * b - a) / 3
