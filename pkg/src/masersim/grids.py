"""Phase-space grids and finite-difference derivative operators.

Each circuit component lives on a uniform 1-D grid of the dimensionless
phase variable. Junction components are periodic (period 2*pi for the
transmon, 4*pi for the SNAIL); the cavity uses an open grid wide enough
that its low-lying eigenfunctions decay before the edges. Derivatives are
the standard 3-point central stencils; periodic grids get wrap-around
corner entries, open grids simply truncate the stencil at the boundary
(out-of-range neighbors treated as zero).

Operators are stored in banded-plus-corners form and only materialized as
dense or sparse matrices when a solver needs them.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from masersim.errors import ConfigError

_PERIOD_RTOL = 1e-12


@dataclass(frozen=True)
class Periodic:
    """Periodic boundary over the given phase period."""

    period: float


@dataclass(frozen=True)
class Open:
    """Hard-wall truncation: neighbors beyond the edge are dropped."""


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid of the dimensionless phase coordinate.

    Attributes
    ----------
    n_points : int
        Number of grid points, at least 3.
    spacing : float
        Phase step between neighboring points, > 0.
    origin : float
        Phase of the first grid point.
    boundary : Periodic or Open
        Boundary handling for the derivative stencils. For a periodic
        grid, ``n_points * spacing`` must equal the period (point
        n_points would alias point 0).
    """

    n_points: int
    spacing: float
    origin: float
    boundary: Periodic | Open

    def __post_init__(self):
        if self.n_points < 3:
            raise ConfigError(f"grid needs at least 3 points, got {self.n_points}")
        if not self.spacing > 0:
            raise ConfigError(f"grid spacing must be positive, got {self.spacing}")
        if isinstance(self.boundary, Periodic):
            period = self.boundary.period
            if not period > 0:
                raise ConfigError("periodic grid period must be positive")
            if abs(self.n_points * self.spacing - period) > _PERIOD_RTOL * period:
                raise ConfigError(
                    "periodic grid inconsistent: n_points * spacing = "
                    f"{self.n_points * self.spacing!r} but period = {period!r}"
                )

    @classmethod
    def periodic(cls, n_points, period, origin=None):
        """Periodic grid covering [origin, origin + period)."""
        if origin is None:
            origin = -0.5 * period
        return cls(n_points, period / n_points, origin, Periodic(period))

    @classmethod
    def open_centered(cls, n_points, spacing):
        """Open grid of the given spacing, symmetric about phase 0."""
        origin = -0.5 * spacing * (n_points - 1)
        return cls(n_points, spacing, origin, Open())

    @property
    def is_periodic(self):
        return isinstance(self.boundary, Periodic)

    @property
    def points(self):
        return self.origin + self.spacing * np.arange(self.n_points)

    @property
    def width(self):
        """Total phase extent covered by the grid."""
        if self.is_periodic:
            return self.boundary.period
        return self.n_points * self.spacing


@dataclass(frozen=True)
class BandedOperator:
    """Tridiagonal real operator plus the two periodic corner entries.

    ``corner_tr`` is the (0, n-1) entry and ``corner_bl`` the (n-1, 0)
    entry; both are zero for open grids.
    """

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    corner_tr: float = 0.0
    corner_bl: float = 0.0

    def __post_init__(self):
        n = self.diag.shape[0]
        if self.lower.shape != (n - 1,) or self.upper.shape != (n - 1,):
            raise ConfigError("banded operator diagonals have inconsistent lengths")

    @property
    def dimension(self):
        return self.diag.shape[0]

    def matvec(self, v):
        v = np.asarray(v)
        out = self.diag * v
        out[:-1] += self.upper * v[1:]
        out[1:] += self.lower * v[:-1]
        out[0] += self.corner_tr * v[-1]
        out[-1] += self.corner_bl * v[0]
        return out

    def apply(self, vectors):
        """Apply to one vector or to each column of a 2-D array."""
        vectors = np.asarray(vectors)
        if vectors.ndim == 1:
            return self.matvec(vectors)
        out = self.diag[:, None] * vectors
        out[:-1] += self.upper[:, None] * vectors[1:]
        out[1:] += self.lower[:, None] * vectors[:-1]
        out[0] += self.corner_tr * vectors[-1]
        out[-1] += self.corner_bl * vectors[0]
        return out

    def to_dense(self):
        n = self.dimension
        m = np.zeros((n, n))
        np.fill_diagonal(m, self.diag)
        m[np.arange(n - 1), np.arange(1, n)] = self.upper
        m[np.arange(1, n), np.arange(n - 1)] = self.lower
        m[0, -1] += self.corner_tr
        m[-1, 0] += self.corner_bl
        return m

    def to_sparse(self):
        n = self.dimension
        m = sp.diags(
            [self.lower, self.diag, self.upper], offsets=[-1, 0, 1], format="lil"
        )
        if self.corner_tr != 0.0:
            m[0, n - 1] += self.corner_tr
        if self.corner_bl != 0.0:
            m[n - 1, 0] += self.corner_bl
        return m.tocsc()

    def transpose(self):
        return BandedOperator(
            diag=self.diag.copy(),
            lower=self.upper.copy(),
            upper=self.lower.copy(),
            corner_tr=self.corner_bl,
            corner_bl=self.corner_tr,
        )

    def __add__(self, other):
        if not isinstance(other, BandedOperator):
            return NotImplemented
        return BandedOperator(
            self.diag + other.diag,
            self.lower + other.lower,
            self.upper + other.upper,
            self.corner_tr + other.corner_tr,
            self.corner_bl + other.corner_bl,
        )

    def scaled(self, factor):
        return BandedOperator(
            factor * self.diag,
            factor * self.lower,
            factor * self.upper,
            factor * self.corner_tr,
            factor * self.corner_bl,
        )

    def add_diagonal(self, values):
        return BandedOperator(
            self.diag + np.asarray(values, dtype=float),
            self.lower.copy(),
            self.upper.copy(),
            self.corner_tr,
            self.corner_bl,
        )


def build_first_derivative(grid):
    """Central-difference d/dphi: (f(phi+h) - f(phi-h)) / 2h.

    Antisymmetric by construction. On periodic grids the first and last
    rows wrap around (top-right entry -1, bottom-left +1, over 2h).
    """
    n = grid.n_points
    inv = 1.0 / (2.0 * grid.spacing)
    op = BandedOperator(
        diag=np.zeros(n),
        lower=np.full(n - 1, -inv),
        upper=np.full(n - 1, inv),
    )
    if grid.is_periodic:
        op = BandedOperator(op.diag, op.lower, op.upper, corner_tr=-inv, corner_bl=inv)
    return op


def build_second_derivative(grid):
    """3-point Laplacian: (f(phi-h) - 2 f(phi) + f(phi+h)) / h^2.

    Symmetric by construction, with the same boundary handling as the
    first derivative.
    """
    n = grid.n_points
    inv2 = 1.0 / grid.spacing**2
    op = BandedOperator(
        diag=np.full(n, -2.0 * inv2),
        lower=np.full(n - 1, inv2),
        upper=np.full(n - 1, inv2),
    )
    if grid.is_periodic:
        op = BandedOperator(op.diag, op.lower, op.upper, corner_tr=inv2, corner_bl=inv2)
    return op


@dataclass(frozen=True)
class ConvergenceRow:
    """Level-spacing convergence record for one grid size."""

    size: int
    spacings: np.ndarray
    fractional_difference: np.ndarray

    @property
    def max_fractional_difference(self):
        return float(np.max(self.fractional_difference))


def convergence_scan(builder, sizes, n_levels):
    """Compare low-lying level spacings across grid sizes.

    Parameters
    ----------
    builder : callable
        Maps a grid size (int) to either an array of eigenvalues or any
        object with an ``energies`` attribute; must provide at least
        ``n_levels`` levels.
    sizes : sequence of int
        Ascending grid sizes; the last entry is the reference.
    n_levels : int
        Number of levels whose n_levels - 1 spacings are compared.

    Returns
    -------
    list of ConvergenceRow
        One row per size, with spacings and their fractional difference
        relative to the reference-size spacings.
    """
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ConfigError("convergence scan needs at least two sizes")
    if sorted(sizes) != sizes:
        raise ConfigError("convergence scan sizes must be ascending")
    if n_levels < 2:
        raise ConfigError("need at least two levels to form a spacing")

    def spacings_for(size):
        result = builder(size)
        energies = getattr(result, "energies", result)
        energies = np.asarray(energies, dtype=float)
        if energies.shape[0] < n_levels:
            raise ConfigError(
                f"builder returned {energies.shape[0]} levels, need {n_levels}"
            )
        return np.diff(energies[:n_levels])

    reference = spacings_for(sizes[-1])
    rows = []
    for size in sizes[:-1]:
        s = spacings_for(size)
        rows.append(ConvergenceRow(size, s, np.abs(s - reference) / np.abs(reference)))
    rows.append(
        ConvergenceRow(sizes[-1], reference, np.zeros_like(reference))
    )
    return rows
