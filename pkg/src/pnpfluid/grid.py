"""Uniform staggered (MAC) grid for the rectangular enclosure.

Layout conventions used throughout the package (axis 0 is x, axis 1 is y):

    cell centers   (nx,   ny)    at (x0+(i+1/2)h, y0+(j+1/2)h)   scalars psi, N, p, rho
    x-faces        (nx+1, ny)    at (x0+i h,      y0+(j+1/2)h)   u velocity, x-fluxes
    y-faces        (nx,   ny+1)  at (x0+(i+1/2)h, y0+j h)        v velocity, y-fluxes
    corners        (nx+1, ny+1)  at (x0+i h,      y0+j h)

Scalar fields are plain float64 ndarrays of shape (nx, ny); the staggered
velocity lives in :class:`VelocityField`.  The MAC arrangement makes the
discrete divergence and gradient exact adjoints, so the pressure projection
removes the divergence to solver precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid over the enclosure [x0, x0+nx*h] x [y0, y0+ny*h]."""

    nx: int
    ny: int
    h: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 cells per direction")
        if not self.h > 0:
            raise ValueError("grid spacing h must be positive")

    @property
    def x1(self) -> float:
        return self.x0 + self.nx * self.h

    @property
    def y1(self) -> float:
        return self.y0 + self.ny * self.h

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    # -- coordinate arrays ---------------------------------------------------

    def xc(self) -> np.ndarray:
        """Cell-center x coordinates, shape (nx,)."""
        return self.x0 + (np.arange(self.nx) + 0.5) * self.h

    def yc(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.h

    def xf(self) -> np.ndarray:
        """Face x coordinates, shape (nx+1,)."""
        return self.x0 + np.arange(self.nx + 1) * self.h

    def yf(self) -> np.ndarray:
        return self.y0 + np.arange(self.ny + 1) * self.h

    def cell_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (X, Y) of cell centers, each (nx, ny)."""
        return np.meshgrid(self.xc(), self.yc(), indexing="ij")

    def uface_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xf(), self.yc(), indexing="ij")

    def vface_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xc(), self.yf(), indexing="ij")

    def wall_distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Distance from points to the enclosure boundary (0 on the wall)."""
        return np.minimum(
            np.minimum(x - self.x0, self.x1 - x),
            np.minimum(y - self.y0, self.y1 - y),
        )


@dataclass
class VelocityField:
    """MAC-staggered velocity: u on x-faces (nx+1, ny), v on y-faces (nx, ny+1)."""

    u: np.ndarray
    v: np.ndarray
    grid: Grid = field(repr=False)

    @classmethod
    def zeros(cls, grid: Grid) -> "VelocityField":
        return cls(
            np.zeros((grid.nx + 1, grid.ny)),
            np.zeros((grid.nx, grid.ny + 1)),
            grid,
        )

    def copy(self) -> "VelocityField":
        return VelocityField(self.u.copy(), self.v.copy(), self.grid)

    def max_speed(self) -> float:
        mu = float(np.max(np.abs(self.u))) if self.u.size else 0.0
        mv = float(np.max(np.abs(self.v))) if self.v.size else 0.0
        return max(mu, mv)

    def center_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Average face velocities to cell centers, each (nx, ny)."""
        uc = 0.5 * (self.u[:-1, :] + self.u[1:, :])
        vc = 0.5 * (self.v[:, :-1] + self.v[:, 1:])
        return uc, vc


def divergence(vel: VelocityField) -> np.ndarray:
    """Discrete cell divergence (u_E - u_W + v_N - v_S)/h, shape (nx, ny)."""
    h = vel.grid.h
    return (np.diff(vel.u, axis=0) + np.diff(vel.v, axis=1)) / h


def bilinear_sample(values: np.ndarray, grid: Grid, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinearly interpolate a cell-centered field at arbitrary points.

    Points outside the cell-center lattice are clamped to the boundary value
    band; callers that need zero outside a support region mask afterwards.
    """
    h = grid.h
    fx = (x - grid.x0) / h - 0.5
    fy = (y - grid.y0) / h - 0.5
    i0 = np.clip(np.floor(fx).astype(int), 0, grid.nx - 2)
    j0 = np.clip(np.floor(fy).astype(int), 0, grid.ny - 2)
    tx = np.clip(fx - i0, 0.0, 1.0)
    ty = np.clip(fy - j0, 0.0, 1.0)
    v00 = values[i0, j0]
    v10 = values[i0 + 1, j0]
    v01 = values[i0, j0 + 1]
    v11 = values[i0 + 1, j0 + 1]
    return (
        v00 * (1 - tx) * (1 - ty)
        + v10 * tx * (1 - ty)
        + v01 * (1 - tx) * ty
        + v11 * tx * ty
    )
