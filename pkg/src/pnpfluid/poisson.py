"""Electrostatic potential with a piecewise dielectric.

Solves  div(kappa grad psi) = -4 pi e sum_i Z_i N_i chi_fluid - 4 pi rho
with Dirichlet data Psi on the enclosure walls (Gaussian units, explicit
4 pi factors).  The valences only contribute on solvent cells; the fixed
charge rho rides inside the body.

Discretization: 5-point finite volumes on cell centers with harmonic face
averaging of the two-phase dielectric.  Harmonic averaging reproduces the
interface condition (continuity of kappa times the normal flux) to first
order without a fitted mesh.  Wall values sit half a cell outside the first
center, so wall closures carry a factor two.

The discrete operator is symmetric positive definite; it is solved either by
ILU-preconditioned conjugate gradients (general kappa) or by a DST
diagonalization (uniform kappa), both to a relative residual tolerance.

``electrostatic_energy`` evaluates the discrete quadratic functional whose
stationary point is exactly the solved linear system, so the solution
minimizes it over all fields with the same wall trace to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation, SolverError
from .geometry import PhaseMap
from .grid import Grid
from . import solvers

FOUR_PI = 4.0 * np.pi


@dataclass
class ElectrostaticBC:
    """Dirichlet wall values Psi sampled at boundary face midpoints."""

    grid: Grid = field(repr=False)
    left: np.ndarray = None      # (ny,) at x = x0
    right: np.ndarray = None     # (ny,) at x = x1
    bottom: np.ndarray = None    # (nx,) at y = y0
    top: np.ndarray = None       # (nx,) at y = y1

    def __post_init__(self):
        ny, nx = self.grid.ny, self.grid.nx
        self.left = np.zeros(ny) if self.left is None else np.asarray(self.left, float)
        self.right = np.zeros(ny) if self.right is None else np.asarray(self.right, float)
        self.bottom = np.zeros(nx) if self.bottom is None else np.asarray(self.bottom, float)
        self.top = np.zeros(nx) if self.top is None else np.asarray(self.top, float)
        for name, arr, n in (("left", self.left, ny), ("right", self.right, ny),
                             ("bottom", self.bottom, nx), ("top", self.top, nx)):
            if arr.shape != (n,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"bad boundary trace {name!r}")

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ElectrostaticBC":
        return cls(grid,
                   np.full(grid.ny, float(value)), np.full(grid.ny, float(value)),
                   np.full(grid.nx, float(value)), np.full(grid.nx, float(value)))

    @classmethod
    def linear(cls, grid: Grid, gx: float, gy: float, c: float = 0.0) -> "ElectrostaticBC":
        """Psi(x, y) = gx x + gy y + c; a uniform applied field is Psi = -E0 x."""
        xc, yc = grid.xc(), grid.yc()
        return cls(grid,
                   gx * grid.x0 + gy * yc + c,
                   gx * grid.x1 + gy * yc + c,
                   gx * xc + gy * grid.y0 + c,
                   gx * xc + gy * grid.y1 + c)

    @classmethod
    def from_function(cls, grid: Grid, f) -> "ElectrostaticBC":
        xc, yc = grid.xc(), grid.yc()
        return cls(grid,
                   f(np.full_like(yc, grid.x0), yc),
                   f(np.full_like(yc, grid.x1), yc),
                   f(xc, np.full_like(xc, grid.y0)),
                   f(xc, np.full_like(xc, grid.y1)))

    def max(self) -> float:
        return max(self.left.max(), self.right.max(), self.bottom.max(), self.top.max())

    def min(self) -> float:
        return min(self.left.min(), self.right.min(), self.bottom.min(), self.top.min())

    def is_zero(self) -> bool:
        return not (self.left.any() or self.right.any() or self.bottom.any() or self.top.any())


def _faces(kappa_face, grid: Grid):
    if isinstance(kappa_face, PhaseMap):
        return kappa_face.kappa_x, kappa_face.kappa_y
    kx, ky = kappa_face
    kx = np.asarray(kx, float)
    ky = np.asarray(ky, float)
    if kx.shape != (grid.nx + 1, grid.ny) or ky.shape != (grid.nx, grid.ny + 1):
        raise ValueError("face coefficient arrays have wrong shapes")
    return kx, ky


def assemble_rhs(N: list[np.ndarray], species, rho: np.ndarray,
                 chi_fluid: np.ndarray, e_charge: float) -> np.ndarray:
    """Right-hand side  -4 pi e sum Z_i N_i chi_fluid - 4 pi rho."""
    if len(N) != len(species):
        raise ValueError("species count does not match concentration fields")
    ion = np.zeros_like(rho)
    for Ni, sp in zip(N, species):
        if np.any(Ni < -1e-12):
            raise InvariantViolation("negative ionic concentration in assemble_rhs")
        ion = ion + sp.Z * Ni
    return -FOUR_PI * e_charge * ion * chi_fluid - FOUR_PI * rho


def _system_rhs(kx, ky, rhs: np.ndarray, bc: ElectrostaticBC, grid: Grid) -> np.ndarray:
    """b of the SPD system  (-div kappa grad) psi = b  with BC folded in."""
    h2 = grid.h * grid.h
    b = -rhs.copy()
    b[0, :] += 2.0 * kx[0, :] * bc.left / h2
    b[-1, :] += 2.0 * kx[-1, :] * bc.right / h2
    b[:, 0] += 2.0 * ky[:, 0] * bc.bottom / h2
    b[:, -1] += 2.0 * ky[:, -1] * bc.top / h2
    return b


def apply_poisson_operator(psi: np.ndarray, kappa_face, grid: Grid) -> np.ndarray:
    """The homogeneous SPD operator (-div kappa grad) with Dirichlet closure."""
    kx, ky = _faces(kappa_face, grid)
    return solvers.apply_varcoef_operator(psi, kx, ky, grid)


def solve_poisson(kappa_face, rhs: np.ndarray, bc: ElectrostaticBC,
                  tol: float = 1e-10, x0: np.ndarray | None = None,
                  method: str = "auto") -> np.ndarray:
    """Solve  div(kappa grad psi) = rhs  with Dirichlet data Psi on the walls.

    The convergence contract is on the assembled system: the 2-norm of the
    final residual is at most tol times the norm of the assembled right-hand
    side (sources plus boundary contributions).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = bc.grid
    kx, ky = _faces(kappa_face, grid)
    if np.any(kx <= 0) or np.any(ky <= 0):
        raise ValueError("dielectric face coefficients must be positive")
    b = _system_rhs(kx, ky, rhs, bc, grid)
    if not b.any():
        return np.zeros_like(rhs)

    kmin, kmax = float(min(kx.min(), ky.min())), float(max(kx.max(), ky.max()))
    uniform = (kmax - kmin) <= 1e-14 * kmax
    if method == "auto":
        method = "dst" if uniform else "cg"
    if method == "dst" and not uniform:
        raise ValueError("DST path requires a uniform dielectric")

    if method == "dst":
        psi = solvers.solve_uniform_dirichlet(kmax, b, grid)
        history = None
    elif method == "cg":
        psi, history = solvers.solve_varcoef_pcg(kx, ky, b, grid, tol, x0=x0)
    else:
        raise ValueError(f"unknown method {method!r}")

    res = float(np.linalg.norm(b - solvers.apply_varcoef_operator(psi, kx, ky, grid)))
    if res > tol * float(np.linalg.norm(b)) * (1.0 + 1e-9):
        raise SolverError(
            f"poisson solve residual {res:.3e} above tolerance",
            residual_history=history,
        )
    return psi


def harmonic_lift(bc: ElectrostaticBC) -> np.ndarray:
    """Discrete harmonic extension of the wall data (kappa = 1, no sources)."""
    grid = bc.grid
    kx = np.ones((grid.nx + 1, grid.ny))
    ky = np.ones((grid.nx, grid.ny + 1))
    return solve_poisson((kx, ky), np.zeros((grid.nx, grid.ny)), bc)


def electric_field(psi: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of psi at cell centers: centered interior, one-sided at walls."""
    gx, gy = np.gradient(psi, grid.h)
    return gx, gy


def maxwell_stress(psi: np.ndarray, kappa2: float, grid: Grid):
    """Electrostatic stress on the solvent side.

    S_ij = (kappa2 / 4 pi) (d_i psi d_j psi - 1/2 delta_ij |grad psi|^2),
    evaluated with the in-plane components; the 2x2 result is symmetric and
    trace-free.  Returns (Sxx, Sxy, Syy) cell arrays.
    """
    gx, gy = electric_field(psi, grid)
    pref = kappa2 / FOUR_PI
    sxx = pref * 0.5 * (gx * gx - gy * gy)
    sxy = pref * gx * gy
    return sxx, sxy, -sxx


def electrostatic_energy(psi: np.ndarray, phase_or_kappa, N: list[np.ndarray],
                         species, rho: np.ndarray, bc: ElectrostaticBC,
                         e_charge: float = 1.0) -> float:
    """Discrete electrostatic energy functional.

      E = 1/2 int kappa |grad psi|^2 - 4 pi e sum_i int Z_i N_i psi
          - 4 pi int rho psi

    evaluated with face-midpoint quadrature for the gradient term (including
    the wall half-faces against the trace Psi) and cell-midpoint quadrature
    for the sources.  This is the exact quadratic form of the discrete
    system, so the solved potential minimizes it among all grid fields with
    the same wall trace.
    """
    grid = bc.grid
    kx, ky = _faces(phase_or_kappa, grid)
    chi_fluid = (phase_or_kappa.chi_fluid if isinstance(phase_or_kappa, PhaseMap)
                 else np.ones_like(rho))
    h2 = grid.h * grid.h

    grad_term = 0.5 * (
        np.sum(kx[1:-1, :] * (psi[1:, :] - psi[:-1, :]) ** 2)
        + np.sum(ky[:, 1:-1] * (psi[:, 1:] - psi[:, :-1]) ** 2)
        + 2.0 * np.sum(kx[0, :] * (psi[0, :] - bc.left) ** 2)
        + 2.0 * np.sum(kx[-1, :] * (psi[-1, :] - bc.right) ** 2)
        + 2.0 * np.sum(ky[:, 0] * (psi[:, 0] - bc.bottom) ** 2)
        + 2.0 * np.sum(ky[:, -1] * (psi[:, -1] - bc.top) ** 2)
    )
    source = np.zeros_like(rho)
    for Ni, sp in zip(N, species):
        source = source + e_charge * sp.Z * Ni * chi_fluid
    source = source + rho
    return float(grad_term - FOUR_PI * np.sum(source * psi) * h2)
