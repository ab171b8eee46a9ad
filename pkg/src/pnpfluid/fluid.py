"""One-fluid Navier-Stokes with electric forcing and a rigid body.

The body and solvent are one velocity field on the MAC grid with no-slip
enclosure walls.  A time step is

    u* = u + dt * ( -adv(U; u) + (eta/mu) Lap u + f )      explicit
    u  = P_div u*                                          pressure projection
    u  = P_rig u                                           rigidity projection

where U is a frozen advecting velocity (the previous fixed-point iterate in
the coupled stepper), f the electric acceleration, P_div the exact MAC
projection, and P_rig the momentum-preserving overwrite of the body region
with its best rigid motion.

Discrete energy structure (relied on by the energy ledger):

  * advection is the skew-symmetrized divergence form: the divergence-form
    operator satisfies sum(u * A_div) = 1/2 sum(u^2 * div U) exactly with
    wall fluxes zeroed, so subtracting (1/2) u div(U) pointwise makes the
    advection term exactly energy-neutral for any advecting field;
  * the viscous drain equals -eta <u, Lap u> h^2 by definition of the same
    discrete Laplacian (linear no-slip ghosts), and is nonnegative;
  * P_div is an orthogonal projection (MAC div/grad adjointness), P_rig is an
    orthogonal projection onto fields rigid on the body face mask (solved via
    the 3x3 Gram system of the translation/rotation basis), so both can only
    remove kinetic energy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import GeometryError, SolverError, StabilityError
from .geometry import PhaseMap, RigidPose, ShapeSpec
from .grid import Grid, VelocityField, bilinear_sample, divergence
from .poisson import maxwell_stress
from . import solvers


@dataclass(frozen=True)
class BodyInertia:
    """Mass and scalar moment of inertia of the body (2D)."""

    M: float
    A: float

    def __post_init__(self):
        if not (self.M > 0 and self.A > 0):
            raise ValueError("mass and inertia must be positive")

    @classmethod
    def from_shape(cls, shape: ShapeSpec, mu_p: float) -> "BodyInertia":
        return cls(M=mu_p * shape.area(), A=mu_p * shape.moment_per_density())


def electric_force_density(N: list[np.ndarray], psi: np.ndarray, species,
                           chi_fluid: np.ndarray, e_charge: float,
                           grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Face-sampled electric force  F = -e sum_i Z_i N_i grad psi.

    The ionic charge only lives on solvent cells, so the force vanishes on
    body-interior faces automatically.  Returns (Fu, Fv) on the staggered
    faces; wall faces carry no force (no-slip DOFs are fixed anyway).
    """
    q = np.zeros_like(psi)
    for Ni, sp in zip(N, species):
        q = q + sp.Z * Ni
    q = e_charge * q * chi_fluid
    h = grid.h
    Fu = np.zeros((grid.nx + 1, grid.ny))
    Fv = np.zeros((grid.nx, grid.ny + 1))
    Fu[1:-1, :] = -0.5 * (q[:-1, :] + q[1:, :]) * (psi[1:, :] - psi[:-1, :]) / h
    Fv[:, 1:-1] = -0.5 * (q[:, :-1] + q[:, 1:]) * (psi[:, 1:] - psi[:, :-1]) / h
    return Fu, Fv


# ---------------------------------------------------------------------------
# advection and diffusion operators
# ---------------------------------------------------------------------------

def advect_operator(vel: VelocityField, adv: VelocityField):
    """Skew-symmetrized advection of ``vel`` by the frozen field ``adv``.

    Returns (Au, Av) with sum(u*Au) + sum(v*Av) = 0 to roundoff for any
    advecting field (wall-normal advecting fluxes are treated as zero).
    """
    grid = vel.grid
    h = grid.h
    u, v = vel.u, vel.v
    U, V = adv.u, adv.v
    nx, ny = grid.nx, grid.ny

    divU = (np.diff(U, axis=0) + np.diff(V, axis=1)) / h   # cell divergence

    # --- u momentum -------------------------------------------------------
    ubar = 0.5 * (u[:-1, :] + u[1:, :])                    # at cells
    Ubar = 0.5 * (U[:-1, :] + U[1:, :])
    Fxx = Ubar * ubar                                      # (nx, ny)

    Fxy = np.zeros((nx + 1, ny + 1))                       # at corners
    Vc = 0.5 * (V[:-1, 1:-1] + V[1:, 1:-1])                # interior-x corners, interior-y
    uc = 0.5 * (u[1:-1, :-1] + u[1:-1, 1:])
    Fxy[1:-1, 1:-1] = Vc * uc                              # wall rows/cols stay 0

    Au = np.zeros_like(u)
    Au[1:-1, :] = (Fxx[1:, :] - Fxx[:-1, :]) / h \
        + (Fxy[1:-1, 1:] - Fxy[1:-1, :-1]) / h
    Au[1:-1, :] -= 0.5 * u[1:-1, :] * 0.5 * (divU[:-1, :] + divU[1:, :])

    # --- v momentum -------------------------------------------------------
    vbar = 0.5 * (v[:, :-1] + v[:, 1:])
    Vbar = 0.5 * (V[:, :-1] + V[:, 1:])
    Fyy = Vbar * vbar

    Fyx = np.zeros((nx + 1, ny + 1))
    Uc = 0.5 * (U[1:-1, :-1] + U[1:-1, 1:])
    vc = 0.5 * (v[:-1, 1:-1] + v[1:, 1:-1])
    Fyx[1:-1, 1:-1] = Uc * vc

    Av = np.zeros_like(v)
    Av[:, 1:-1] = (Fyy[:, 1:] - Fyy[:, :-1]) / h \
        + (Fyx[1:, 1:-1] - Fyx[:-1, 1:-1]) / h
    Av[:, 1:-1] -= 0.5 * v[:, 1:-1] * 0.5 * (divU[:, :-1] + divU[:, 1:])
    return Au, Av


def laplacian(vel: VelocityField):
    """Componentwise 5-point Laplacian with linear no-slip ghost values."""
    grid = vel.grid
    h2 = grid.h * grid.h
    u, v = vel.u, vel.v

    up = np.empty((u.shape[0], u.shape[1] + 2))
    up[:, 1:-1] = u
    up[:, 0] = -u[:, 0]
    up[:, -1] = -u[:, -1]
    Lu = np.zeros_like(u)
    Lu[1:-1, :] = (u[2:, :] - 2 * u[1:-1, :] + u[:-2, :]) / h2 \
        + (up[1:-1, 2:] - 2 * up[1:-1, 1:-1] + up[1:-1, :-2]) / h2

    vp = np.empty((v.shape[0] + 2, v.shape[1]))
    vp[1:-1, :] = v
    vp[0, :] = -v[0, :]
    vp[-1, :] = -v[-1, :]
    Lv = np.zeros_like(v)
    Lv[:, 1:-1] = (v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]) / h2 \
        + (vp[2:, 1:-1] - 2 * vp[1:-1, 1:-1] + vp[:-2, 1:-1]) / h2
    return Lu, Lv


def viscous_drain(vel: VelocityField, eta: float) -> float:
    """Exact discrete dissipation  -eta <u, Lap u> h^2  (nonnegative)."""
    Lu, Lv = laplacian(vel)
    h2 = vel.grid.cell_area
    return -eta * (float(np.sum(vel.u * Lu)) + float(np.sum(vel.v * Lv))) * h2


def _mu_at_faces(mu: np.ndarray, grid: Grid):
    mu_u = np.empty((grid.nx + 1, grid.ny))
    mu_u[1:-1, :] = 0.5 * (mu[:-1, :] + mu[1:, :])
    mu_u[0, :] = mu[0, :]
    mu_u[-1, :] = mu[-1, :]
    mu_v = np.empty((grid.nx, grid.ny + 1))
    mu_v[:, 1:-1] = 0.5 * (mu[:, :-1] + mu[:, 1:])
    mu_v[:, 0] = mu[:, 0]
    mu_v[:, -1] = mu[:, -1]
    return mu_u, mu_v


def advect_diffuse(vel: VelocityField, mu: np.ndarray, F, eta: float, dt: float,
                   u_adv: VelocityField | None = None,
                   convention: str = "force_per_mass") -> VelocityField:
    """Explicit momentum update (before the projections).

    ``F`` is the (Fu, Fv) face force from electric_force_density.  Under the
    default convention the electric term is an acceleration (the momentum
    balance is written per unit mass, matching the governing form); under
    ``force_per_volume`` it is divided by the local density.
    """
    grid = vel.grid
    Au, Av = advect_operator(vel, u_adv if u_adv is not None else vel)
    Lu, Lv = laplacian(vel)
    mu_u, mu_v = _mu_at_faces(mu, grid)
    Fu, Fv = F
    if convention == "force_per_mass":
        fu, fv = Fu, Fv
    elif convention == "force_per_volume":
        fu, fv = Fu / mu_u, Fv / mu_v
    else:
        raise ValueError(f"unknown force convention {convention!r}")

    out = vel.copy()
    out.u[1:-1, :] += dt * (-Au[1:-1, :] + (eta / mu_u[1:-1, :]) * Lu[1:-1, :]
                            + fu[1:-1, :])
    out.v[:, 1:-1] += dt * (-Av[:, 1:-1] + (eta / mu_v[:, 1:-1]) * Lv[:, 1:-1]
                            + fv[:, 1:-1])
    if not (np.all(np.isfinite(out.u)) and np.all(np.isfinite(out.v))):
        raise StabilityError("momentum update produced NaN/Inf; dt too large")
    return out


def project_incompressible(u_star: VelocityField, grid: Grid,
                           tol: float = 1e-8,
                           pressure_scale: float = 1.0):
    """Remove the discrete divergence; returns (velocity, pressure).

    Solves the Neumann pressure problem by DCT diagonalization (exact for the
    MAC 5-point operator, so div u drops to roundoff) and subtracts the face
    gradient.  ``pressure_scale`` converts the projection potential into a
    physical pressure (the coupled stepper passes mu_f / dt).
    """
    div = divergence(u_star)
    if not div.any():
        return u_star.copy(), np.zeros_like(div)
    b = div - div.mean()
    phi = solvers.solve_neumann_poisson(b, grid)
    out = u_star.copy()
    h = grid.h
    out.u[1:-1, :] -= (phi[1:, :] - phi[:-1, :]) / h
    out.v[:, 1:-1] -= (phi[:, 1:] - phi[:, :-1]) / h
    resid = float(np.max(np.abs(divergence(out))))
    scale = max(1.0, float(np.max(np.abs(u_star.u))), float(np.max(np.abs(u_star.v))))
    if resid > tol * scale:
        raise SolverError(f"projection left divergence {resid:.3e}")
    return out, pressure_scale * phi


def enforce_rigidity(vel: VelocityField, phase: PhaseMap,
                     inertia: BodyInertia | None, pose: RigidPose,
                     dt: float = 0.0, w_prev: float = 0.0):
    """Overwrite the body region with its momentum-equivalent rigid motion.

    The rigid velocities solve the 3x3 Gram system of the translation /
    rotation basis over the body face mask, i.e. the L2-orthogonal projection
    onto rigid fields there: linear and angular momentum of the masked region
    are preserved exactly and kinetic energy cannot increase.  In 2D the
    gyroscopic torque w x (A w) vanishes identically, so no extra correction
    is applied (``dt`` and ``w_prev`` are kept for interface parity).

    Returns (velocity, pose updated with the extracted v_c and w).
    """
    mu_face_u = phase.solid_u
    mu_face_v = phase.solid_v
    nu = int(np.count_nonzero(mu_face_u))
    nv = int(np.count_nonzero(mu_face_v))
    if nu == 0 or nv == 0:
        raise GeometryError("body mask is empty; cannot enforce rigidity")

    grid = vel.grid
    _, Yu = grid.uface_mesh()
    Xv, _ = grid.vface_mesh()
    ry = Yu - pose.x_c[1]
    rx = Xv - pose.x_c[0]

    su = mu_face_u
    sv = mu_face_v
    g11 = float(nu)
    g22 = float(nv)
    g13 = float(-np.sum(ry[su]))
    g23 = float(np.sum(rx[sv]))
    g33 = float(np.sum(ry[su] ** 2) + np.sum(rx[sv] ** 2))
    G = np.array([[g11, 0.0, g13], [0.0, g22, g23], [g13, g23, g33]])
    m = np.array([
        float(np.sum(vel.u[su])),
        float(np.sum(vel.v[sv])),
        float(-np.sum(ry[su] * vel.u[su]) + np.sum(rx[sv] * vel.v[sv])),
    ])
    try:
        vcx, vcy, w = np.linalg.solve(G, m)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("degenerate body mask in rigidity projection") from exc

    out = vel.copy()
    out.u[su] = vcx - w * ry[su]
    out.v[sv] = vcy + w * rx[sv]
    new_pose = replace(pose, v_c=np.array([vcx, vcy]), w=float(w))
    return out, new_pose


# ---------------------------------------------------------------------------
# strain-rate diagnostics and surface tractions
# ---------------------------------------------------------------------------

def strain_rate_centers(vel: VelocityField):
    """Symmetric gradient components at cell centers (Dxy corner-averaged)."""
    grid = vel.grid
    h = grid.h
    Dxx = np.diff(vel.u, axis=0) / h
    Dyy = np.diff(vel.v, axis=1) / h
    nx, ny = grid.nx, grid.ny
    corner = np.zeros((nx + 1, ny + 1))
    dudy = (vel.u[1:-1, 1:] - vel.u[1:-1, :-1]) / h
    dvdx = (vel.v[1:, 1:-1] - vel.v[:-1, 1:-1]) / h
    corner[1:-1, 1:-1] = 0.5 * (dudy + dvdx)
    corner[0, :] = corner[1, :]
    corner[-1, :] = corner[-2, :]
    corner[:, 0] = corner[:, 1]
    corner[:, -1] = corner[:, -2]
    Dxy = 0.25 * (corner[:-1, :-1] + corner[1:, :-1]
                  + corner[:-1, 1:] + corner[1:, 1:])
    return Dxx, Dxy, Dyy


def interior_body_cells(phase: PhaseMap) -> np.ndarray:
    """Cells strictly inside the body (cell and all four neighbors solid)."""
    solid = ~phase.fluid_mask
    interior = solid.copy()
    interior[1:, :] &= solid[:-1, :]
    interior[:-1, :] &= solid[1:, :]
    interior[:, 1:] &= solid[:, :-1]
    interior[:, :-1] &= solid[:, 1:]
    return interior


def max_interior_strain(vel: VelocityField, phase: PhaseMap) -> float:
    """Largest strain-rate magnitude on strictly interior body cells."""
    interior = interior_body_cells(phase)
    if not interior.any():
        return 0.0
    Dxx, Dxy, Dyy = strain_rate_centers(vel)
    mag = np.sqrt(Dxx**2 + 2 * Dxy**2 + Dyy**2)
    return float(np.max(mag[interior]))


def surface_force_torque(psi: np.ndarray, vel: VelocityField, p: np.ndarray,
                         phase: PhaseMap, pose: RigidPose, eta: float,
                         kappa2: float):
    """Diagnostic surface integrals of the hydrodynamic and electric stresses.

    sigma_H = 2 eta D(u) - p I  and the electrostatic stress are sampled a
    short distance outside the body (fluid side) and integrated over the
    boundary.  This cross-validates the momentum transferred by the rigidity
    projection; it never feeds back into the dynamics.
    """
    if phase.shape is None:
        raise GeometryError("phase map carries no body shape")
    grid = phase.grid
    shape = phase.shape
    if shape.kind == "disk":
        per = 2 * np.pi * shape.radius
    else:
        seg = np.roll(shape.vertices, -1, axis=0) - shape.vertices
        per = float(np.hypot(seg[:, 0], seg[:, 1]).sum())
    n = max(64, int(4 * per / grid.h))
    bx, by, nxv, nyv, ds = shape.boundary_points(pose, n)
    off = 2.0 * grid.h
    sx = bx + off * nxv
    sy = by + off * nyv

    Dxx, Dxy, Dyy = strain_rate_centers(vel)
    sExx, sExy, sEyy = maxwell_stress(psi, kappa2, grid)
    txx = 2 * eta * Dxx - p + sExx
    txy = 2 * eta * Dxy + sExy
    tyy = 2 * eta * Dyy - p + sEyy

    Sxx = bilinear_sample(txx, grid, sx, sy)
    Sxy = bilinear_sample(txy, grid, sx, sy)
    Syy = bilinear_sample(tyy, grid, sx, sy)
    tx = Sxx * nxv + Sxy * nyv
    ty = Sxy * nxv + Syy * nyv
    force = np.array([np.sum(tx) * ds, np.sum(ty) * ds])
    rx = bx - pose.x_c[0]
    ry = by - pose.x_c[1]
    torque = float(np.sum(rx * ty - ry * tx) * ds)
    return force, torque
