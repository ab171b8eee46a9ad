"""Initial-state assembly from a resolved configuration."""

from __future__ import annotations

import numpy as np

from .geometry import build_phase_map, rigid_velocity_field, transport_fixed_charge
from .grid import VelocityField
from .poisson import assemble_rhs, solve_poisson
from .stepper import DiagAccum, SimState


def bump(x, y, cx: float, cy: float, radius: float, amplitude: float):
    """Compactly supported C^2 bump  A (1 - (r/R)^2)^3  (zero outside R)."""
    r2 = ((x - cx) ** 2 + (y - cy) ** 2) / (radius * radius)
    return np.where(r2 < 1.0, amplitude * (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)


def initial_fields(config) -> SimState:
    grid = config.grid_obj
    phys = config.physics
    pose = config.initial_pose()
    phase = build_phase_map(pose, config.shape_obj, grid,
                            phys.kappa1, phys.kappa2, phys.mu_p, phys.mu_f)
    X, Y = grid.cell_mesh()

    rho0 = np.zeros(grid.shape)
    if config.initial.rho0 is not None:
        rc = config.initial.rho0
        cx = pose.x_c0[0] + rc.center_offset[0]
        cy = pose.x_c0[1] + rc.center_offset[1]
        rho0 = bump(X, Y, cx, cy, rc.radius, rc.amplitude)
    rho = transport_fixed_charge(rho0, pose, grid, shape=config.shape_obj)

    N = []
    for entry in config.initial.species:
        if entry.type == "uniform":
            Ni = np.where(phase.fluid_mask, entry.value, 0.0)
        else:
            Ni = bump(X, Y, entry.center[0], entry.center[1],
                      entry.radius, entry.amplitude)
            Ni = np.where(phase.fluid_mask, Ni, 0.0)
        N.append(Ni)

    vel = VelocityField.zeros(grid)
    if float(np.hypot(*config.initial.v0)) > 0 or config.initial.w0 != 0.0:
        rigid = rigid_velocity_field(pose, grid)
        vel.u[phase.solid_u] = rigid.u[phase.solid_u]
        vel.v[phase.solid_v] = rigid.v[phase.solid_v]

    rhs = assemble_rhs(N, config.species_params, rho, phase.chi_fluid, phys.e)
    psi = solve_poisson((phase.kappa_x, phase.kappa_y), rhs, config.bc_obj,
                        tol=config.run.poisson_tol)
    return SimState(
        t=0.0, pose=pose, phase=phase, psi=psi, N=N,
        rho0=rho0, rho=rho, vel=vel, p=np.zeros(grid.shape),
        diag=DiagAccum(),
    )
