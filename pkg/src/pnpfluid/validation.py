"""Analytic validation suite behind the ``oracle`` CLI subcommand.

Each check pits a solver path against an independent reference (closed form,
spectral series, or exact discrete identity) and prints one PASS/FAIL line.
"""

from __future__ import annotations

import sys

import numpy as np

from .geometry import (RigidPose, ShapeSpec, all_fluid_phase, build_phase_map,
                       rigid_velocity_field)
from .grid import Grid, VelocityField, divergence
from .fluid import advect_operator, max_interior_strain, project_incompressible
from .nernst_planck import SpeciesParams, boltzmann_profile, np_face_fluxes, \
    np_stable_dt, step_np, total_moles
from .oracles import oracle_decomposition_disk, radial_transmission_potential
from .poisson import ElectrostaticBC, electric_field, solve_poisson


def _report(stream, name: str, ok: bool, detail: str) -> bool:
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] {name}: {detail}", file=stream)
    return ok


def check_disk_in_uniform_field(n: int, stream) -> bool:
    """Interior field of a dielectric disk under a uniform applied field."""
    grid = Grid(n, n, 2.0 / n, -1.0, -1.0)
    k1, k2, E0, a = 1.5, 1.0, 1.0, 0.25
    shape = ShapeSpec(kind="disk", radius=a, center=[0.0, 0.0])
    pose = RigidPose(x_c=np.zeros(2))
    phase = build_phase_map(pose, shape, grid, k1, k2, 1.0, 1.0)
    bc = ElectrostaticBC.linear(grid, -E0, 0.0)
    psi = solve_poisson((phase.kappa_x, phase.kappa_y),
                        np.zeros(grid.shape), bc, tol=1e-10)
    gx, gy = electric_field(psi, grid)
    X, Y = grid.cell_mesh()
    core = np.hypot(X, Y) < 0.5 * a
    measured = float(np.hypot(np.mean(gx[core]), np.mean(gy[core])))
    expected = 2.0 * k2 * E0 / (k1 + k2)
    rel = abs(measured - expected) / expected
    return _report(stream, "dielectric disk interior field", rel < 0.02,
                   f"|E_in|={measured:.5f} vs {expected:.5f} (rel {rel:.2e})")


def check_radial_point_charge(stream) -> bool:
    """Spectral oracle vs the closed-form radial transmission potential."""
    n = 96
    grid = Grid(n, n, 2.0 / n, -1.0, -1.0)
    k1, k2, a, q = 3.0, 1.0, 0.3, 0.7
    shape = ShapeSpec(kind="disk", radius=a, center=[0.0, 0.0])
    r_ref = 5.0

    def psi_exact(x, y):
        return radial_transmission_potential(q, a, k1, k2, np.hypot(x, y), r_ref)

    bc = ElectrostaticBC.from_function(grid, psi_exact)
    psi = oracle_decomposition_disk(np.zeros(grid.shape), bc, shape, (k1, k2),
                                    point_charges=[(q, (0.0, 0.0))])
    X, Y = grid.cell_mesh()
    ref = psi_exact(X, Y)
    away = np.abs(np.hypot(X, Y) - a) > 0.0   # exact everywhere off the charge
    err = float(np.max(np.abs((psi - ref)[away])))
    return _report(stream, "radial point-charge transmission", err < 1e-6,
                   f"max deviation {err:.2e}")


def check_heat_kernel(stream) -> bool:
    """Pure diffusion of a narrow blob: variance grows by 2 d dt per step."""
    n = 96
    grid = Grid(n, n, 1.0 / n, 0.0, 0.0)
    phase = all_fluid_phase(grid)
    sp = SpeciesParams(Z=0, d=0.3)
    X, Y = grid.cell_mesh()
    N = np.exp(-((X - 0.5) ** 2 + (Y - 0.5) ** 2) / (2 * 0.05**2))
    psi = np.zeros(grid.shape)
    dt = np_stable_dt(None, psi, sp, grid)
    steps = 40

    def variance(field):
        m = float(np.sum(field)) * grid.cell_area
        mx = float(np.sum(field * X)) * grid.cell_area / m
        my = float(np.sum(field * Y)) * grid.cell_area / m
        return float(np.sum(field * ((X - mx) ** 2 + (Y - my) ** 2))) \
            * grid.cell_area / m

    v0 = variance(N)
    for _ in range(steps):
        N = step_np(N, None, psi, sp, phase, dt)
    growth = (variance(N) - v0) / (steps * dt)
    rel = abs(growth - 4.0 * sp.d) / (4.0 * sp.d)   # 2 d per axis
    return _report(stream, "heat-kernel variance growth", rel < 0.01,
                   f"d<r^2>/dt = {growth:.5f} vs {4.0 * sp.d:.5f} (rel {rel:.2e})")


def check_boltzmann_equilibrium(stream) -> bool:
    """Equilibrium profile: residual fluxes shrink at second order in h."""
    errs = []
    for n in (48, 96):
        grid = Grid(n, n, 1.0 / n, 0.0, 0.0)
        phase = all_fluid_phase(grid)
        sp = SpeciesParams(Z=1, d=1.0)
        X, Y = grid.cell_mesh()
        psi = 0.8 * np.cos(np.pi * X) * np.cos(np.pi * Y)
        N = boltzmann_profile(psi, sp, 1.0, phase)
        Fx, Fy = np_face_fluxes(N, None, psi, sp, phase.chi_fluid, 1.0, grid)
        errs.append(max(float(np.max(np.abs(Fx))), float(np.max(np.abs(Fy)))))
    rate = np.log2(errs[0] / errs[1])
    return _report(stream, "equilibrium flux cancellation", rate > 1.7,
                   f"max|flux| {errs[0]:.2e} -> {errs[1]:.2e} (order {rate:.2f})")


def check_projection(stream) -> bool:
    """Projection annihilates gradients and leaves solenoidal fields alone."""
    n = 64
    grid = Grid(n, n, 1.0 / n, 0.0, 0.0)
    rng = np.random.default_rng(7)
    phi = np.zeros(grid.shape)
    X, Y = grid.cell_mesh()
    for k in range(1, 4):
        for l in range(1, 4):
            phi += rng.normal() * np.cos(np.pi * k * X) * np.cos(np.pi * l * Y)
    vel = VelocityField.zeros(grid)
    vel.u[1:-1, :] = (phi[1:, :] - phi[:-1, :]) / grid.h
    vel.v[:, 1:-1] = (phi[:, 1:] - phi[:, :-1]) / grid.h
    out, _ = project_incompressible(vel, grid)
    resid = max(float(np.max(np.abs(out.u))), float(np.max(np.abs(out.v))))
    scale = max(float(np.max(np.abs(vel.u))), 1e-30)
    ok1 = resid < 1e-10 * scale

    out2, _ = project_incompressible(out, grid)
    drift = max(float(np.max(np.abs(out2.u - out.u))),
                float(np.max(np.abs(out2.v - out.v))))
    ok2 = drift < 1e-12 * max(scale, 1.0)
    return _report(stream, "pressure projection", ok1 and ok2,
                   f"gradient residual {resid:.2e}, idempotence drift {drift:.2e}")


def check_rigid_field(stream) -> bool:
    """Rigid velocity fields are exactly divergence- and strain-free."""
    n = 64
    grid = Grid(n, n, 1.0 / n, 0.0, 0.0)
    pose = RigidPose(x_c=np.array([0.5, 0.5]), v_c=np.array([0.3, -0.2]), w=1.7)
    vel = rigid_velocity_field(pose, grid)
    div = float(np.max(np.abs(divergence(vel))))
    shape = ShapeSpec(kind="disk", radius=0.25, center=[0.5, 0.5])
    phase = build_phase_map(pose, shape, grid, 1.0, 1.0, 1.0, 1.0)
    strain = max_interior_strain(vel, phase)
    adv_u, adv_v = advect_operator(vel, vel)
    e_leak = abs(float(np.sum(vel.u * adv_u)) + float(np.sum(vel.v * adv_v)))
    ok = div < 1e-12 and strain < 1e-12 and e_leak < 1e-10
    return _report(stream, "rigid velocity field identities", ok,
                   f"div {div:.2e}, strain {strain:.2e}, advective energy {e_leak:.2e}")


def run_validation_suite(fast: bool = False, stream=None) -> bool:
    stream = stream or sys.stdout
    n_field = 128 if fast else 256
    results = [
        check_disk_in_uniform_field(n_field, stream),
        check_radial_point_charge(stream),
        check_heat_kernel(stream),
        check_boltzmann_equilibrium(stream),
        check_projection(stream),
        check_rigid_field(stream),
    ]
    ok = all(results)
    print(f"{sum(results)}/{len(results)} oracle checks passed", file=stream)
    return ok
