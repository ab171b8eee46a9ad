"""Ion transport: flux structure, conservation, equilibrium, stability."""

import numpy as np
import pytest

from pnpfluid import (Grid, RigidPose, ShapeSpec, SpeciesParams, StabilityError,
                      VelocityField, all_fluid_phase, boltzmann_profile,
                      build_phase_map, np_face_fluxes, np_stable_dt,
                      redistribute_covered, step_np, total_moles)
from pnpfluid.initial import bump


def fluid_grid(n=64):
    grid = Grid(n, n, 1.0 / n)
    return grid, all_fluid_phase(grid)


def test_uniform_state_has_no_fluxes():
    grid, phase = fluid_grid(32)
    N = np.full(grid.shape, 3.0)
    psi = np.full(grid.shape, 1.23)
    Fx, Fy = np_face_fluxes(N, VelocityField.zeros(grid), psi,
                            SpeciesParams(Z=1, d=0.7), phase.chi_fluid,
                            1.0, grid)
    assert np.max(np.abs(Fx)) < 1e-14 and np.max(np.abs(Fy)) < 1e-14


def test_step_profile_is_pure_fickian():
    grid, phase = fluid_grid(16)
    N = np.zeros(grid.shape)
    N[: 8, :] = 2.0
    d = 0.7
    Fx, Fy = np_face_fluxes(N, None, np.zeros(grid.shape),
                            SpeciesParams(Z=1, d=d), phase.chi_fluid, 1.0, grid)
    # across the step face the flux is -d dN/dx = -d (0-2)/h
    assert Fx[8, 0] == pytest.approx(-d * (0.0 - 2.0) / grid.h)
    assert np.max(np.abs(Fy)) == 0.0


def test_boltzmann_fluxes_cancel_at_second_order():
    sp = SpeciesParams(Z=2, d=1.3)
    errs = []
    for n in (48, 96):
        grid, phase = fluid_grid(n)
        X, Y = grid.cell_mesh()
        psi = 0.5 * np.cos(np.pi * X) * np.cos(np.pi * Y)
        N = boltzmann_profile(psi, sp, 1.0, phase, e_over_kBtheta=0.8)
        Fx, Fy = np_face_fluxes(N, None, psi, sp, phase.chi_fluid, 0.8, grid)
        errs.append(max(float(np.max(np.abs(Fx))), float(np.max(np.abs(Fy)))))
    assert errs[0] / errs[1] > 3.4     # O(h^2) per-face cancellation


def test_step_uniform_state_unchanged():
    grid, phase = fluid_grid(24)
    N = np.full(grid.shape, 1.5)
    out = step_np(N, VelocityField.zeros(grid), np.zeros(grid.shape),
                  SpeciesParams(Z=1, d=1.0), phase, 1e-4)
    assert np.array_equal(out, N)


def test_pure_diffusion_variance_growth():
    """x-variance of a compact blob grows by 2 d dt per step."""
    grid, phase = fluid_grid(96)
    sp = SpeciesParams(Z=0, d=0.4)
    X, Y = grid.cell_mesh()
    N = bump(X, Y, 0.5, 0.5, 0.2, 1.0)
    psi = np.zeros(grid.shape)
    dt = np_stable_dt(None, psi, sp, grid)

    def xvar(f):
        m = float(np.sum(f))
        mx = float(np.sum(f * X)) / m
        return float(np.sum(f * (X - mx) ** 2)) / m

    v0 = xvar(N)
    steps = 50
    for _ in range(steps):
        N = step_np(N, None, psi, sp, phase, dt)
    growth = (xvar(N) - v0) / (steps * dt)
    assert growth == pytest.approx(2.0 * sp.d, rel=1e-3)


def test_exact_molar_conservation_any_inputs():
    grid, phase = fluid_grid(48)
    rng = np.random.default_rng(8)
    X, Y = grid.cell_mesh()
    N = np.abs(rng.normal(1.0, 0.2, grid.shape))
    psi = np.sin(3 * X) * np.cos(2 * Y)
    vel = VelocityField(rng.normal(0, 0.5, (grid.nx + 1, grid.ny)),
                        rng.normal(0, 0.5, (grid.nx, grid.ny + 1)), grid)
    sp = SpeciesParams(Z=1, d=0.5)
    dt = np_stable_dt(vel, psi, sp, grid)
    total0 = total_moles(N, phase)
    for _ in range(20):
        N = step_np(N, vel, psi, sp, phase, dt)
    assert total_moles(N, phase) == pytest.approx(total0, rel=1e-13)


def test_stable_dt_pinned_diffusive_value():
    grid = Grid(10, 10, 0.1)
    dt = np_stable_dt(VelocityField.zeros(grid), np.zeros(grid.shape),
                      SpeciesParams(Z=1, d=1.0), grid)
    assert dt == pytest.approx(0.9 * 0.0025)


def test_stable_dt_convection_limited():
    grid = Grid(10, 10, 0.1)
    vel = VelocityField(np.full((11, 10), 50.0), np.zeros((10, 11)), grid)
    sp = SpeciesParams(Z=1, d=1.0)
    dt = np_stable_dt(vel, np.zeros(grid.shape), sp, grid)
    assert dt < 0.9 * grid.h * grid.h / (4 * sp.d)
    assert dt <= 0.9 * grid.h / 50.0


def test_stability_envelope_returned_vs_4x():
    """Stable at the returned dt; blows up well before 4x that dt."""
    grid, phase = fluid_grid(32)
    sp = SpeciesParams(Z=1, d=1.0)
    X, Y = grid.cell_mesh()
    psi = 2.0 * np.sin(2 * np.pi * X)
    N0 = 1.0 + 0.5 * np.sin(2 * np.pi * (X + Y))
    dt = np_stable_dt(None, psi, sp, grid)
    N = N0.copy()
    for _ in range(200):
        N = step_np(N, None, psi, sp, phase, dt)
    assert np.min(N) >= -1e-12 and np.all(np.isfinite(N))

    with pytest.raises((StabilityError, FloatingPointError)):
        N = N0.copy()
        with np.errstate(over="raise", invalid="raise"):
            for _ in range(200):
                N = step_np(N, None, psi, sp, phase, 4.0 * dt)


def test_nonnegativity_random_stable_steps():
    """10^4 random explicit steps at the advertised stable dt stay >= -1e-12."""
    rng = np.random.default_rng(123)
    grid, phase = fluid_grid(24)
    X, Y = grid.cell_mesh()
    sp = SpeciesParams(Z=1, d=0.8)
    worst = 0.0
    for _ in range(10000):
        kx, ky = rng.integers(1, 4, size=2)
        psi = rng.uniform(0.2, 2.0) * np.sin(kx * np.pi * X + rng.uniform(0, 6)) \
            * np.sin(ky * np.pi * Y + rng.uniform(0, 6))
        N = np.abs(rng.normal(1.0, 0.5, grid.shape))
        vel = VelocityField(rng.normal(0, 1.0, (grid.nx + 1, grid.ny)),
                            rng.normal(0, 1.0, (grid.nx, grid.ny + 1)), grid)
        dt = np_stable_dt(vel, psi, sp, grid)
        out = step_np(N, vel, psi, sp, phase, dt)
        worst = min(worst, float(np.min(out)))
    assert worst >= -1e-12


def test_boltzmann_profile_limits():
    grid, phase = fluid_grid(32)
    psi = np.full(grid.shape, 2.0)
    N = boltzmann_profile(psi, SpeciesParams(Z=1, d=1.0), 3.0, phase)
    area = phase.fluid_area()
    assert np.allclose(N, 3.0 / area)
    X, _ = grid.cell_mesh()
    N = boltzmann_profile(np.sin(X), SpeciesParams(Z=0, d=1.0), 3.0, phase)
    assert np.allclose(N, 3.0 / area)


def test_total_moles_cases():
    grid, phase = fluid_grid(32)
    assert total_moles(np.zeros(grid.shape), phase) == 0.0
    shape = ShapeSpec(kind="disk", radius=0.2, center=[0.5, 0.5])
    body_phase = build_phase_map(RigidPose(x_c=np.array([0.5, 0.5])), shape,
                                 grid, 1.0, 1.0, 1.0, 1.0)
    ones = np.where(body_phase.fluid_mask, 1.0, 0.0)
    area = float(np.count_nonzero(body_phase.fluid_mask)) * grid.cell_area
    assert total_moles(ones, body_phase) == pytest.approx(area, rel=1e-13)
    # quadrature sense: sharp-mask area approaches |O| - pi r^2 as h -> 0
    assert area == pytest.approx(1.0 - np.pi * 0.04, abs=4 * grid.h)


def test_redistribute_conserves_through_body_motion():
    grid = Grid(64, 64, 1.0 / 64)
    shape = ShapeSpec(kind="disk", radius=0.2, center=[0.4, 0.5])
    p0 = RigidPose(x_c=np.array([0.4, 0.5]))
    p1 = RigidPose(x_c=np.array([0.4 + 3.3 * grid.h, 0.5]), x_c0=p0.x_c0)
    ph0 = build_phase_map(p0, shape, grid, 1.0, 1.0, 1.0, 1.0)
    ph1 = build_phase_map(p1, shape, grid, 1.0, 1.0, 1.0, 1.0)
    rng = np.random.default_rng(4)
    N = np.where(ph0.fluid_mask, np.abs(rng.normal(1, 0.3, grid.shape)), 0.0)
    moved = redistribute_covered(N, ph0.fluid_mask, ph1.fluid_mask, grid)
    assert np.all(moved[~ph1.fluid_mask] == 0.0)
    assert float(np.sum(moved)) == pytest.approx(float(np.sum(N)), rel=1e-14)
