"""Rigid pose, phase map, rigid transport, and gap tests."""

import numpy as np
import pytest

from pnpfluid import (GeometryError, Grid, InvariantViolation, RigidPose,
                      ShapeSpec, advance_pose, build_phase_map, divergence,
                      gap_to_wall, max_interior_strain, rigid_velocity_field,
                      transport_fixed_charge)
from pnpfluid.initial import bump


def make_grid(n=64, half=1.0):
    return Grid(n, n, 2.0 * half / n, -half, -half)


def disk(radius=0.3, center=(0.0, 0.0)):
    return ShapeSpec(kind="disk", radius=radius, center=list(center))


# --- pose -------------------------------------------------------------------

def test_rotation_orthonormal_over_random_angles():
    rng = np.random.default_rng(1)
    for theta in rng.uniform(-20, 20, size=50):
        pose = RigidPose(x_c=np.zeros(2), theta=float(theta))
        Q = pose.Q
        assert np.max(np.abs(Q.T @ Q - np.eye(2))) < 1e-12
        assert abs(np.linalg.det(Q) - 1.0) < 1e-12


def test_advance_pose_at_rest_is_identity():
    pose = RigidPose(x_c=np.array([0.1, 0.2]))
    out = advance_pose(pose, 0.5)
    assert np.array_equal(out.x_c, pose.x_c)
    assert out.theta == pose.theta


def test_advance_pose_translation_and_rotation():
    pose = RigidPose(x_c=np.zeros(2), v_c=np.array([1.0, 0.0]))
    out = advance_pose(pose, 0.5)
    assert np.allclose(out.x_c, [0.5, 0.0])

    pose = RigidPose(x_c=np.zeros(2), w=np.pi)
    out = advance_pose(pose, 1.0)
    assert np.allclose(out.Q, [[-1, 0], [0, -1]], atol=1e-12)
    assert np.max(np.abs(out.Q.T @ out.Q - np.eye(2))) < 1e-12


def test_advance_pose_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        advance_pose(RigidPose(x_c=np.zeros(2)), 0.0)


# --- phase map ---------------------------------------------------------------

def test_uniform_kappa_gives_unit_faces():
    grid = make_grid(48)
    phase = build_phase_map(RigidPose(x_c=np.zeros(2)), disk(), grid,
                            1.0, 1.0, 2.0, 1.0)
    assert np.all(phase.kappa_x == 1.0)
    assert np.all(phase.kappa_y == 1.0)


def test_chi_area_converges_to_disk_area():
    r = 0.3
    errs = []
    for n in (64, 128, 256):
        grid = make_grid(n)
        phase = build_phase_map(RigidPose(x_c=np.zeros(2)), disk(r), grid,
                                1.0, 1.0, 1.0, 1.0)
        area = float(np.sum(phase.chi_body)) * grid.cell_area
        errs.append(abs(area - np.pi * r * r))
    assert errs[0] < 0.01 * np.pi * r * r
    assert errs[2] < errs[0]
    # at least first order in h
    assert errs[2] <= 0.55 * errs[0]


def test_chi_translation_equivariance_on_aligned_shift():
    n = 64
    grid = Grid(n, n, 2.0 ** -5, 0.0, 0.0)   # power-of-two spacing
    shape = disk(0.3, center=(1.0, 1.0))
    base = build_phase_map(RigidPose(x_c=np.array([1.0, 1.0])), shape, grid,
                           1.0, 1.0, 1.0, 1.0)
    k = 5
    shifted = build_phase_map(
        RigidPose(x_c=np.array([1.0 + k * grid.h, 1.0])), shape, grid,
        1.0, 1.0, 1.0, 1.0)
    assert np.allclose(shifted.chi_body[k:, :], base.chi_body[:-k, :],
                       rtol=0.0, atol=1e-13)


def test_chi_in_unit_interval_and_sharp_outside_band():
    grid = make_grid(96)
    phase = build_phase_map(RigidPose(x_c=np.zeros(2)), disk(), grid,
                            1.0, 1.0, 1.0, 1.0)
    chi = phase.chi_body
    assert np.all((chi >= 0.0) & (chi <= 1.0))
    X, Y = grid.cell_mesh()
    sd = np.hypot(X, Y) - 0.3
    assert np.all(chi[sd > grid.h] == 0.0)
    assert np.all(chi[sd < -grid.h] == 1.0)


def test_mu_volume_drift_over_random_poses():
    grid = make_grid(64)
    shape = disk(0.3)
    rng = np.random.default_rng(42)
    ref = None
    worst = 0.0
    for _ in range(1000):
        x = rng.uniform(-0.4, 0.4, size=2)
        th = rng.uniform(0, 2 * np.pi)
        phase = build_phase_map(RigidPose(x_c=x, theta=th), shape, grid,
                                1.0, 1.0, 3.0, 1.0)
        tot = float(np.sum(phase.mu)) * grid.cell_area
        if ref is None:
            ref = tot
        worst = max(worst, abs(tot - ref) / ref)
    assert worst < 2.0 * grid.h   # O(h) relative tolerance band


def test_body_touching_wall_raises():
    grid = make_grid(32)
    with pytest.raises(GeometryError):
        build_phase_map(RigidPose(x_c=np.array([0.8, 0.0])), disk(0.3), grid,
                        1.0, 1.0, 1.0, 1.0)


# --- gap ---------------------------------------------------------------------

def test_gap_centered_disk():
    grid = Grid(64, 64, 8.0 / 64, -4.0, -4.0)
    assert gap_to_wall(RigidPose(x_c=np.zeros(2)), disk(1.0), grid) == \
        pytest.approx(3.0)


def test_gap_touching_wall_is_zero():
    grid = Grid(64, 64, 8.0 / 64, -4.0, -4.0)
    pose = RigidPose(x_c=np.array([3.0, 0.0]))
    assert gap_to_wall(pose, disk(1.0), grid) == pytest.approx(0.0)


def test_gap_matches_dense_boundary_sampling():
    grid = Grid(64, 64, 8.0 / 64, -4.0, -4.0)
    pose = RigidPose(x_c=np.array([1.3, -0.7]))
    shape = disk(0.9)
    th = np.linspace(0, 2 * np.pi, 200000, endpoint=False)
    bx = pose.x_c[0] + 0.9 * np.cos(th)
    by = pose.x_c[1] + 0.9 * np.sin(th)
    brute = float(np.min(grid.wall_distance(bx, by)))
    assert abs(gap_to_wall(pose, shape, grid) - brute) < 1e-6


def test_gap_monotone_on_straight_approach():
    grid = make_grid(32)
    shape = disk(0.2)
    gaps = [gap_to_wall(RigidPose(x_c=np.array([x, 0.0])), shape, grid)
            for x in np.linspace(0.0, 0.7, 30)]
    assert all(g1 >= g2 - 1e-15 for g1, g2 in zip(gaps, gaps[1:]))


# --- fixed-charge transport ---------------------------------------------------

def _reference_blob(grid, radius=0.18, amplitude=2.0):
    X, Y = grid.cell_mesh()
    return bump(X, Y, 0.0, 0.0, radius, amplitude)


def test_transport_identity_is_bitwise():
    grid = Grid(64, 64, 2.0 ** -5, -1.0, -1.0)
    rho0 = _reference_blob(grid)
    pose = RigidPose(x_c=np.zeros(2))
    out = transport_fixed_charge(rho0, pose, grid, shape=disk())
    assert np.array_equal(out, rho0)


def test_transport_quarter_turn_of_radial_blob():
    grid = make_grid(64)
    rho0 = _reference_blob(grid)
    pose = RigidPose(x_c=np.zeros(2), theta=np.pi / 2)
    out = transport_fixed_charge(rho0, pose, grid, shape=disk())
    assert np.max(np.abs(out - rho0)) < 2e-3 * np.max(rho0)


def test_transport_conserves_total_charge_over_random_poses():
    grid = make_grid(64)
    rho0 = _reference_blob(grid)
    total0 = float(np.sum(rho0)) * grid.cell_area
    shape = disk()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        pose = RigidPose(x_c=rng.uniform(-0.3, 0.3, size=2),
                         theta=rng.uniform(0, 2 * np.pi),
                         x_c0=np.zeros(2))
        out = transport_fixed_charge(rho0, pose, grid, shape=shape)
        total = float(np.sum(out)) * grid.cell_area
        worst = max(worst, abs(total - total0) / abs(total0))
    assert worst < 1e-3   # interpolation quadrature tolerance


def test_transport_support_leak_raises():
    grid = make_grid(64)
    X, Y = grid.cell_mesh()
    rho0 = bump(X, Y, 0.45, 0.0, 0.1, 1.0)    # sticks out of the r=0.3 body
    with pytest.raises(InvariantViolation):
        transport_fixed_charge(rho0, RigidPose(x_c=np.zeros(2)), grid,
                               shape=disk(0.3))


# --- rigid velocity field ------------------------------------------------------

def test_rigid_field_zero_and_constant():
    grid = make_grid(32)
    vel = rigid_velocity_field(RigidPose(x_c=np.zeros(2)), grid)
    assert not vel.u.any() and not vel.v.any()
    vel = rigid_velocity_field(
        RigidPose(x_c=np.zeros(2), v_c=np.array([1.0, 0.0])), grid)
    assert np.all(vel.u == 1.0) and np.all(vel.v == 0.0)


def test_rigid_field_divergence_and_strain_free():
    grid = make_grid(64)
    pose = RigidPose(x_c=np.array([0.1, -0.2]), v_c=np.array([0.4, 0.3]), w=1.0)
    vel = rigid_velocity_field(pose, grid)
    assert np.max(np.abs(divergence(vel))) < 1e-12
    phase = build_phase_map(pose, disk(0.3, center=(0.1, -0.2)), grid,
                            1.0, 1.0, 1.0, 1.0)
    assert max_interior_strain(vel, phase) < 1e-12
