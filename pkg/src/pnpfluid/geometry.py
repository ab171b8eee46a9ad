"""Rigid-body pose, phase indicator fields, and rigid transport.

The particle is a rigid body moving through the enclosure.  Its pose is a
center position plus a rotation angle; the velocity state (v_c, w) rides on
the same object because the body's velocities are produced by the fluid
solver's rigidity projection each step.

The phase map rasterizes the body onto the grid:

  * ``chi_body``   smoothed indicator in [0,1], linear one-cell ramp of the
                   signed distance (grid-level regularization of the sharp
                   indicator; exactly 0/1 outside a one-cell band),
  * ``mu``         Eulerian density  mu_p*chi + mu_f*(1-chi),
  * ``kappa_x/y``  face dielectric coefficients, harmonic average of the
                   sharp per-cell two-phase kappa (harmonic averaging is what
                   enforces continuity of kappa * normal flux across the
                   interface to first order),
  * ``fluid_mask`` sharp cell ownership used by the ion transport,
  * ``solid_u/v``  face masks (signed distance at face points) used by the
                   rigidity projection.

The fixed charge rho is never advected: it is re-sampled from the reference
distribution through the inverse rigid map each step, so its shape is exactly
invariant under the motion and the total charge drifts only by interpolation
quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeometryError, InvariantViolation
from .grid import Grid, VelocityField, bilinear_sample


@dataclass(frozen=True)
class RigidPose:
    """Position, orientation and velocities of the rigid body.

    ``x_c0`` is the reference (initial) center: the rigid map takes reference
    coordinates xi to Q(theta) (xi - x_c0) + x_c.
    """

    x_c: np.ndarray                 # current center, shape (2,)
    theta: float = 0.0              # rotation angle
    v_c: np.ndarray = None          # translational velocity, shape (2,)
    w: float = 0.0                  # angular velocity (scalar in 2D)
    x_c0: np.ndarray = None         # reference center (defaults to x_c)

    def __post_init__(self):
        object.__setattr__(self, "x_c", np.asarray(self.x_c, dtype=float))
        vc = np.zeros(2) if self.v_c is None else np.asarray(self.v_c, dtype=float)
        object.__setattr__(self, "v_c", vc)
        xc0 = self.x_c.copy() if self.x_c0 is None else np.asarray(self.x_c0, dtype=float)
        object.__setattr__(self, "x_c0", xc0)

    @property
    def Q(self) -> np.ndarray:
        """Rotation matrix, rebuilt from the angle (orthonormal by construction)."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def body_to_world(self, xi: np.ndarray, eta: np.ndarray):
        """Map reference coordinates to current coordinates."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        dx, dy = xi - self.x_c0[0], eta - self.x_c0[1]
        return self.x_c[0] + c * dx - s * dy, self.x_c[1] + s * dx + c * dy

    def world_to_body(self, x: np.ndarray, y: np.ndarray):
        """Inverse rigid map (current coordinates to reference coordinates)."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        dx, dy = x - self.x_c[0], y - self.x_c[1]
        return self.x_c0[0] + c * dx + s * dy, self.x_c0[1] - s * dx + c * dy


def advance_pose(pose: RigidPose, dt: float) -> RigidPose:
    """Advance center and angle by the pose's own velocities (exact rotation)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return replace(
        pose,
        x_c=pose.x_c + dt * pose.v_c,
        theta=pose.theta + dt * pose.w,
        x_c0=pose.x_c0,
    )


@dataclass(frozen=True)
class ShapeSpec:
    """Body shape in the reference frame: a disk or a simple closed polygon."""

    kind: str = "disk"
    radius: float = 1.0
    center: np.ndarray = None          # reference center
    vertices: np.ndarray = None        # (M, 2) polygon vertices, kind="polygon"

    def __post_init__(self):
        c = np.zeros(2) if self.center is None else np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)
        if self.kind == "disk":
            if not self.radius > 0:
                raise ValueError("disk radius must be positive")
        elif self.kind == "polygon":
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise ValueError("polygon needs at least 3 (x, y) vertices")
            object.__setattr__(self, "vertices", v)
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    def signed_distance_ref(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Signed distance in the reference frame (negative inside the body)."""
        if self.kind == "disk":
            return np.hypot(x - self.center[0], y - self.center[1]) - self.radius
        return _polygon_signed_distance(self.vertices, x, y)

    def signed_distance(self, pose: RigidPose, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Signed distance in the current frame under the given pose."""
        if self.kind == "disk":
            # rotation is irrelevant for a disk; only the center moves
            return np.hypot(x - pose.x_c[0], y - pose.x_c[1]) - self.radius
        xi, eta = pose.world_to_body(x, y)
        return self.signed_distance_ref(xi, eta)

    def boundary_points(self, pose: RigidPose, n: int = 256):
        """Sample points and outward unit normals on the current boundary."""
        if self.kind == "disk":
            th = (np.arange(n) + 0.5) * (2 * np.pi / n)
            nxv, nyv = np.cos(th), np.sin(th)
            bx = pose.x_c[0] + self.radius * nxv
            by = pose.x_c[1] + self.radius * nyv
            ds = 2 * np.pi * self.radius / n
            return bx, by, nxv, nyv, ds
        return _polygon_boundary_points(self, pose, n)

    def area(self) -> float:
        if self.kind == "disk":
            return np.pi * self.radius**2
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def moment_per_density(self) -> float:
        """Second moment about the centroid per unit density (disk: pi r^4 / 2)."""
        if self.kind == "disk":
            return 0.5 * np.pi * self.radius**4
        # dense quadrature over the bounding box of the polygon
        v = self.vertices
        lo, hi = v.min(axis=0), v.max(axis=0)
        n = 400
        gx = np.linspace(lo[0], hi[0], n)
        gy = np.linspace(lo[1], hi[1], n)
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        inside = _polygon_signed_distance(v, X, Y) < 0
        da = (gx[1] - gx[0]) * (gy[1] - gy[0])
        cx = X[inside].mean()
        cy = Y[inside].mean()
        return float(np.sum(((X - cx) ** 2 + (Y - cy) ** 2)[inside]) * da)


def _polygon_signed_distance(verts: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Signed distance to a simple closed polygon, vectorized over points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    px = x.ravel()[:, None]
    py = y.ravel()[:, None]
    ax, ay = verts[:, 0][None, :], verts[:, 1][None, :]
    bx = np.roll(verts[:, 0], -1)[None, :]
    by = np.roll(verts[:, 1], -1)[None, :]
    ex, ey = bx - ax, by - ay
    lsq = ex * ex + ey * ey
    t = np.clip(((px - ax) * ex + (py - ay) * ey) / lsq, 0.0, 1.0)
    dx = px - (ax + t * ex)
    dy = py - (ay + t * ey)
    dist = np.sqrt(np.min(dx * dx + dy * dy, axis=1))
    # even-odd crossing test for the sign
    inside = np.zeros(px.shape[0], dtype=bool)
    cond = (ay <= py) != (by <= py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (py - ay) * ex / np.where(ey == 0, np.inf, ey)
    crossings = np.sum(cond & (px < xint), axis=1)
    inside = (crossings % 2) == 1
    sd = np.where(inside, -dist, dist)
    return sd.reshape(x.shape)


def _polygon_boundary_points(shape: ShapeSpec, pose: RigidPose, n: int):
    v = shape.vertices
    seg = np.roll(v, -1, axis=0) - v
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    per = seglen.sum()
    s = (np.arange(n) + 0.5) * per / n
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    idx = np.searchsorted(cum, s, side="right") - 1
    idx = np.clip(idx, 0, len(v) - 1)
    frac = (s - cum[idx]) / seglen[idx]
    pts = v[idx] + frac[:, None] * seg[idx]
    # outward normal of each segment (assumes counterclockwise orientation)
    tx = seg[idx, 0] / seglen[idx]
    ty = seg[idx, 1] / seglen[idx]
    nxv, nyv = ty, -tx
    if shape.area() > 0 and _polygon_is_ccw(v):
        nxv, nyv = ty, -tx
    else:
        nxv, nyv = -ty, tx
    bx, by = pose.body_to_world(pts[:, 0], pts[:, 1])
    c, sn = np.cos(pose.theta), np.sin(pose.theta)
    nxr = c * nxv - sn * nyv
    nyr = sn * nxv + c * nyv
    return bx, by, nxr, nyr, per / n


def _polygon_is_ccw(v: np.ndarray) -> bool:
    x, y = v[:, 0], v[:, 1]
    return np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0


@dataclass
class PhaseMap:
    """Indicator, density, and dielectric fields derived from one pose."""

    chi_body: np.ndarray            # smoothed body indicator in [0,1], (nx, ny)
    mu: np.ndarray                  # Eulerian density field, (nx, ny)
    kappa_x: np.ndarray             # face dielectric, (nx+1, ny)
    kappa_y: np.ndarray             # face dielectric, (nx, ny+1)
    fluid_mask: np.ndarray          # sharp fluid ownership (bool), (nx, ny)
    solid_u: np.ndarray             # body mask on x-faces (bool), (nx+1, ny)
    solid_v: np.ndarray             # body mask on y-faces (bool), (nx, ny+1)
    mu_p: float
    mu_f: float
    kappa1: float
    kappa2: float
    grid: Grid = field(repr=False)
    shape: ShapeSpec | None = field(default=None, repr=False)
    pose: RigidPose | None = field(default=None, repr=False)

    @property
    def chi_fluid(self) -> np.ndarray:
        """Sharp fluid indicator as float (cells owned by the solvent)."""
        return self.fluid_mask.astype(float)

    def fluid_area(self) -> float:
        return float(np.sum(1.0 - self.chi_body) * self.grid.cell_area)


def _harmonic_faces(kappa_cell: np.ndarray, sd: np.ndarray, axis: int) -> np.ndarray:
    """Harmonic average of the two-phase kappa along the cell-center path.

    On faces whose neighbors straddle the interface, the signed distance
    locates the cut at fraction t of the path, and the harmonic mean weighs
    the two phases by their path fractions: 1/k = t/k_P + (1-t)/k_E.  Faces
    with same-phase neighbors reduce to that phase's value.
    """
    if axis == 0:
        kp, ke = kappa_cell[:-1, :], kappa_cell[1:, :]
        sp_, se = sd[:-1, :], sd[1:, :]
    else:
        kp, ke = kappa_cell[:, :-1], kappa_cell[:, 1:]
        sp_, se = sd[:, :-1], sd[:, 1:]
    denom = sp_ - se
    t = np.where(np.abs(denom) > 0, sp_ / np.where(denom == 0, 1.0, denom), 0.5)
    t = np.clip(t, 0.0, 1.0)
    straddle = (sp_ < 0) != (se < 0)
    # the P-side material fills fraction t of the path when the cut is at t
    mixed = 1.0 / (t / kp + (1.0 - t) / ke)
    plain = 2.0 * kp * ke / (kp + ke)
    return np.where(straddle, mixed, plain)


def all_fluid_phase(grid: Grid, kappa2: float = 1.0, mu_f: float = 1.0) -> PhaseMap:
    """Phase map of a body-free enclosure (pure solvent)."""
    nx, ny = grid.nx, grid.ny
    return PhaseMap(
        chi_body=np.zeros((nx, ny)),
        mu=np.full((nx, ny), mu_f),
        kappa_x=np.full((nx + 1, ny), kappa2),
        kappa_y=np.full((nx, ny + 1), kappa2),
        fluid_mask=np.ones((nx, ny), dtype=bool),
        solid_u=np.zeros((nx + 1, ny), dtype=bool),
        solid_v=np.zeros((nx, ny + 1), dtype=bool),
        mu_p=mu_f,
        mu_f=mu_f,
        kappa1=kappa2,
        kappa2=kappa2,
        grid=grid,
    )


def build_phase_map(
    pose: RigidPose,
    shape: ShapeSpec,
    grid: Grid,
    kappa1: float,
    kappa2: float,
    mu_p: float,
    mu_f: float,
) -> PhaseMap:
    """Rasterize the body at the given pose onto the grid.

    Raises GeometryError if the body touches the enclosure boundary: the run
    must already have stopped at its separation floor before this happens.
    """
    if gap_to_wall(pose, shape, grid) <= 0.0:
        raise GeometryError("body touches the enclosure boundary")

    X, Y = grid.cell_mesh()
    sd = shape.signed_distance(pose, X, Y)
    chi = np.clip(0.5 - sd / grid.h, 0.0, 1.0)
    solid_cell = sd < 0.0
    kappa_cell = np.where(solid_cell, kappa1, kappa2)

    kx = np.empty((grid.nx + 1, grid.ny))
    kx[1:-1, :] = _harmonic_faces(kappa_cell, sd, axis=0)
    kx[0, :] = kappa_cell[0, :]
    kx[-1, :] = kappa_cell[-1, :]
    ky = np.empty((grid.nx, grid.ny + 1))
    ky[:, 1:-1] = _harmonic_faces(kappa_cell, sd, axis=1)
    ky[:, 0] = kappa_cell[:, 0]
    ky[:, -1] = kappa_cell[:, -1]

    Xu, Yu = grid.uface_mesh()
    Xv, Yv = grid.vface_mesh()
    solid_u = shape.signed_distance(pose, Xu, Yu) < 0.0
    solid_v = shape.signed_distance(pose, Xv, Yv) < 0.0

    return PhaseMap(
        chi_body=chi,
        mu=mu_p * chi + mu_f * (1.0 - chi),
        kappa_x=kx,
        kappa_y=ky,
        fluid_mask=~solid_cell,
        solid_u=solid_u,
        solid_v=solid_v,
        mu_p=mu_p,
        mu_f=mu_f,
        kappa1=kappa1,
        kappa2=kappa2,
        grid=grid,
        shape=shape,
        pose=pose,
    )


def gap_to_wall(pose: RigidPose, shape: ShapeSpec, grid: Grid) -> float:
    """Distance between the body and the enclosure boundary (0 if touching)."""
    if shape.kind == "disk":
        cx, cy = pose.x_c
        gap = min(cx - grid.x0, grid.x1 - cx, cy - grid.y0, grid.y1 - cy) - shape.radius
        return max(gap, 0.0)
    bx, by, _, _, _ = shape.boundary_points(pose, n=2048)
    return max(float(np.min(grid.wall_distance(bx, by))), 0.0)


def transport_fixed_charge(
    rho0: np.ndarray,
    pose: RigidPose,
    grid: Grid,
    shape: ShapeSpec | None = None,
) -> np.ndarray:
    """Rigidly transport the reference fixed-charge field to the current pose.

    rho(x) = rho0 at the pulled-back point, sampled bilinearly from the
    reference grid; identically zero wherever the pulled-back point falls
    outside the reference support box.  Total charge is conserved up to
    interpolation quadrature error.
    """
    X, Y = grid.cell_mesh()
    xi, eta = pose.world_to_body(X, Y)
    rho = bilinear_sample(rho0, grid, xi, eta)
    # clamp-to-edge sampling must not smear charge: zero anything pulled back
    # outside the reference lattice
    out = (
        (xi < grid.x0 + 0.5 * grid.h)
        | (xi > grid.x1 - 0.5 * grid.h)
        | (eta < grid.y0 + 0.5 * grid.h)
        | (eta > grid.y1 - 0.5 * grid.h)
    )
    rho = np.where(out, 0.0, rho)
    if shape is not None:
        sd = shape.signed_distance(pose, X, Y)
        leak = np.abs(rho[sd >= 0.0])
        scale = float(np.max(np.abs(rho0))) if rho0.size else 0.0
        if scale > 0 and leak.size and float(np.max(leak)) > 1e-9 * scale:
            raise InvariantViolation("fixed charge leaked outside the body")
    return rho


def rigid_velocity_field(pose: RigidPose, grid: Grid) -> VelocityField:
    """Sample v_c + w x (x - x_c) on the staggered faces."""
    Xu, Yu = grid.uface_mesh()
    Xv, Yv = grid.vface_mesh()
    u = pose.v_c[0] - pose.w * (Yu - pose.x_c[1])
    v = pose.v_c[1] + pose.w * (Xv - pose.x_c[0])
    return VelocityField(u, v, grid)
