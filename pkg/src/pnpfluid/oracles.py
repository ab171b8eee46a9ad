"""Analytic/spectral reference solutions for the dielectric disk.

Independent of the finite-volume solver: the reference potential is built
from a three-part decomposition on each side of the disk interface,

    psi_region = (newtonian + harmonic_correction) / kappa_region,

where the Newtonian part carries the charges (free-space log kernel, direct
summation over source cells plus exact terms for point charges) and the
harmonic corrections are truncated circular-harmonic series fitted by least
squares to the interface continuity/flux conditions and the wall Dirichlet
data.  For charge-free data (e.g. a uniform applied field) the construction
is purely spectral and converges exponentially in the number of modes.

Used solely to validate the grid solver; never part of the time stepping.
"""

from __future__ import annotations

import numpy as np

from .errors import OracleError
from .geometry import ShapeSpec
from .poisson import ElectrostaticBC

_SELF_CELL_CONST = None


def _self_cell_constant() -> float:
    """c0 = integral of ln|y| over the centered unit square (Gauss-Legendre)."""
    global _SELF_CELL_CONST
    if _SELF_CELL_CONST is None:
        xg, wg = np.polynomial.legendre.leggauss(96)
        x = 0.25 * (xg + 1.0)          # map to (0, 1/2)
        w = 0.25 * wg
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        _SELF_CELL_CONST = float(4.0 * np.sum(W * 0.5 * np.log(X**2 + Y**2)))
    return _SELF_CELL_CONST


def _newtonian(f: np.ndarray, grid, px: np.ndarray, py: np.ndarray,
               point_charges, want_gradient: bool = False):
    """Newtonian potential w with Lap w = f (f sampled on cells), evaluated
    at arbitrary points; point charges q contribute -2 q ln r (their f is
    -4 pi q delta)."""
    out = np.zeros(px.shape)
    gx = np.zeros(px.shape) if want_gradient else None
    gy = np.zeros(px.shape) if want_gradient else None

    mask = f != 0.0
    if mask.any():
        X, Y = grid.cell_mesh()
        sx = X[mask]
        sy = Y[mask]
        sval = f[mask] * grid.cell_area / (2.0 * np.pi)
        self_term = np.log(grid.h) + _self_cell_constant()
        chunk = 4096
        pfx = px.ravel()
        pfy = py.ravel()
        of = out.ravel()
        gfx = gx.ravel() if want_gradient else None
        gfy = gy.ravel() if want_gradient else None
        for start in range(0, pfx.size, chunk):
            sl = slice(start, min(start + chunk, pfx.size))
            dx = pfx[sl, None] - sx[None, :]
            dy = pfy[sl, None] - sy[None, :]
            r2 = dx * dx + dy * dy
            zero = r2 == 0.0
            lnr = 0.5 * np.log(np.where(zero, 1.0, r2))
            lnr = np.where(zero, self_term, lnr)
            of[sl] += lnr @ sval
            if want_gradient:
                r2s = np.where(zero, 1.0, r2)
                gfx[sl] += (np.where(zero, 0.0, dx / r2s)) @ sval
                gfy[sl] += (np.where(zero, 0.0, dy / r2s)) @ sval

    for q, (qx, qy) in (point_charges or []):
        dx = px - qx
        dy = py - qy
        r2 = dx * dx + dy * dy
        out += -q * np.log(r2)          # = -2 q ln r
        if want_gradient:
            gx += -2.0 * q * dx / r2
            gy += -2.0 * q * dy / r2
    if want_gradient:
        return out, gx, gy
    return out


def _inner_basis(r, th, a, n_modes):
    """Regular harmonics (r/a)^n {cos, sin}(n th); columns of the design block."""
    cols = [np.ones_like(r)]
    rho = r / a
    for n in range(1, n_modes + 1):
        rn = rho**n
        cols.append(rn * np.cos(n * th))
        cols.append(rn * np.sin(n * th))
    return cols


def _inner_basis_dr(r, th, a, n_modes):
    cols = [np.zeros_like(r)]
    for n in range(1, n_modes + 1):
        rn = n * r**(n - 1) / a**n
        cols.append(rn * np.cos(n * th))
        cols.append(rn * np.sin(n * th))
    return cols


def _outer_basis(r, th, a, R, n_modes):
    """1, ln(r/a), growing modes (r/R)^n and decaying modes (a/r)^n."""
    cols = [np.ones_like(r), np.log(r / a)]
    for n in range(1, n_modes + 1):
        grow = (r / R) ** n
        decay = (a / r) ** n
        cols.append(grow * np.cos(n * th))
        cols.append(grow * np.sin(n * th))
        cols.append(decay * np.cos(n * th))
        cols.append(decay * np.sin(n * th))
    return cols


def _outer_basis_dr(r, th, a, R, n_modes):
    cols = [np.zeros_like(r), 1.0 / r]
    for n in range(1, n_modes + 1):
        dgrow = n * r**(n - 1) / R**n
        ddecay = -n * a**n / r**(n + 1)
        cols.append(dgrow * np.cos(n * th))
        cols.append(dgrow * np.sin(n * th))
        cols.append(ddecay * np.cos(n * th))
        cols.append(ddecay * np.sin(n * th))
    return cols


def oracle_decomposition_disk(rho_plus_ions: np.ndarray, bc: ElectrostaticBC,
                              disk: ShapeSpec, kappas: tuple[float, float],
                              n_modes: int = 32,
                              point_charges=None) -> np.ndarray:
    """Reference potential for a disk at rest inside the rectangular enclosure.

    ``rho_plus_ions`` is the combined charge density (the Poisson source is
    -4 pi times it); charges must stay away from the interface.  Optional
    ``point_charges`` is a list of (q, (x, y)) handled analytically.  Returns
    the reference potential sampled at cell centers.
    """
    if disk.kind != "disk":
        raise OracleError("decomposition oracle requires a disk body")
    grid = bc.grid
    a = disk.radius
    cx, cy = float(disk.center[0]), float(disk.center[1])
    k1, k2 = kappas
    f = -4.0 * np.pi * np.asarray(rho_plus_ions, dtype=float)

    # collocation points: interface circle and enclosure walls
    m_circ = max(8 * n_modes, 256)
    th_c = (np.arange(m_circ) + 0.5) * (2 * np.pi / m_circ)
    cxp = cx + a * np.cos(th_c)
    cyp = cy + a * np.sin(th_c)

    xs = grid.xc()
    ys = grid.yc()
    wx = np.concatenate([xs, xs,
                         np.full(grid.ny, grid.x0), np.full(grid.ny, grid.x1)])
    wy = np.concatenate([np.full(grid.nx, grid.y0), np.full(grid.nx, grid.y1),
                         ys, ys])
    wpsi = np.concatenate([bc.bottom, bc.top, bc.left, bc.right])

    corners = np.hypot(
        np.array([grid.x0, grid.x0, grid.x1, grid.x1]) - cx,
        np.array([grid.y0, grid.y1, grid.y0, grid.y1]) - cy,
    )
    R = float(np.max(corners))

    pc = point_charges
    w_c, wgx_c, wgy_c = _newtonian(f, grid, cxp, cyp, pc, want_gradient=True)
    w_wall = _newtonian(f, grid, wx, wy, pc)

    r_w = np.hypot(wx - cx, wy - cy)
    th_w = np.arctan2(wy - cy, wx - cx)

    n_in = 1 + 2 * n_modes
    n_out = 2 + 4 * n_modes
    ncols = n_in + n_out
    rows = 2 * m_circ + wx.size
    A = np.zeros((rows, ncols))
    b = np.zeros(rows)

    # continuity on the circle:  chi1/k1 - chi2/k2 = w (1/k2 - 1/k1)
    Bi = _inner_basis(np.full(m_circ, a), th_c, a, n_modes)
    Bo = _outer_basis(np.full(m_circ, a), th_c, a, R, n_modes)
    for j, col in enumerate(Bi):
        A[:m_circ, j] = col / k1
    for j, col in enumerate(Bo):
        A[:m_circ, n_in + j] = -col / k2
    b[:m_circ] = w_c * (1.0 / k2 - 1.0 / k1)

    # flux on the circle:  d_r chi1 - d_r chi2 = 0   (scaled by a)
    Bi = _inner_basis_dr(np.full(m_circ, a), th_c, a, n_modes)
    Bo = _outer_basis_dr(np.full(m_circ, a), th_c, a, R, n_modes)
    radial_w = wgx_c * np.cos(th_c) + wgy_c * np.sin(th_c)   # shared: cancels
    for j, col in enumerate(Bi):
        A[m_circ:2 * m_circ, j] = a * col
    for j, col in enumerate(Bo):
        A[m_circ:2 * m_circ, n_in + j] = -a * col
    b[m_circ:2 * m_circ] = 0.0 * radial_w

    # Dirichlet on the walls:  chi2/k2 = Psi - w/k2
    Bo = _outer_basis(r_w, th_w, a, R, n_modes)
    for j, col in enumerate(Bo):
        A[2 * m_circ:, n_in + j] = col / k2
    b[2 * m_circ:] = wpsi - w_wall / k2

    coeffs, _, _, _ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.linalg.norm(A @ coeffs - b))
    scale = float(np.linalg.norm(b))
    if scale > 0 and resid > 1e-6 * scale:
        raise OracleError(
            f"harmonic series did not converge (relative residual "
            f"{resid / scale:.3e}); increase n_modes")

    # evaluate on the grid
    X, Y = grid.cell_mesh()
    w_grid = _newtonian(f, grid, X, Y, pc)
    r = np.hypot(X - cx, Y - cy)
    th = np.arctan2(Y - cy, X - cx)
    inner = r < a
    psi = np.empty_like(w_grid)

    r_in = np.where(inner, r, a)
    chi1 = np.zeros_like(w_grid)
    for j, col in enumerate(_inner_basis(r_in, th, a, n_modes)):
        chi1 += coeffs[j] * col
    r_out = np.where(inner, a, r)
    chi2 = np.zeros_like(w_grid)
    for j, col in enumerate(_outer_basis(r_out, th, a, R, n_modes)):
        chi2 += coeffs[n_in + j] * col

    psi[inner] = ((w_grid + chi1) / k1)[inner]
    psi[~inner] = ((w_grid + chi2) / k2)[~inner]
    return psi


def radial_transmission_potential(q: float, a: float, k1: float, k2: float,
                                  r: np.ndarray, r_ref: float) -> np.ndarray:
    """Closed form for a point charge q at the center of a dielectric disk.

    Pure radial problem: kappa psi' 2 pi r = -4 pi q gives psi' = -2q/(kappa r)
    in each region; constants fixed by continuity at r=a and psi(r_ref)=0.
    """
    c2 = (2.0 * q / k2) * np.log(r_ref)
    c1 = c2 + 2.0 * q * np.log(a) * (1.0 / k1 - 1.0 / k2)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        psi1 = -(2.0 * q / k1) * np.log(r) + c1
        psi2 = -(2.0 * q / k2) * np.log(r) + c2
    return np.where(r < a, psi1, psi2)
