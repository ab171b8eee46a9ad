"""Linear solvers for the two elliptic problems on the grid.

Two independent machines:

  * a preconditioned conjugate gradient driver (the operator is SPD) with an
    incomplete-LU preconditioner built from the assembled 5-point matrix;
    used for the variable-coefficient dielectric problem,
  * FFT diagonalizations of the constant-coefficient 5-point operators
    (DST-II for cell-centered Dirichlet walls, DCT-II for Neumann walls);
    used for the pressure projection always and for the dielectric problem
    when kappa is uniform.

Both paths are deterministic and short-circuit on an identically zero right
hand side so that quiescent states stay exactly (bitwise) zero.
"""

from __future__ import annotations

import hashlib

import numpy as np
import scipy.fft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .grid import Grid

#: worker threads handed to the FFT fast paths (deterministic at any count)
FFT_WORKERS = 1


def pcg(apply_A, b: np.ndarray, precond=None, tol: float = 1e-10,
        maxiter: int = 2000, x0: np.ndarray | None = None):
    """Conjugate gradient on flat arrays; returns (x, residual_history).

    Converges when ||b - A x||_2 <= tol * ||b||_2.  Raises SolverError with
    the residual history if the iteration budget is exhausted.
    """
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), [0.0]
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply_A(x)
    history = [float(np.linalg.norm(r))]
    if history[-1] <= tol * bnorm:
        return x, history
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = float(r @ z)
    for _ in range(maxiter):
        Ap = apply_A(p)
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rn = float(np.linalg.norm(r))
        history.append(rn)
        if rn <= tol * bnorm:
            return x, history
        z = precond(r) if precond is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"PCG did not converge in {maxiter} iterations "
        f"(residual {history[-1]:.3e}, target {tol * bnorm:.3e})",
        residual_history=history,
    )


# ---------------------------------------------------------------------------
# variable-coefficient operator  A psi = -(div kappa grad psi)  (SPD)
# ---------------------------------------------------------------------------

def apply_varcoef_operator(psi: np.ndarray, kx: np.ndarray, ky: np.ndarray,
                           grid: Grid) -> np.ndarray:
    """Apply -(div kappa grad) with homogeneous Dirichlet walls (ghost value
    reflected through the wall: the wall sits half a cell outside the first
    center, so the boundary closure carries a factor 2)."""
    h2 = grid.h * grid.h
    out = np.zeros_like(psi)
    # interior face fluxes: cell P loses k (psi_E - psi_P), cell E gains it
    fx = kx[1:-1, :] * (psi[1:, :] - psi[:-1, :])
    fy = ky[:, 1:-1] * (psi[:, 1:] - psi[:, :-1])
    out[:-1, :] -= fx
    out[1:, :] += fx
    out[:, :-1] -= fy
    out[:, 1:] += fy
    # Dirichlet wall closures (homogeneous part)
    out[0, :] += 2.0 * kx[0, :] * psi[0, :]
    out[-1, :] += 2.0 * kx[-1, :] * psi[-1, :]
    out[:, 0] += 2.0 * ky[:, 0] * psi[:, 0]
    out[:, -1] += 2.0 * ky[:, -1] * psi[:, -1]
    return out / h2


def assemble_varcoef_matrix(kx: np.ndarray, ky: np.ndarray, grid: Grid) -> sp.csc_matrix:
    """Assemble the SPD matrix of apply_varcoef_operator (for the ILU)."""
    nx, ny = grid.nx, grid.ny
    h2 = grid.h * grid.h
    idx = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(v.ravel())

    diag = np.zeros((nx, ny))
    # x-direction interior faces couple (i, j) and (i+1, j)
    kxe = kx[1:-1, :]
    add(idx[:-1, :], idx[1:, :], -kxe / h2)
    add(idx[1:, :], idx[:-1, :], -kxe / h2)
    diag[:-1, :] += kxe / h2
    diag[1:, :] += kxe / h2
    kye = ky[:, 1:-1]
    add(idx[:, :-1], idx[:, 1:], -kye / h2)
    add(idx[:, 1:], idx[:, :-1], -kye / h2)
    diag[:, :-1] += kye / h2
    diag[:, 1:] += kye / h2
    # wall closures
    diag[0, :] += 2.0 * kx[0, :] / h2
    diag[-1, :] += 2.0 * kx[-1, :] / h2
    diag[:, 0] += 2.0 * ky[:, 0] / h2
    diag[:, -1] += 2.0 * ky[:, -1] / h2
    add(idx, idx, diag)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csc_matrix((vals, (rows, cols)), shape=(nx * ny, nx * ny))


try:
    import pyamg
    _HAVE_PYAMG = True
except ImportError:                                  # pragma: no cover
    _HAVE_PYAMG = False


class _PrecondCache:
    """Keep the few most recent preconditioners keyed by coefficient hash.

    Algebraic multigrid when available (drop-tolerance incomplete LU of this
    SPD operator is not guaranteed SPD and stalls conjugate gradients);
    Jacobi otherwise.
    """

    def __init__(self, capacity: int = 4):
        self.capacity = capacity
        self._store: dict[tuple, object] = {}
        self._order: list[tuple] = []

    def get(self, kx: np.ndarray, ky: np.ndarray, grid: Grid):
        key = (
            grid.nx, grid.ny, grid.h,
            hashlib.sha256(kx.tobytes()).hexdigest(),
            hashlib.sha256(ky.tobytes()).hexdigest(),
        )
        M = self._store.get(key)
        if M is None:
            A = assemble_varcoef_matrix(kx, ky, grid).tocsr()
            if _HAVE_PYAMG:
                ml = pyamg.ruge_stuben_solver(A)
                prec = ml.aspreconditioner(cycle="V")
                M = lambda r: prec @ r                            # noqa: E731
            else:
                dinv = 1.0 / A.diagonal()
                M = lambda r: dinv * r                            # noqa: E731
            self._store[key] = M
            self._order.append(key)
            while len(self._order) > self.capacity:
                old = self._order.pop(0)
                self._store.pop(old, None)
        return M


_PRECOND_CACHE = _PrecondCache()


def solve_varcoef_pcg(kx, ky, b: np.ndarray, grid: Grid, tol: float,
                      x0: np.ndarray | None = None):
    """Preconditioned CG solve of the variable-coefficient Dirichlet problem."""
    M = _PRECOND_CACHE.get(kx, ky, grid)
    shape = b.shape

    def apply_flat(v):
        return apply_varcoef_operator(v.reshape(shape), kx, ky, grid).ravel()

    x, history = pcg(
        apply_flat,
        b.ravel(),
        precond=M,
        tol=tol,
        maxiter=4 * grid.nx * grid.ny,
        x0=None if x0 is None else x0.ravel(),
    )
    return x.reshape(shape), history


# ---------------------------------------------------------------------------
# FFT fast paths (constant coefficient)
# ---------------------------------------------------------------------------

def _dirichlet_eigenvalues(grid: Grid) -> np.ndarray:
    kxv = 2.0 - 2.0 * np.cos(np.pi * (np.arange(grid.nx) + 1) / grid.nx)
    kyv = 2.0 - 2.0 * np.cos(np.pi * (np.arange(grid.ny) + 1) / grid.ny)
    return (kxv[:, None] + kyv[None, :]) / (grid.h * grid.h)


def solve_uniform_dirichlet(kappa: float, b: np.ndarray, grid: Grid) -> np.ndarray:
    """Solve  -kappa Lap psi = b  with homogeneous Dirichlet walls via DST-II.

    The cell-centered Dirichlet Laplacian (reflected ghost) is diagonal in the
    DST-II basis sin(pi (k+1)(i+1/2)/n).
    """
    if not b.any():
        return np.zeros_like(b)
    lam = kappa * _dirichlet_eigenvalues(grid)
    bh = scipy.fft.dstn(b, type=2, norm="ortho", workers=FFT_WORKERS)
    return scipy.fft.idstn(bh / lam, type=2, norm="ortho", workers=FFT_WORKERS)


def solve_neumann_poisson(b: np.ndarray, grid: Grid) -> np.ndarray:
    """Solve  Lap phi = b  with homogeneous Neumann walls via DCT-II.

    The compatibility defect (mean of b) is projected out; the returned phi
    has zero mean.
    """
    if not b.any():
        return np.zeros_like(b)
    kxv = 2.0 * np.cos(np.pi * np.arange(grid.nx) / grid.nx) - 2.0
    kyv = 2.0 * np.cos(np.pi * np.arange(grid.ny) / grid.ny) - 2.0
    lam = (kxv[:, None] + kyv[None, :]) / (grid.h * grid.h)
    bh = scipy.fft.dctn(b, type=2, norm="ortho", workers=FFT_WORKERS)
    bh[0, 0] = 0.0
    lam[0, 0] = 1.0
    return scipy.fft.idctn(bh / lam, type=2, norm="ortho", workers=FFT_WORKERS)
