"""Five-point finite-volume discretisation of ``-div(D grad w) + c w = f``.

Dirichlet values are eliminated into the right-hand side so the interior
system stays symmetric positive definite; it is solved with Jacobi-
preconditioned conjugate gradients.  The Neumann operator ``I - Laplacian``
used for Sobolev gradient smoothing lives here as well since it shares the
assembly code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Grid2D

__all__ = [
    "EllipticSystem",
    "LinearSolveError",
    "assemble",
    "solve",
    "pcg",
    "face_coefficients",
    "apply_operator",
    "neumann_laplacian",
    "dump_stencil",
]

log = logging.getLogger(__name__)


class LinearSolveError(RuntimeError):
    """Conjugate gradients did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


def face_coefficients(D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Harmonic means of D on x-faces ``(n-1, n)`` and y-faces ``(n, n-1)``."""
    dx = 2.0 * D[1:, :] * D[:-1, :] / (D[1:, :] + D[:-1, :])
    dy = 2.0 * D[:, 1:] * D[:, :-1] / (D[:, 1:] + D[:, :-1])
    return dx, dy


@dataclass(frozen=True)
class EllipticSystem:
    """Interior SPD system ``A w_int = rhs`` plus the data to rebuild the full field."""

    grid: Grid2D
    matrix: sp.csr_matrix
    rhs: np.ndarray
    boundary: np.ndarray

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def expand(self, w_int: np.ndarray) -> np.ndarray:
        """Full-grid field carrying the Dirichlet data on the boundary."""
        m = self.grid.n - 2
        w = self.boundary.copy()
        w[1:-1, 1:-1] = w_int.reshape(m, m)
        return w


def _interior_operator(D: np.ndarray, c: np.ndarray, h: float) -> sp.csr_matrix:
    n = D.shape[0]
    m = n - 2
    dx, dy = face_coefficients(D)
    # Face coefficients seen from interior node (i, j), i, j in 1..n-2.
    east = dx[1:, 1:-1]
    west = dx[:-1, 1:-1]
    north = dy[1:-1, 1:]
    south = dy[1:-1, :-1]
    diag = (east + west + north + south) / h**2 + c[1:-1, 1:-1]

    # Interior index k = (i-1)*m + (j-1); i is the slow axis.
    off_j = -north[:, :-1] / h**2  # coupling (i, j) <-> (i, j+1)
    off_i = -east[:-1, :] / h**2  # coupling (i, j) <-> (i+1, j)
    vj = np.zeros((m, m))
    vj[:, :-1] = off_j
    vj = vj.ravel()[:-1]
    vi = off_i.ravel()
    A = sp.diags(
        [diag.ravel(), vj, vj, vi, vi],
        [0, 1, -1, m, -m],
        shape=(m * m, m * m),
        format="csr",
    )
    return A


def _lifting(D: np.ndarray, g: np.ndarray, h: float) -> np.ndarray:
    """Contribution of boundary values to the interior right-hand side."""
    dx, dy = face_coefficients(D)
    b = np.zeros((D.shape[0] - 2, D.shape[1] - 2))
    b[0, :] += dx[0, 1:-1] * g[0, 1:-1]
    b[-1, :] += dx[-1, 1:-1] * g[-1, 1:-1]
    b[:, 0] += dy[1:-1, 0] * g[1:-1, 0]
    b[:, -1] += dy[1:-1, -1] * g[1:-1, -1]
    return b / h**2


def assemble(grid: Grid2D, D, c, f, g_boundary) -> EllipticSystem:
    """Build the interior system for ``-div(D grad w) + c w = f``, ``w = g`` on the boundary.

    Scalars are broadcast to the grid.  ``g_boundary`` is read only at boundary nodes.
    """
    D, c, f, g = (np.broadcast_to(np.asarray(a, dtype=float), grid.shape) for a in (D, c, f, g_boundary))
    if np.any(D <= 0.0):
        raise ValueError("diffusion coefficient must be strictly positive")
    if np.any(c < 0.0):
        raise ValueError("reaction coefficient must be nonnegative")
    h = grid.h
    A = _interior_operator(D, c, h)
    rhs = (f[1:-1, 1:-1] + _lifting(D, g, h)).ravel()
    boundary = np.where(grid.boundary_mask, g, 0.0)
    return EllipticSystem(grid, A, rhs, boundary)


def pcg(
    A: sp.spmatrix,
    b: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> tuple[np.ndarray, int, float]:
    """Jacobi-preconditioned conjugate gradients.

    Stops once ``||b - A x|| <= tol * ||b||``.

    Returns:
        ``(x, iterations, relative_residual)``.

    Raises:
        LinearSolveError: if ``max_iter`` iterations do not reach ``tol``.
    """
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    inv_diag = 1.0 / A.diagonal()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    r = b - A @ x
    rnorm = np.linalg.norm(r)
    if rnorm <= tol * bnorm:
        return x, 0, rnorm / bnorm
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.linalg.norm(r)
        if rnorm <= tol * bnorm:
            return x, it, rnorm / bnorm
        z = inv_diag * r
        rz_new = r @ z
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise LinearSolveError("conjugate gradients did not converge", rnorm / bnorm, max_iter)


def solve(system: EllipticSystem, tol: float = 1e-10, max_iter: int | None = None, x0=None) -> np.ndarray:
    """Solve an assembled system; returns the full-grid field."""
    if max_iter is None:
        max_iter = 10 * system.grid.n ** 2
    guess = None if x0 is None else np.asarray(x0)[1:-1, 1:-1].ravel()
    w_int, its, res = pcg(system.matrix, system.rhs, guess, tol=tol, max_iter=max_iter)
    log.debug("pcg: %d iterations, residual %.2e", its, res)
    return system.expand(w_int)


def apply_operator(grid: Grid2D, D, c, w: np.ndarray) -> np.ndarray:
    """``-div(D grad w) + c w`` at interior nodes, zero on the boundary."""
    D = np.broadcast_to(np.asarray(D, dtype=float), grid.shape)
    c = np.broadcast_to(np.asarray(c, dtype=float), grid.shape)
    h = grid.h
    dx, dy = face_coefficients(D)
    fx = dx * (w[1:, :] - w[:-1, :])
    fy = dy * (w[:, 1:] - w[:, :-1])
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = (
        -(fx[1:, 1:-1] - fx[:-1, 1:-1]) - (fy[1:-1, 1:] - fy[1:-1, :-1])
    ) / h**2 + c[1:-1, 1:-1] * w[1:-1, 1:-1]
    return out


def neumann_laplacian(grid: Grid2D) -> sp.csr_matrix:
    """Graph Laplacian on all nodes scaled by ``1/h**2`` (natural Neumann boundary).

    Returns the positive semidefinite matrix ``-Laplacian_h``; constants are in its kernel.
    """
    n = grid.n
    e = np.ones(n)
    T = sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1], format="lil")
    T[0, 0] = T[-1, -1] = 1.0
    T = T.tocsr()
    eye = sp.identity(n, format="csr")
    return ((sp.kron(T, eye) + sp.kron(eye, T)) / grid.h**2).tocsr()


def dump_stencil(system: EllipticSystem, path) -> None:
    """Write the interior matrix as ``row col value`` text triples."""
    coo = system.matrix.tocoo()
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v)!r}\n")
