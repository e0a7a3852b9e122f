"""Photon density by Picard iteration and the initial pressure it produces.

Each Picard step freezes the quadratic absorption at the previous iterate and
solves the linear problem

    -div(D grad u_{k+1}) + sigma u_{k+1} + mu u_k u_{k+1} = f,   u_{k+1} = g on the boundary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import elliptic
from .grid import Grid2D, discrete_l1_norm, discrete_l2_norm

__all__ = [
    "PicardReport",
    "PicardError",
    "picard_solve",
    "pressure_field",
    "semilinear_residual",
    "manufactured_problem",
    "ConvergenceRow",
    "convergence_study",
]

log = logging.getLogger(__name__)


class PicardError(RuntimeError):
    """An inner linear solve failed during Picard iteration."""


@dataclass
class PicardReport:
    iterations: int
    final_update_norm: float
    converged: bool
    contraction_ratios: list[float] = field(default_factory=list)
    update_norms: list[float] = field(default_factory=list)

    @property
    def max_ratio_after_first(self) -> float:
        """Largest contraction ratio from the second iteration on (0 if there are none)."""
        tail = self.contraction_ratios[1:]
        return max(tail) if tail else 0.0


def _field(grid: Grid2D, a) -> np.ndarray:
    return np.array(np.broadcast_to(np.asarray(a, dtype=float), grid.shape))


def picard_solve(
    grid: Grid2D,
    D,
    sigma,
    mu,
    g,
    f=0.0,
    u0=None,
    tol: float = 1e-10,
    max_iter: int = 100,
    cg_tol: float | None = None,
) -> tuple[np.ndarray, PicardReport]:
    """Solve the semilinear diffusion problem by Picard iteration.

    Args:
        grid: computational grid.
        D, sigma, mu: diffusion and absorption coefficients (arrays or scalars).
        g: Dirichlet data, read at boundary nodes only.
        f: optional source term (manufactured solutions).
        u0: initial guess; defaults to the solution with the quadratic term dropped.
        tol: stopping threshold on the discrete L2 norm of the update.
        max_iter: Picard iteration cap.
        cg_tol: relative residual for the inner solves; defaults to
            ``min(1e-10, 1e-2 * tol)`` so the algebraic error stays below the Picard tolerance.

    Returns:
        The final iterate and a :class:`PicardReport`.  Hitting ``max_iter`` is
        reported through ``report.converged``, not raised.
    """
    D, sigma, mu, g, f = (_field(grid, a) for a in (D, sigma, mu, g, f))
    if np.any(sigma < 0) or np.any(mu < 0):
        raise ValueError("absorption coefficients must be nonnegative")
    if np.any(D <= 0):
        raise ValueError("diffusion coefficient must be strictly positive")
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    if cg_tol is None:
        cg_tol = min(1e-10, 1e-2 * tol)
    h = grid.h

    def linear_step(c, guess, k):
        system = elliptic.assemble(grid, D, c, f, g)
        try:
            return elliptic.solve(system, tol=cg_tol, x0=guess)
        except elliptic.LinearSolveError as exc:
            raise PicardError(f"linear solve failed at Picard iteration {k}: {exc}") from exc

    if u0 is None:
        u = linear_step(sigma, None, 0)
    else:
        u = _field(grid, u0)
        u[grid.boundary_mask] = g[grid.boundary_mask]

    norms: list[float] = []
    ratios: list[float] = []
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        u_new = linear_step(sigma + mu * u, u, k)
        err = discrete_l2_norm(u_new - u, h)
        if norms and norms[-1] > 0:
            ratios.append(err / norms[-1])
        norms.append(err)
        u = u_new
        if err <= tol:
            converged = True
            break

    if ratios and max(ratios[1:], default=0.0) >= 1.0:
        log.warning("Picard update norm grew: ratios %s", ratios)
    if np.any(u < 0):
        log.warning("Picard solution has %d negative nodes (min %.3e)", int((u < 0).sum()), u.min())
    report = PicardReport(k, norms[-1], converged, ratios, norms)
    return u, report


def pressure_field(gamma, sigma, mu, u) -> np.ndarray:
    """Initial acoustic pressure ``Gamma (sigma u + mu u^2)`` at every node."""
    arrays = [np.asarray(a, dtype=float) for a in (gamma, sigma, mu, u)]
    shapes = {a.shape for a in arrays if a.ndim}
    if len(shapes) > 1:
        raise ValueError(f"fields have mismatched shapes {shapes}")
    gamma, sigma, mu, u = arrays
    return gamma * (sigma * u + mu * u * u)


def semilinear_residual(grid: Grid2D, D, sigma, mu, u, f=0.0) -> float:
    """Discrete L2 norm of ``-div(D grad u) + sigma u + mu u^2 - f`` over interior nodes."""
    sigma, mu, f = (_field(grid, a) for a in (sigma, mu, f))
    r = elliptic.apply_operator(grid, D, sigma + mu * u, u)
    r[1:-1, 1:-1] -= f[1:-1, 1:-1]
    return discrete_l2_norm(r, grid.h)


def manufactured_problem(n_intervals: int):
    """Grid and coefficient fields of the unit-square manufactured solution ``sin x sin y``.

    Returns ``(grid, D, sigma, mu, g, f, u_exact)``.
    """
    grid = Grid2D(0.0, 1.0, 0.0, 1.0, n_intervals + 1)
    s = grid.sample(lambda x, y: np.sin(x) * np.sin(y))
    D = grid.full(1.0)
    mu = grid.full(1.0)
    f = 2.0 * s + 2.0 * s**2
    return grid, D, s.copy(), mu, s.copy(), f, s


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    err: float
    order: float | None
    iterations: int


def convergence_study(levels=(25, 50, 100, 200), tol: float = 1e-10, max_iter: int = 100) -> list[ConvergenceRow]:
    """Discrete L1 error of the Picard solution on the manufactured problem per level.

    ``levels`` are numbers of intervals per axis; the observed order between
    consecutive levels is ``log(err_prev/err)/log(n/n_prev)``.
    """
    rows: list[ConvergenceRow] = []
    for n in levels:
        grid, D, sigma, mu, g, f, exact = manufactured_problem(int(n))
        u, report = picard_solve(grid, D, sigma, mu, g, f, tol=tol, max_iter=max_iter)
        if not report.converged:
            raise PicardError(f"Picard did not converge on level {n}")
        err = discrete_l1_norm(u - exact, grid.h)
        order = None
        if rows:
            prev = rows[-1]
            order = float(np.log(prev.err / err) / np.log(n / prev.n))
        rows.append(ConvergenceRow(int(n), err, order, report.iterations))
    return rows
