"""Reconstruction objective, adjoint solves and reduced gradients.

The smooth part of the objective is

    J1 = sum_j alpha_j/2 ||H_j - G_j||^2 + xi_1/2 ||sigma - sigma_b||_H1^2 + xi_2/2 ||mu - mu_b||_H1^2

and the nonsmooth part is ``gamma_1 ||sigma - sigma_b||_1 + gamma_2 ||mu - mu_b||_1``.
All norms are h-weighted sums over every grid node.  The discrete H1 seminorm
sums squared differences over grid edges, so its gradient is the Neumann
graph Laplacian and the returned gradients are exact derivatives of the
discrete objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import elliptic
from .forward import PicardError, picard_solve, pressure_field
from .grid import Grid2D, discrete_l1_norm, inner

__all__ = [
    "ObjectiveWeights",
    "GradientPair",
    "ForwardState",
    "ObjectiveValue",
    "ReconProblem",
    "objective",
    "solve_adjoint",
    "reduced_gradients",
    "h1_seminorm_sq",
    "h1_smooth",
]


@dataclass(frozen=True)
class ObjectiveWeights:
    alpha1: float = 1.0
    alpha2: float = 1.0
    xi1: float = 0.01
    xi2: float = 0.01
    gamma1: float = 0.1
    gamma2: float = 0.1

    def __post_init__(self):
        vals = (self.alpha1, self.alpha2, self.xi1, self.xi2, self.gamma1, self.gamma2)
        if min(vals) < 0:
            raise ValueError("objective weights must be nonnegative")
        if self.alpha1 + self.alpha2 <= 0:
            raise ValueError("at least one misfit weight must be positive")

    @property
    def alphas(self) -> tuple[float, float]:
        return (self.alpha1, self.alpha2)


@dataclass
class GradientPair:
    grad_sigma: np.ndarray
    grad_mu: np.ndarray
    representation: str = "L2"


@dataclass
class ForwardState:
    """Photon densities and pressures for both illuminations at one ``(sigma, mu)``."""

    u: tuple[np.ndarray, np.ndarray]
    H: tuple[np.ndarray, np.ndarray]
    picard_iterations: tuple[int, int] = (0, 0)


@dataclass
class ObjectiveValue:
    total: float
    smooth: float
    l1: float
    misfit: float
    state: ForwardState | None = field(default=None, repr=False)


def h1_seminorm_sq(e: np.ndarray) -> float:
    """Sum of squared differences across grid edges (``||grad e||^2`` with h-weights)."""
    return float(np.sum(np.diff(e, axis=0) ** 2) + np.sum(np.diff(e, axis=1) ** 2))


def _neg_laplacian(e: np.ndarray, h: float) -> np.ndarray:
    """Neumann graph Laplacian ``-Delta_h e``, the gradient of ``h1_seminorm_sq / (2 h^2)``."""
    out = np.zeros_like(e)
    dx = np.diff(e, axis=0)
    dy = np.diff(e, axis=1)
    out[:-1, :] -= dx
    out[1:, :] += dx
    out[:, :-1] -= dy
    out[:, 1:] += dy
    return out / h**2


def h1_smooth(grid: Grid2D, g: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Solve ``(I - Delta_h) w = g`` with homogeneous Neumann conditions.

    This maps an L2 gradient to its H1 Riesz representative.
    """
    g = np.asarray(g, dtype=float)
    grid.check(g)
    A = sp.identity(grid.n**2, format="csr") + elliptic.neumann_laplacian(grid)
    w, _, _ = elliptic.pcg(A, g.ravel(), tol=tol, max_iter=10 * grid.n**2)
    return w.reshape(grid.shape)


def solve_adjoint(
    grid: Grid2D,
    sigma,
    mu,
    u: np.ndarray,
    G: np.ndarray,
    alpha: float,
    D,
    gamma,
    form: str = "derivative",
    tol: float = 1e-12,
) -> np.ndarray:
    """Adjoint state ``v`` for one illumination.

    Solves ``-div(D grad v) + (sigma + 2 mu u) v = -alpha (H - G) dH/du`` with
    ``v = 0`` on the boundary and ``dH/du = Gamma (sigma + 2 mu u)``.

    ``form="printed"`` swaps ``dH/du`` for ``Gamma (sigma + 2 u)``, the factor as
    it appears in some write-ups of this model; it is kept only for comparison
    and fails the finite-difference check whenever ``mu != 1``.
    """
    sigma, mu, gamma = (np.broadcast_to(np.asarray(a, dtype=float), grid.shape) for a in (sigma, mu, gamma))
    H = pressure_field(gamma, sigma, mu, u)
    if form == "derivative":
        dH = gamma * (sigma + 2.0 * mu * u)
    elif form == "printed":
        dH = gamma * (sigma + 2.0 * u)
    else:
        raise ValueError(f"unknown adjoint form {form!r}")
    rhs = -alpha * (H - G) * dH
    if alpha == 0.0 or not np.any(rhs[1:-1, 1:-1]):
        return np.zeros(grid.shape)
    system = elliptic.assemble(grid, D, sigma + 2.0 * mu * u, rhs, 0.0)
    return elliptic.solve(system, tol=tol)


def reduced_gradients(
    grid: Grid2D,
    sigma: np.ndarray,
    mu: np.ndarray,
    u: tuple[np.ndarray, np.ndarray],
    v: tuple[np.ndarray, np.ndarray],
    G: tuple[np.ndarray, np.ndarray],
    gamma,
    sigma_b: float,
    mu_b: float,
    weights: ObjectiveWeights,
) -> GradientPair:
    """L2 gradients of the smooth objective from forward and adjoint states."""
    gs = np.zeros(grid.shape)
    gm = np.zeros(grid.shape)
    for a, uj, vj, Gj in zip(weights.alphas, u, v, G):
        r = a * (pressure_field(gamma, sigma, mu, uj) - Gj) * gamma
        gs += r * uj + uj * vj
        gm += r * uj * uj + uj * uj * vj
    h = grid.h
    es = sigma - sigma_b
    em = mu - mu_b
    gs += weights.xi1 * (es + _neg_laplacian(es, h))
    gm += weights.xi2 * (em + _neg_laplacian(em, h))
    return GradientPair(gs, gm)


def objective(
    grid: Grid2D,
    sigma,
    mu,
    data: tuple[np.ndarray, np.ndarray],
    illum: tuple,
    D,
    gamma,
    sigma_b: float,
    mu_b: float,
    weights: ObjectiveWeights,
    state: ForwardState | None = None,
    picard_tol: float = 1e-10,
    picard_max_iter: int = 100,
) -> ObjectiveValue:
    """Evaluate all parts of the objective; solves both forward problems unless ``state`` is given."""
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), grid.shape)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), grid.shape)
    if state is None:
        state = forward_states(grid, sigma, mu, illum, D, gamma, picard_tol, picard_max_iter)
    h = grid.h
    misfit = sum(
        0.5 * a * inner(Hj - Gj, Hj - Gj, h) for a, Hj, Gj in zip(weights.alphas, state.H, data)
    )
    es = sigma - sigma_b
    em = mu - mu_b
    reg = 0.5 * weights.xi1 * (inner(es, es, h) + h1_seminorm_sq(es))
    reg += 0.5 * weights.xi2 * (inner(em, em, h) + h1_seminorm_sq(em))
    l1 = weights.gamma1 * discrete_l1_norm(es, h) + weights.gamma2 * discrete_l1_norm(em, h)
    smooth = misfit + reg
    return ObjectiveValue(smooth + l1, smooth, l1, misfit, state)


def forward_states(
    grid: Grid2D,
    sigma,
    mu,
    illum: tuple,
    D,
    gamma,
    tol: float = 1e-10,
    max_iter: int = 100,
    guesses: tuple | None = None,
) -> ForwardState:
    us, Hs, its = [], [], []
    for k, g in enumerate(illum):
        u0 = None if guesses is None else guesses[k]
        u, rep = picard_solve(grid, D, sigma, mu, g, u0=u0, tol=tol, max_iter=max_iter)
        if not rep.converged:
            raise PicardError(
                f"forward solve for illumination {k + 1} did not converge "
                f"(update norm {rep.final_update_norm:.2e} after {rep.iterations} iterations)"
            )
        us.append(u)
        Hs.append(pressure_field(gamma, sigma, mu, u))
        its.append(rep.iterations)
    return ForwardState(tuple(us), tuple(Hs), tuple(its))


@dataclass
class ReconProblem:
    """Everything fixed during a reconstruction: grid, data, illuminations and known optics."""

    grid: Grid2D
    data: tuple[np.ndarray, np.ndarray]
    illum: tuple[float | np.ndarray, float | np.ndarray]
    D: np.ndarray
    gamma: np.ndarray
    sigma_b: float
    mu_b: float
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    picard_tol: float = 1e-10
    picard_max_iter: int = 100
    adjoint_form: str = "derivative"
    misfit_norm: str = "euclidean"

    def __post_init__(self):
        if self.misfit_norm not in ("euclidean", "weighted"):
            raise ValueError("misfit_norm must be 'euclidean' or 'weighted'")
        # A plain nodal sum equals the h^2-weighted sum with alpha scaled by 1/h^2.
        scale = 1.0 / self.grid.h**2 if self.misfit_norm == "euclidean" else 1.0
        self.effective_weights = replace(
            self.weights, alpha1=self.weights.alpha1 * scale, alpha2=self.weights.alpha2 * scale
        )
        self.D = np.array(np.broadcast_to(np.asarray(self.D, dtype=float), self.grid.shape))
        self.gamma = np.array(np.broadcast_to(np.asarray(self.gamma, dtype=float), self.grid.shape))
        self.grid.check(*self.data)

    def forward(self, sigma, mu, guesses=None) -> ForwardState:
        return forward_states(
            self.grid, sigma, mu, self.illum, self.D, self.gamma,
            self.picard_tol, self.picard_max_iter, guesses,
        )

    def evaluate(self, sigma, mu, guesses=None) -> ObjectiveValue:
        state = self.forward(sigma, mu, guesses)
        return objective(
            self.grid, sigma, mu, self.data, self.illum, self.D, self.gamma,
            self.sigma_b, self.mu_b, self.effective_weights, state=state,
        )

    def smooth_value(self, sigma, mu) -> float:
        return self.evaluate(sigma, mu).smooth

    def gradients(self, sigma, mu, state: ForwardState | None = None) -> GradientPair:
        """L2 gradients of the smooth objective at ``(sigma, mu)``."""
        if state is None:
            state = self.forward(sigma, mu)
        v = tuple(
            solve_adjoint(self.grid, sigma, mu, uj, Gj, a, self.D, self.gamma, form=self.adjoint_form)
            for uj, Gj, a in zip(state.u, self.data, self.effective_weights.alphas)
        )
        return reduced_gradients(
            self.grid, sigma, mu, state.u, v, self.data, self.gamma,
            self.sigma_b, self.mu_b, self.effective_weights,
        )
