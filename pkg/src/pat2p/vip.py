"""Variable inertial proximal (VIP) minimisation of the sparse reconstruction objective.

Each iteration takes an H1-preconditioned gradient step with inertia, then
applies soft thresholding towards the background followed by projection
onto the box bounds.  The Lipschitz estimate ``L`` only ever grows: it is
multiplied by ``growth`` until the quadratic upper bound holds at the trial
point.  Iteration stops when the complementarity residuals of both
coefficients are small.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .adjoint import ReconProblem, h1_smooth
from .forward import PicardError
from .grid import discrete_l2_norm, inner

__all__ = [
    "BoxBounds",
    "VipConfig",
    "VipState",
    "KktMultipliers",
    "TraceRow",
    "ReconTrace",
    "ReconResult",
    "BacktrackError",
    "prox_shrink_project",
    "complementarity_residual",
    "recover_multipliers",
    "backtrack_lipschitz",
    "vip_reconstruct",
]

log = logging.getLogger(__name__)


class BacktrackError(RuntimeError):
    """The Lipschitz search hit its cap; usually the gradient is inconsistent with the objective."""


@dataclass(frozen=True)
class BoxBounds:
    a_sigma: float
    b_sigma: float
    a_mu: float
    b_mu: float

    def __post_init__(self):
        if not (0 < self.a_sigma < self.b_sigma and 0 < self.a_mu < self.b_mu):
            raise ValueError("box bounds need 0 < a < b for both coefficients")

    @classmethod
    def around(cls, sigma_b: float, mu_b: float, lower: float = 0.01, upper: float = 50.0) -> BoxBounds:
        return cls(lower * sigma_b, upper * sigma_b, lower * mu_b, upper * mu_b)

    def contains(self, sigma: np.ndarray, mu: np.ndarray) -> bool:
        return bool(
            np.all((sigma >= self.a_sigma) & (sigma <= self.b_sigma))
            and np.all((mu >= self.a_mu) & (mu <= self.b_mu))
        )


@dataclass(frozen=True)
class VipConfig:
    theta: float = 0.3
    c1: float = 1.9
    c2: float = 0.1
    growth: float = 2.0
    L0: float = 1.0
    k: float = 1.0
    tol: float = 1e-4
    max_iter: int = 500
    max_backtracks: int = 60

    def __post_init__(self):
        # theta = 0 is allowed: it switches inertia off (plain proximal gradient).
        if not 0 <= self.theta < 1:
            raise ValueError("theta must lie in [0, 1)")
        if not self.c1 < 2:
            raise ValueError("c1 must be below 2")
        if not self.c1 > 0:
            raise ValueError("c1 must be positive for a descent step")
        if not self.c2 > 0:
            raise ValueError("c2 must be positive")
        if not self.growth > 1:
            raise ValueError("backtracking growth factor must exceed 1")
        if not (self.L0 > 0 and self.k > 0 and self.tol > 0):
            raise ValueError("L0, k and tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    def step(self, L: float) -> float:
        return self.c1 * (1.0 - self.theta) / (L + 2.0 * self.c2)


@dataclass
class VipState:
    sigma: np.ndarray
    sigma_prev: np.ndarray
    mu: np.ndarray
    mu_prev: np.ndarray
    L: float
    s: float
    E1_norm: float = math.inf
    E2_norm: float = math.inf


@dataclass
class KktMultipliers:
    lam: np.ndarray
    lam_a: np.ndarray
    lam_b: np.ndarray


def prox_shrink_project(q, q_b, tau: float, a: float, b: float) -> np.ndarray:
    """Soft-threshold ``q`` towards ``q_b`` by ``tau`` and clamp to ``[a, b]``.

    This is the proximal map of ``tau*|q - q_b|`` plus the indicator of the box.
    """
    if a > b:
        raise ValueError(f"empty box [{a}, {b}]")
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    d = np.asarray(q, dtype=float) - q_b
    shrunk = np.sign(d) * np.maximum(np.abs(d) - tau, 0.0)
    return np.clip(q_b + shrunk, a, b)


def complementarity_residual(q, c, gamma: float, a: float, b: float, k: float = 1.0, q_b=0.0) -> np.ndarray:
    """Nodewise KKT residual of the L1-plus-box problem; zero exactly where the conditions hold.

    ``q`` is measured relative to ``q_b``: the sparse variable is ``q - q_b``
    and its box is ``[a - q_b, b - q_b]``.  With ``q_b = 0`` this is the
    textbook clamped formula.
    """
    x = np.asarray(q, dtype=float) - q_b
    lo = a - q_b
    hi = b - q_b
    up = k * (c - gamma)
    dn = k * (c + gamma)
    return (
        x
        - np.maximum(0.0, x + up)
        + np.maximum(0.0, x - hi + up)
        - np.minimum(0.0, x + dn)
        + np.minimum(0.0, x - lo + dn)
    )


def recover_multipliers(c, gamma: float) -> KktMultipliers:
    """Split ``c`` into the L1 subgradient and the two box multipliers.

    ``lam`` is the part of ``c`` inside ``[-gamma, gamma]``; whatever exceeds it
    goes to the upper (``lam_b``) or lower (``lam_a``) bound multiplier, so
    ``lam + lam_b - lam_a == c``.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    c = np.asarray(c, dtype=float)
    lam = np.clip(c, -gamma, gamma)
    lam_a = -np.minimum(0.0, c + gamma)
    lam_b = np.maximum(0.0, c - gamma)
    return KktMultipliers(lam, lam_a, lam_b)


Blocks = Sequence[np.ndarray]


def backtrack_lipschitz(
    f: Callable[[Blocks], float],
    x: Blocks,
    x_prev: Blocks,
    f_x: float,
    grad: Blocks,
    direction: Blocks,
    L_prev: float,
    cfg: VipConfig,
    prox: Callable[[Blocks, float], Blocks],
    h: float = 1.0,
) -> tuple[float, list[np.ndarray], int]:
    """Smallest ``L = growth**i * L_prev`` whose trial point satisfies the quadratic upper bound.

    Args:
        f: smooth objective on a list of blocks.
        x, x_prev: current and previous iterates.
        f_x: ``f(x)``.
        grad: L2 gradient at ``x`` (enters the upper bound).
        direction: gradient used for the step, typically its H1 representative.
        L_prev: previous Lipschitz estimate.
        cfg: step parameters.
        prox: ``prox(z, s)`` applied to the extrapolated point ``z`` with step ``s``.
        h: grid spacing for the weighted inner products.

    Returns:
        ``(L, trial, i)``.
    """
    L = L_prev
    slack = 1e-12 * max(1.0, abs(f_x))
    for i in range(cfg.max_backtracks + 1):
        s = cfg.step(L)
        z = [xk - s * dk + cfg.theta * (xk - xp) for xk, dk, xp in zip(x, direction, x_prev)]
        trial = list(prox(z, s))
        diff = [t - xk for t, xk in zip(trial, x)]
        bound = f_x + sum(inner(g, d, h) for g, d in zip(grad, diff))
        bound += 0.5 * L * sum(inner(d, d, h) for d in diff)
        if f(trial) <= bound + slack:
            return L, trial, i
        L *= cfg.growth
    raise BacktrackError(f"no admissible Lipschitz estimate after {cfg.max_backtracks} increases (L={L:.3e})")


@dataclass(frozen=True)
class TraceRow:
    iter: int
    J: float
    misfit: float
    E1: float
    E2: float
    L: float
    step: float


@dataclass
class ReconTrace:
    rows: list[TraceRow] = field(default_factory=list)

    HEADER = ("iter", "J", "misfit", "E1", "E2", "L", "step")

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, i) -> TraceRow:
        return self.rows[i]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for r in self.rows:
            w.writerow([r.iter] + [repr(float(getattr(r, k))) for k in self.HEADER[1:]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


@dataclass
class ReconResult:
    sigma: np.ndarray
    mu: np.ndarray
    trace: ReconTrace
    converged: bool
    iterations: int
    state: VipState


def vip_reconstruct(
    problem: ReconProblem,
    bounds: BoxBounds,
    cfg: VipConfig = VipConfig(),
    init: tuple[np.ndarray, np.ndarray] | None = None,
    callback: Callable[[TraceRow], None] | None = None,
) -> ReconResult:
    """Minimise the sparse reconstruction objective with the VIP method.

    Starts from ``init`` (default: the backgrounds), with the previous iterate
    equal to the initial one.  Returns when ``||E1|| + ||E2|| <= cfg.tol`` at
    the current iterate or after ``cfg.max_iter`` updates.
    """
    grid = problem.grid
    h = grid.h
    w = problem.weights
    sb, mb = problem.sigma_b, problem.mu_b
    if init is None:
        sigma = grid.full(sb)
        mu = grid.full(mb)
    else:
        sigma = np.array(np.broadcast_to(init[0], grid.shape), dtype=float)
        mu = np.array(np.broadcast_to(init[1], grid.shape), dtype=float)
    if not bounds.contains(sigma, mu):
        raise ValueError("initial coefficients violate the box bounds")

    def prox(z, s):
        return (
            prox_shrink_project(z[0], sb, w.gamma1 * s, bounds.a_sigma, bounds.b_sigma),
            prox_shrink_project(z[1], mb, w.gamma2 * s, bounds.a_mu, bounds.b_mu),
        )

    current = problem.evaluate(sigma, mu)
    if not math.isfinite(current.total):
        raise FloatingPointError("objective is not finite at the initial point")
    last_eval = {}

    def smooth(blocks):
        try:
            ev = problem.evaluate(blocks[0], blocks[1], guesses=current.state.u)
        except PicardError:
            return math.inf
        if not math.isfinite(ev.smooth):
            return math.inf
        last_eval["value"] = ev
        return ev.smooth

    state = VipState(sigma, sigma.copy(), mu, mu.copy(), cfg.L0, cfg.step(cfg.L0))
    trace = ReconTrace()
    converged = False
    k = 0
    while True:
        try:
            grads = problem.gradients(state.sigma, state.mu, current.state)
        except RuntimeError as exc:
            raise RuntimeError(f"gradient evaluation failed at iteration {k}: {exc}") from exc
        d_sigma = h1_smooth(grid, grads.grad_sigma)
        d_mu = h1_smooth(grid, grads.grad_mu)
        E1 = complementarity_residual(state.sigma, -d_sigma, w.gamma1, bounds.a_sigma, bounds.b_sigma, cfg.k, sb)
        E2 = complementarity_residual(state.mu, -d_mu, w.gamma2, bounds.a_mu, bounds.b_mu, cfg.k, mb)
        state.E1_norm = discrete_l2_norm(E1, h)
        state.E2_norm = discrete_l2_norm(E2, h)
        if state.E1_norm + state.E2_norm <= cfg.tol:
            converged = True
            trace.append(TraceRow(k, current.total, current.misfit, state.E1_norm, state.E2_norm, state.L, state.s))
            break
        if k >= cfg.max_iter:
            trace.append(TraceRow(k, current.total, current.misfit, state.E1_norm, state.E2_norm, state.L, state.s))
            break

        x = [state.sigma, state.mu]
        try:
            L, trial, n_bt = backtrack_lipschitz(
                smooth, x, [state.sigma_prev, state.mu_prev], current.smooth,
                [grads.grad_sigma, grads.grad_mu], [d_sigma, d_mu], state.L, cfg, prox, h,
            )
        except RuntimeError as exc:
            raise RuntimeError(f"iteration {k}: {exc}") from exc
        state.L = L
        state.s = cfg.step(L)
        trace.append(TraceRow(k, current.total, current.misfit, state.E1_norm, state.E2_norm, state.L, state.s))
        if callback is not None:
            callback(trace.rows[-1])
        log.info(
            "vip %4d  J=%.6e misfit=%.6e E=%.3e L=%.3e backtracks=%d",
            k, current.total, current.misfit, state.E1_norm + state.E2_norm, L, n_bt,
        )
        state.sigma_prev, state.mu_prev = state.sigma, state.mu
        state.sigma, state.mu = trial
        current = last_eval["value"]
        if not math.isfinite(current.total):
            raise FloatingPointError(f"objective became non-finite at iteration {k + 1}")
        k += 1

    return ReconResult(state.sigma, state.mu, trace, converged, k, state)
