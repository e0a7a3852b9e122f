"""Synthetic interior pressure data: fine-grid forward solve, multiplicative noise, restriction."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .forward import PicardError, picard_solve, pressure_field
from .grid import Grid2D, ScalarField, restrict
from .phantoms import derive_optics

__all__ = ["SynthSpec", "SynthResult", "synthesize", "RNG_ALGORITHM"]

log = logging.getLogger(__name__)

# numpy Generator(PCG64); illumination j draws from SeedSequence(seed).spawn(2)[j].
RNG_ALGORITHM = "numpy.PCG64/SeedSequence.spawn"


@dataclass(frozen=True)
class SynthSpec:
    n_fine: int = 400
    n_coarse: int = 150
    g1: float = 1.0
    g2: float = 2.0
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.n_fine > self.n_coarse >= 3:
            raise ValueError(f"need n_fine > n_coarse >= 3, got {self.n_fine} and {self.n_coarse}")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise level must lie in [0, 1]")
        if self.g1 <= 0 or self.g2 <= 0:
            raise ValueError("illuminations must be positive")
        if self.g1 == self.g2:
            raise ValueError("the two illuminations must differ")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if not self.g1 > self.g2:
            log.warning("g1 <= g2: uniqueness is only guaranteed for g1 > g2; proceeding since g1 != g2")

    def metadata(self) -> dict:
        meta = asdict(self)
        meta["rng"] = RNG_ALGORITHM
        return meta


@dataclass
class SynthResult:
    G: tuple[ScalarField, ScalarField]
    H_fine: tuple[np.ndarray, np.ndarray]
    G_fine: tuple[np.ndarray, np.ndarray]
    negative_nodes: int


def synthesize(
    sigma: np.ndarray,
    mu: np.ndarray,
    fine_grid: Grid2D,
    spec: SynthSpec,
    coarse_grid: Grid2D | None = None,
    picard_tol: float = 1e-10,
    picard_max_iter: int = 100,
) -> SynthResult:
    """Pressure data for both illuminations restricted to the coarse grid.

    The fine-grid pressure ``H`` becomes ``H * (1 + noise * z)`` with standard
    normal ``z`` per fine node before bilinear restriction.  Negative noisy
    values are kept and counted.
    """
    fine_grid.check(sigma, mu)
    if fine_grid.n != spec.n_fine:
        raise ValueError(f"phantom grid has {fine_grid.n} nodes per axis, spec says {spec.n_fine}")
    if coarse_grid is None:
        coarse_grid = Grid2D(fine_grid.x_min, fine_grid.x_max, fine_grid.y_min, fine_grid.y_max, spec.n_coarse)
    D, gamma = derive_optics(sigma)
    streams = np.random.SeedSequence(spec.seed).spawn(2)
    Gs, Hs, noisy_fine = [], [], []
    negative = 0
    for j, (g, ss) in enumerate(zip((spec.g1, spec.g2), streams)):
        u, rep = picard_solve(fine_grid, D, sigma, mu, g, tol=picard_tol, max_iter=picard_max_iter)
        if not rep.converged:
            raise PicardError(f"forward solve for illumination {j + 1} did not converge")
        H = pressure_field(gamma, sigma, mu, u)
        noisy = H
        if spec.noise > 0:
            z = np.random.Generator(np.random.PCG64(ss)).standard_normal(fine_grid.shape)
            noisy = H * (1.0 + spec.noise * z)
        negative += int(np.count_nonzero(noisy < 0))
        Hs.append(H)
        noisy_fine.append(noisy)
        Gs.append(restrict(ScalarField(fine_grid, noisy), coarse_grid))
    if negative:
        log.info("%d noisy fine-grid samples are negative", negative)
    return SynthResult(tuple(Gs), tuple(Hs), tuple(noisy_fine), negative)
