"""Quantitative photoacoustic reconstruction of one- and two-photon absorption."""

from .adjoint import GradientPair, ObjectiveWeights, ReconProblem, h1_smooth, objective, reduced_gradients, solve_adjoint
from .elliptic import EllipticSystem, LinearSolveError, assemble, solve
from .forward import PicardError, PicardReport, convergence_study, picard_solve, pressure_field, semilinear_residual
from .grid import Grid2D, ScalarField, build_grid, discrete_l1_norm, discrete_l2_norm, relative_l2_error, restrict
from .phantoms import PhantomSpec, derive_optics, make_disk, make_heartlung, make_phantom, make_shepplogan
from .synth import SynthSpec, synthesize
from .vip import (
    BoxBounds,
    KktMultipliers,
    ReconTrace,
    VipConfig,
    backtrack_lipschitz,
    complementarity_residual,
    prox_shrink_project,
    recover_multipliers,
    vip_reconstruct,
)

__version__ = "0.1.0"

__all__ = [
    "BoxBounds",
    "EllipticSystem",
    "GradientPair",
    "Grid2D",
    "KktMultipliers",
    "LinearSolveError",
    "ObjectiveWeights",
    "PhantomSpec",
    "PicardError",
    "PicardReport",
    "ReconProblem",
    "ReconTrace",
    "ScalarField",
    "SynthSpec",
    "VipConfig",
    "assemble",
    "backtrack_lipschitz",
    "build_grid",
    "complementarity_residual",
    "convergence_study",
    "derive_optics",
    "discrete_l1_norm",
    "discrete_l2_norm",
    "h1_smooth",
    "make_disk",
    "make_heartlung",
    "make_phantom",
    "make_shepplogan",
    "objective",
    "picard_solve",
    "pressure_field",
    "prox_shrink_project",
    "recover_multipliers",
    "reduced_gradients",
    "relative_l2_error",
    "restrict",
    "semilinear_residual",
    "solve",
    "solve_adjoint",
    "synthesize",
    "vip_reconstruct",
]
