"""Test absorption phantoms on the square (-1, 1)^2.

Every phantom sets ``mu = 0.1 * sigma`` on its inclusions and the background
pair ``(sigma_b, mu_b)`` elsewhere.  A node lying exactly on an inclusion
boundary counts as inside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid2D

__all__ = [
    "PhantomSpec",
    "HeartLungGeometry",
    "make_disk",
    "make_heartlung",
    "make_shepplogan",
    "make_phantom",
    "derive_optics",
    "PHANTOMS",
    "DEFAULT_BACKGROUNDS",
]

# Modified Shepp-Logan table (Toft): intensity, semi-axes a, b, centre x0, y0, rotation in degrees.
SHEPP_LOGAN_TABLE = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)

DEFAULT_BACKGROUNDS = {
    "disk": (0.1, 0.01),
    "heartlung": (0.1, 0.01),
    "shepplogan": (0.3, 0.03),
}


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    sigma_b: float
    mu_b: float
    grid: Grid2D

    def __post_init__(self):
        if self.kind not in PHANTOMS:
            raise ValueError(f"unknown phantom {self.kind!r}; choose from {', '.join(sorted(PHANTOMS))}")
        if self.sigma_b <= 0 or self.mu_b <= 0:
            raise ValueError("background coefficients must be positive")

    def build(self) -> tuple[np.ndarray, np.ndarray]:
        return PHANTOMS[self.kind](self.grid, self.sigma_b, self.mu_b)


@dataclass(frozen=True)
class HeartLungGeometry:
    lung_centers: tuple[tuple[float, float], ...] = ((-0.4, 0.1), (0.4, 0.1))
    lung_axes: tuple[float, float] = (0.25, 0.45)
    heart_center: tuple[float, float] = (0.0, -0.25)
    heart_radius: float = 0.2
    lung_value: float = 1.0
    heart_value: float = 0.5


def _ellipse(X, Y, x0, y0, a, b, phi_deg=0.0):
    phi = np.deg2rad(phi_deg)
    c, s = np.cos(phi), np.sin(phi)
    xr = (X - x0) * c + (Y - y0) * s
    yr = -(X - x0) * s + (Y - y0) * c
    return (xr / a) ** 2 + (yr / b) ** 2 <= 1.0


def make_disk(grid: Grid2D, sigma_b: float = 0.1, mu_b: float = 0.01, center=(0.25, 0.25), radius=0.25, value=1.0):
    X, Y = grid.mesh()
    inside = (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= radius**2
    sigma = np.where(inside, value, sigma_b)
    mu = np.where(inside, 0.1 * value, mu_b)
    return sigma, mu


def make_heartlung(grid: Grid2D, sigma_b: float = 0.1, mu_b: float = 0.01, geometry: HeartLungGeometry | None = None):
    geo = geometry or HeartLungGeometry()
    X, Y = grid.mesh()
    sigma = np.full(grid.shape, sigma_b)
    mu = np.full(grid.shape, mu_b)
    for cx, cy in geo.lung_centers:
        lung = _ellipse(X, Y, cx, cy, *geo.lung_axes)
        sigma[lung] = geo.lung_value
        mu[lung] = 0.1 * geo.lung_value
    hx, hy = geo.heart_center
    heart = _ellipse(X, Y, hx, hy, geo.heart_radius, geo.heart_radius)
    sigma[heart] = geo.heart_value
    mu[heart] = 0.1 * geo.heart_value
    return sigma, mu


def shepp_logan_intensity(grid: Grid2D) -> np.ndarray:
    """Raw modified Shepp-Logan intensities (0 outside the head, 1 on the skull)."""
    X, Y = grid.mesh()
    p = np.zeros(grid.shape)
    for value, a, b, x0, y0, phi in SHEPP_LOGAN_TABLE:
        p[_ellipse(X, Y, x0, y0, a, b, phi)] += value
    return p


def make_shepplogan(grid: Grid2D, sigma_b: float = 0.3, mu_b: float = 0.03):
    """Shepp-Logan sigma mapped affinely so the exterior is ``sigma_b`` and the maximum 1.

    ``mu = 0.1 sigma`` at every node; ``mu_b`` is only a reconstruction reference.
    """
    p = shepp_logan_intensity(grid)
    sigma = sigma_b + (1.0 - sigma_b) * p
    # Round-off in the summed table can leave -1e-17 where p should be 0.
    sigma = np.where(np.abs(p) < 1e-12, sigma_b, sigma)
    return sigma, 0.1 * sigma


PHANTOMS = {
    "disk": make_disk,
    "heartlung": make_heartlung,
    "shepplogan": make_shepplogan,
}


def make_phantom(name: str, grid: Grid2D, sigma_b: float | None = None, mu_b: float | None = None):
    if name not in PHANTOMS:
        raise ValueError(f"unknown phantom {name!r}; choose from {', '.join(sorted(PHANTOMS))}")
    sb, mb = DEFAULT_BACKGROUNDS[name]
    return PHANTOMS[name](grid, sb if sigma_b is None else sigma_b, mb if mu_b is None else mu_b)


def derive_optics(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diffusion ``D = 0.1 sigma`` and a unit Grueneisen field."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive everywhere for D = 0.1 sigma to be admissible")
    return 0.1 * sigma, np.ones_like(sigma)
