"""Uniform node-centred grids on square domains and the discrete norms used throughout.

Fields are plain ``numpy`` arrays of shape ``(n, n)`` indexed ``[i, j]`` with
``i`` running along x and ``j`` along y, so node ``(i, j)`` sits at
``(x_min + i*h, y_min + j*h)``.  Flattening in C order gives the row-major
node order used by the TPF file format.  :class:`ScalarField` pairs such an
array with its grid when the two need to travel together (file I/O, transfer
between grids).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "Grid2D",
    "ScalarField",
    "build_grid",
    "discrete_l1_norm",
    "discrete_l2_norm",
    "inner",
    "restrict",
    "relative_l2_error",
    "is_transpose_symmetric",
]


@dataclass(frozen=True)
class Grid2D:
    """Square tensor grid with ``n`` nodes per axis, boundary nodes included."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    n: int

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("domain bounds must be strictly ordered")
        if not np.isclose(self.x_max - self.x_min, self.y_max - self.y_min, rtol=1e-12, atol=0.0):
            raise ValueError(
                f"domain must be square, got {self.x_max - self.x_min} x {self.y_max - self.y_min}"
            )
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"need at least 3 nodes per axis, got n={self.n}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + np.arange(self.n) * self.h

    @cached_property
    def y(self) -> np.ndarray:
        return self.y_min + np.arange(self.n) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(X, Y)`` with ``X[i, j] = x[i]``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        mask.flags.writeable = False
        return mask

    def same_domain(self, other: Grid2D) -> bool:
        return (self.x_min, self.x_max, self.y_min, self.y_max) == (
            other.x_min,
            other.x_max,
            other.y_min,
            other.y_max,
        )

    def check(self, *arrays: np.ndarray) -> None:
        """Raise if any array does not live on this grid."""
        for a in arrays:
            if np.shape(a) != self.shape:
                raise ValueError(f"field of shape {np.shape(a)} does not match grid {self.shape}")

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(X, Y)`` at every node."""
        X, Y = self.mesh()
        return np.asarray(func(X, Y), dtype=float) * np.ones(self.shape)


def build_grid(x_min: float, x_max: float, y_min: float, y_max: float, n: int) -> Grid2D:
    return Grid2D(float(x_min), float(x_max), float(y_min), float(y_max), int(n))


@dataclass(frozen=True)
class ScalarField:
    """A grid together with finite nodal values."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def _combinable(self, other: ScalarField) -> None:
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: ScalarField) -> ScalarField:
        self._combinable(other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: ScalarField) -> ScalarField:
        self._combinable(other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> ScalarField:
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)


def _spacing(u, h: float | None) -> float:
    if isinstance(u, ScalarField):
        return u.grid.h
    if h is None:
        raise TypeError("pass h when giving a bare array")
    return h


def discrete_l1_norm(u, h: float | None = None) -> float:
    """``h**2 * sum(|u|)`` over every node, boundary included."""
    return float(_spacing(u, h) ** 2 * np.abs(_values(u)).sum())


def inner(a: np.ndarray, b: np.ndarray, h: float) -> float:
    """h-weighted discrete L2 inner product over all nodes."""
    return float(h * h * np.vdot(a, b))


def discrete_l2_norm(u, h: float | None = None) -> float:
    v = _values(u)
    return float(_spacing(u, h) * np.sqrt(np.vdot(v, v)))


def relative_l2_error(u, u_ref) -> float:
    """``||u - u_ref|| / ||u_ref||`` in the discrete L2 norm (the h weights cancel)."""
    if isinstance(u, ScalarField) and isinstance(u_ref, ScalarField) and u.grid != u_ref.grid:
        raise ValueError("fields live on different grids")
    a, ref = _values(u), _values(u_ref)
    if a.shape != ref.shape:
        raise ValueError("fields have different shapes")
    denom = np.sqrt(np.vdot(ref, ref))
    if denom == 0.0:
        raise ValueError("reference field is identically zero")
    return float(np.sqrt(np.vdot(a - ref, a - ref)) / denom)


def restrict(u_fine: ScalarField, grid_coarse: Grid2D) -> ScalarField:
    """Bilinear interpolation of a fine field at the coarse nodes."""
    if not u_fine.grid.same_domain(grid_coarse):
        raise ValueError("fine and coarse grids cover different domains")
    g = u_fine.grid
    interp = RegularGridInterpolator((g.x, g.y), u_fine.values, method="linear")
    X, Y = grid_coarse.mesh()
    # Coarse nodes on the far edge can overshoot the fine axis by one ulp.
    pts = np.stack(
        [np.clip(X.ravel(), g.x[0], g.x[-1]), np.clip(Y.ravel(), g.y[0], g.y[-1])], axis=-1
    )
    return ScalarField(grid_coarse, interp(pts).reshape(grid_coarse.shape))


def is_transpose_symmetric(u, atol: float = 0.0) -> bool:
    """True when ``u(x, y) == u(y, x)`` nodewise (square grids only)."""
    v = _values(u)
    return bool(np.allclose(v, v.T, rtol=0.0, atol=atol))
