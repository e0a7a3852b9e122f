"""Field files.

TPF is a plain-text format: a header line ``tpf1 nx ny x_min x_max y_min y_max``
followed by ``nx*ny`` values in row-major node order (x index slowest), one per
line, written with ``repr`` so a round trip is bit-exact.  CSV export writes
``x,y,value`` rows.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import Grid2D, ScalarField

__all__ = ["write_tpf", "read_tpf", "write_csv", "write_metadata", "read_metadata"]


def write_tpf(path, field: ScalarField) -> None:
    g = field.grid
    lines = [f"tpf1 {g.n} {g.n} {float(g.x_min)!r} {float(g.x_max)!r} {float(g.y_min)!r} {float(g.y_max)!r}"]
    lines.extend(repr(float(v)) for v in field.values.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def read_tpf(path) -> ScalarField:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such field file: {path}")
    with path.open() as fh:
        header = fh.readline().split()
        if len(header) != 7 or header[0] != "tpf1":
            raise ValueError(f"{path}: not a tpf1 file")
        nx, ny = int(header[1]), int(header[2])
        if nx != ny:
            raise ValueError(f"{path}: only square grids are supported, got {nx}x{ny}")
        x_min, x_max, y_min, y_max = (float(t) for t in header[3:])
        values = np.array(fh.read().split(), dtype=float)
    if values.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values, found {values.size}")
    grid = Grid2D(x_min, x_max, y_min, y_max, nx)
    return ScalarField(grid, values.reshape(nx, ny))


def write_csv(path, field: ScalarField) -> None:
    X, Y = field.grid.mesh()
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for x, y, v in zip(X.ravel(), Y.ravel(), field.values.ravel()):
            fh.write(f"{float(x)!r},{float(y)!r},{float(v)!r}\n")


def write_metadata(path, meta: dict) -> None:
    """``key=value`` lines in sorted key order."""
    with open(path, "w") as fh:
        for key in sorted(meta):
            fh.write(f"{key}={meta[key]}\n")


def read_metadata(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out
