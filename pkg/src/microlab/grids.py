"""Node-centered grids on the unit square.

A field stores one value per node (i/(nx-1), j/(ny-1)); arrays are row-major
with shape (ny, nx), so values[j, i] lives at x1 = i/(nx-1), x2 = j/(ny-1).
Derivatives are forward differences that keep the output on the same grid by
copying the last interior column/row.  The second-difference total variation
uses the anisotropic l1 stencil (the mixed difference is counted twice), which
is the discrete counterpart of the interface mass used by the analytic
evaluator.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "BC_LEFT_ZERO",
    "BC_LEFT_IDENTITY",
    "BC_TOL",
    "GridField",
    "grid_nodes",
    "d1",
    "d2",
    "second_total_variation",
    "l1_distance",
    "write_field",
    "read_field",
]

BC_LEFT_ZERO = "DirichletLeftZero"
BC_LEFT_IDENTITY = "DirichletLeftIdentity"
BC_TOL = 1e-12

_BC_TAGS = (None, BC_LEFT_ZERO, BC_LEFT_IDENTITY)


def grid_nodes(n: int) -> np.ndarray:
    """Node coordinates 0, 1/(n-1), ..., 1."""
    if n < 2:
        raise ValueError("need at least 2 nodes per direction")
    return np.arange(n, dtype=float) / (n - 1)


def _check_bc_column(values: np.ndarray, bc: Optional[str]) -> None:
    if bc is None:
        return
    ny = values.shape[0]
    col = values[:, 0]
    if bc == BC_LEFT_ZERO:
        err = float(np.max(np.abs(col)))
    elif bc == BC_LEFT_IDENTITY:
        err = float(np.max(np.abs(col - grid_nodes(ny))))
    else:
        raise ValueError(f"unknown bc tag: {bc!r}")
    if err > BC_TOL:
        raise ValueError(
            f"left column violates {bc}: max deviation {err:.3e} > {BC_TOL:.0e}"
        )


@dataclass
class GridField:
    """Values on the uniform (nx x ny) node grid, with an optional left-edge tag."""

    nx: int
    ny: int
    values: np.ndarray
    bc: Optional[str] = None

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs nx >= 2 and ny >= 2")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.ny, self.nx):
            raise ValueError(
                f"values shape {v.shape} does not match (ny, nx)=({self.ny}, {self.nx})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        if self.bc not in _BC_TAGS:
            raise ValueError(f"unknown bc tag: {self.bc!r}")
        _check_bc_column(v, self.bc)
        self.values = v

    @property
    def xs(self) -> np.ndarray:
        return grid_nodes(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return grid_nodes(self.ny)

    def with_bc(self, bc: Optional[str]) -> "GridField":
        return GridField(self.nx, self.ny, self.values.copy(), bc)


def d1(f: GridField) -> GridField:
    """Forward difference in x1, last column copied; result carries no bc tag."""
    g = np.empty_like(f.values)
    g[:, :-1] = (f.values[:, 1:] - f.values[:, :-1]) * (f.nx - 1)
    g[:, -1] = g[:, -2]
    return GridField(f.nx, f.ny, g, None)


def d2(f: GridField) -> GridField:
    """Forward difference in x2, last row copied; result carries no bc tag."""
    g = np.empty_like(f.values)
    g[:-1, :] = (f.values[1:, :] - f.values[:-1, :]) * (f.ny - 1)
    g[-1, :] = g[-2, :]
    return GridField(f.nx, f.ny, g, None)


def second_total_variation(f: GridField) -> float:
    """l1 mass of second differences, in derivative units.

    Sums |D11| over interior columns, |D22| over interior rows and twice |D12|
    over cells, each weighted by the cell area.  Vanishes exactly on affine
    fields.
    """
    if f.nx < 3 or f.ny < 3:
        raise ValueError("second differences need nx >= 3 and ny >= 3")
    v = f.values
    nx, ny = f.nx, f.ny
    s11 = (v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]) * (nx - 1) ** 2
    s22 = (v[2:, :] - 2.0 * v[1:-1, :] + v[:-2, :]) * (ny - 1) ** 2
    s12 = (v[1:, 1:] - v[1:, :-1] - v[:-1, 1:] + v[:-1, :-1]) * (nx - 1) * (ny - 1)
    area = 1.0 / ((nx - 1) * (ny - 1))
    parts = [
        math.fsum(np.abs(s11).ravel()),
        math.fsum(np.abs(s22).ravel()),
        2.0 * math.fsum(np.abs(s12).ravel()),
    ]
    return math.fsum(parts) * area


def l1_distance(f: GridField, g: GridField) -> float:
    """L1 distance via per-cell averages of |f - g| at the four corners."""
    if (f.nx, f.ny) != (g.nx, g.ny):
        raise ValueError("fields live on different grids")
    diff = np.abs(f.values - g.values)
    corner_mean = 0.25 * (
        diff[:-1, :-1] + diff[1:, :-1] + diff[:-1, 1:] + diff[1:, 1:]
    )
    area = 1.0 / ((f.nx - 1) * (f.ny - 1))
    return math.fsum(corner_mean.ravel()) * area


# ---------------------------------------------------------------------------
# MICROFIELD format
# ---------------------------------------------------------------------------

_MAGIC = "MICROFIELD 1"


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_field(f: GridField, path) -> None:
    """Write the MICROFIELD 1 format: header, 'nx ny bc', then ny rows (j=0 first)."""
    lines = [_MAGIC, f"{f.nx} {f.ny} {f.bc if f.bc is not None else 'None'}"]
    for j in range(f.ny):
        lines.append(" ".join(_fmt(x) for x in f.values[j]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path) -> GridField:
    with open(path) as fh:
        raw = fh.read()
    lines = [ln for ln in raw.splitlines() if ln.strip() != ""]
    if not lines or lines[0].strip() != _MAGIC:
        raise ValueError(f"not a {_MAGIC} file: {path}")
    header = lines[1].split()
    if len(header) != 3:
        raise ValueError("malformed header line: expected 'nx ny bc'")
    nx, ny = int(header[0]), int(header[1])
    bc = None if header[2] == "None" else header[2]
    rows = lines[2:]
    if len(rows) != ny:
        raise ValueError(f"expected {ny} data rows, found {len(rows)}")
    values = np.empty((ny, nx))
    for j, ln in enumerate(rows):
        parts = ln.split()
        if len(parts) != nx:
            raise ValueError(f"row {j}: expected {nx} values, found {len(parts)}")
        values[j] = [float(p) for p in parts]
    return GridField(nx, ny, values, bc)
