"""Uniform rectangular grids and nodal scalar fields.

Everything downstream (stencils, solvers, energies) operates on a
``Field`` attached to a ``Grid2D``.  Quadrature is the tensor-product
trapezoidal rule, so integrals of bilinear functions are exact and the
induced norms match summation by parts at the stencil order.

Storage convention: field values are held as a ``(ny, nx)`` array with
``values[j, i]`` the sample at ``(x_i, y_j)``.  Flattening is row-major,
i.e. the x index runs fastest, and the serialized formats use exactly
that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

__all__ = [
    "BoundaryKind",
    "Field",
    "Grid2D",
    "GridMismatchError",
    "axpy",
    "integrate",
    "norm_l2",
    "norm_linf",
    "read_field_csv",
    "read_field_epx1",
    "sub",
    "write_field_csv",
    "write_field_epx1",
]

EPX1_MAGIC = b"EPX1"


class BoundaryKind(str, Enum):
    """Boundary condition tag: clamped plate vs hinged plate."""

    DIRICHLET = "dirichlet"  # u = 0 and du/dn = 0
    NAVIER = "navier"        # u = 0 and lap(u) = 0


class GridMismatchError(ValueError):
    """An operation mixed fields living on different grids."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform tensor grid on the rectangle [x0, x1] x [y0, y1].

    ``nx`` and ``ny`` are node counts (not cell counts) and must both be
    at least 5 so the 13-point biharmonic stencil has two interior
    layers to stand on.
    """

    nx: int
    ny: int
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    def __post_init__(self):
        if self.nx < 5 or self.ny < 5:
            raise ValueError(f"need nx, ny >= 5, got {self.nx} x {self.ny}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("degenerate rectangle: require x1 > x0 and y1 > y0")

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape of a field on this grid, (ny, nx)."""
        return (self.ny, self.nx)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    def ys(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays X, Y of shape (ny, nx)."""
        return np.meshgrid(self.xs(), self.ys(), indexing="xy")

    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights, shape (ny, nx); hx*hy inside, halved on edges."""
        wx = np.full(self.nx, self.hx)
        wx[0] = wx[-1] = 0.5 * self.hx
        wy = np.full(self.ny, self.hy)
        wy[0] = wy[-1] = 0.5 * self.hy
        return np.outer(wy, wx)

    def refine(self) -> "Grid2D":
        """Dyadic refinement: cell counts double, corners unchanged."""
        return Grid2D(2 * self.nx - 1, 2 * self.ny - 1,
                      self.x0, self.x1, self.y0, self.y1)


class Field:
    """Scalar function sampled at the nodes of a ``Grid2D``.

    Values are stored as float64 with shape ``grid.shape``; constructors
    reject non-finite entries so NaN/Inf never propagate silently.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid2D, values: np.ndarray):
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape == (grid.n_nodes,):
            arr = arr.reshape(grid.shape)
        if arr.shape != grid.shape:
            raise ValueError(f"values shape {arr.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field contains non-finite values")
        self.grid = grid
        self.values = arr

    @classmethod
    def zeros(cls, grid: Grid2D) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: Grid2D, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "Field":
        """Sample ``fn(X, Y)`` at the nodes (fn must broadcast over arrays)."""
        X, Y = grid.meshgrid()
        return cls(grid, np.broadcast_to(np.asarray(fn(X, Y), dtype=np.float64), grid.shape).copy())

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def flat(self) -> np.ndarray:
        """Row-major flat view (x index fastest)."""
        return self.values.ravel()

    def __repr__(self) -> str:
        g = self.grid
        return (f"Field({g.nx}x{g.ny} on [{g.x0},{g.x1}]x[{g.y0},{g.y1}], "
                f"range [{self.values.min():.3g}, {self.values.max():.3g}])")


def _same_grid(x: Field, y: Field) -> Grid2D:
    if x.grid != y.grid:
        raise GridMismatchError(f"fields live on different grids: {x.grid} vs {y.grid}")
    return x.grid


def integrate(f: Field) -> float:
    """Trapezoidal approximation of the integral of f over the rectangle."""
    return float(np.sum(f.grid.trapezoid_weights() * f.values))


def norm_l2(f: Field) -> float:
    """Discrete L2 norm, sqrt(integrate(f^2))."""
    return float(np.sqrt(np.sum(f.grid.trapezoid_weights() * f.values ** 2)))


def norm_linf(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def axpy(a: float, x: Field, y: Field) -> Field:
    """a*x + y on a shared grid."""
    g = _same_grid(x, y)
    return Field(g, a * x.values + y.values)


def sub(x: Field, y: Field) -> Field:
    g = _same_grid(x, y)
    return Field(g, x.values - y.values)


# ---------------------------------------------------------------------------
# Serialization: CSV (human readable) and EPX1 (bit-exact binary)
# ---------------------------------------------------------------------------

def write_field_csv(f: Field, path) -> None:
    """CSV with a `# nx ny x0 x1 y0 y1` header and one x,y,value row per node."""
    g = f.grid
    X, Y = g.meshgrid()
    with open(path, "w") as fh:
        fh.write(f"# {g.nx} {g.ny} {g.x0!r} {g.x1!r} {g.y0!r} {g.y1!r}\n")
        for x, y, v in zip(X.ravel(), Y.ravel(), f.values.ravel()):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")


def read_field_csv(path) -> Field:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("missing field CSV header")
        parts = header[1:].split()
        nx, ny = int(parts[0]), int(parts[1])
        x0, x1, y0, y1 = (float(p) for p in parts[2:6])
        vals = np.loadtxt(fh, delimiter=",", usecols=2, ndmin=1)
    grid = Grid2D(nx, ny, x0, x1, y0, y1)
    return Field(grid, vals)


def write_field_epx1(f: Field, path) -> None:
    """Raw little-endian binary: EPX1 magic, u32 nx/ny, f64 corners, f64 values."""
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(EPX1_MAGIC)
        fh.write(np.asarray([g.nx, g.ny], dtype="<u4").tobytes())
        fh.write(np.asarray([g.x0, g.x1, g.y0, g.y1], dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field_epx1(path) -> Field:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EPX1_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {EPX1_MAGIC!r}")
        nx, ny = np.frombuffer(fh.read(8), dtype="<u4")
        x0, x1, y0, y1 = np.frombuffer(fh.read(32), dtype="<f8")
        vals = np.frombuffer(fh.read(8 * int(nx) * int(ny)), dtype="<f8")
    grid = Grid2D(int(nx), int(ny), float(x0), float(x1), float(y0), float(y1))
    return Field(grid, vals.reshape(grid.shape).copy())
