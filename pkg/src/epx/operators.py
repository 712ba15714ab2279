"""Second-order finite-difference operators on nodal fields.

Provides the gradient, Laplacian, bilaplacian, mixed derivative, the
Hessian determinant in its direct and divergence forms, and the rotated
gradient.  All stencils are central and second order at interior nodes;
what happens on the boundary ring is controlled by a ghost policy:

``reflect_even``
    ghost = first interior value (even reflection about the boundary
    node), encoding a vanishing normal derivative.
``antireflect``
    ghost = 2*boundary - first interior (odd reflection about the
    boundary value); for a field vanishing on the boundary this makes
    the boundary Laplacian exactly zero, matching hinged conditions.
``second_layer``
    ghost extrapolated through the second interior layer, which turns
    boundary first differences into the standard one-sided second-order
    formula.

The module also assembles the same stencils as sparse matrices over all
nodes (cached per grid).  The energy module uses those matrices so that
discrete gradients are exact transposes of what was evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import BoundaryKind, Field, Grid2D

__all__ = [
    "GHOST_POLICIES",
    "StencilOp",
    "bilaplacian_dirichlet",
    "bilaplacian_navier",
    "dx",
    "dxy",
    "dy",
    "ghost_policy_for",
    "grad_perp",
    "hessian_det",
    "hessian_det_divergence",
    "laplacian",
    "laplacian_matrix",
    "dx_matrix",
    "dy_matrix",
    "dxy_matrix",
]

GHOST_POLICIES = ("reflect_even", "antireflect", "second_layer")


def ghost_policy_for(bc: BoundaryKind) -> str:
    """Ghost policy matching a boundary condition on admissible fields."""
    return "reflect_even" if bc == BoundaryKind.DIRICHLET else "antireflect"


def _ghost_line(v0: np.ndarray, v1: np.ndarray, v2: np.ndarray, policy: str) -> np.ndarray:
    # v0 = boundary layer, v1/v2 = first/second interior layers
    if policy == "reflect_even":
        return v1
    if policy == "antireflect":
        return 2.0 * v0 - v1
    if policy == "second_layer":
        return 3.0 * v0 - 3.0 * v1 + v2
    raise ValueError(f"unknown ghost policy {policy!r}")


def _pad(values: np.ndarray, policy: str) -> np.ndarray:
    """Extend a (ny, nx) array by one ghost layer on every side."""
    ny, nx = values.shape
    g = np.empty((ny + 2, nx + 2))
    g[1:-1, 1:-1] = values
    g[1:-1, 0] = _ghost_line(values[:, 0], values[:, 1], values[:, 2], policy)
    g[1:-1, -1] = _ghost_line(values[:, -1], values[:, -2], values[:, -3], policy)
    g[0, 1:-1] = _ghost_line(values[0], values[1], values[2], policy)
    g[-1, 1:-1] = _ghost_line(values[-1], values[-2], values[-3], policy)
    # corners: apply the x rule to the already-extended ghost rows
    for row in (0, -1):
        g[row, 0] = _ghost_line(g[row, 1], g[row, 2], g[row, 3], policy)
        g[row, -1] = _ghost_line(g[row, -2], g[row, -3], g[row, -4], policy)
    return g


def dx(u: Field, ghost: str = "second_layer") -> Field:
    """Central x derivative; boundary columns per ghost policy."""
    g = _pad(u.values, ghost)
    return Field(u.grid, (g[1:-1, 2:] - g[1:-1, :-2]) / (2.0 * u.grid.hx))


def dy(u: Field, ghost: str = "second_layer") -> Field:
    g = _pad(u.values, ghost)
    return Field(u.grid, (g[2:, 1:-1] - g[:-2, 1:-1]) / (2.0 * u.grid.hy))


def dxy(u: Field, ghost: str = "second_layer") -> Field:
    """Cross-centered mixed derivative (4-point stencil)."""
    g = _pad(u.values, ghost)
    v = (g[2:, 2:] - g[2:, :-2] - g[:-2, 2:] + g[:-2, :-2]) / (4.0 * u.grid.hx * u.grid.hy)
    return Field(u.grid, v)


def laplacian(u: Field, ghost: str = "reflect_even") -> Field:
    """5-point Laplacian at every node, ghosts synthesized per policy."""
    g = _pad(u.values, ghost)
    c = u.values
    v = ((g[1:-1, 2:] - 2.0 * c + g[1:-1, :-2]) / u.grid.hx ** 2
         + (g[2:, 1:-1] - 2.0 * c + g[:-2, 1:-1]) / u.grid.hy ** 2)
    return Field(u.grid, v)


def bilaplacian_dirichlet(u: Field) -> Field:
    """13-point bilaplacian with even-reflection ghosts (clamped closure).

    Interior nodes only; the boundary ring of the result is zero.  The
    first interior layer uses the ghost u[-1] = u[1], which assumes the
    field is clamped (u = 0 and du/dn = 0 on the boundary).
    """
    grid = u.grid
    hx2, hy2 = grid.hx ** 2, grid.hy ** 2
    g = _pad(u.values, "reflect_even")
    # padded coords: node (j, i) sits at g[j+1, i+1]; the +-2 reach of the
    # fourth differences lands on the ghost only at the first interior layer
    d4x = (g[2:-2, 0:-4] - 4.0 * g[2:-2, 1:-3] + 6.0 * g[2:-2, 2:-2]
           - 4.0 * g[2:-2, 3:-1] + g[2:-2, 4:]) / hx2 ** 2
    d4y = (g[0:-4, 2:-2] - 4.0 * g[1:-3, 2:-2] + 6.0 * g[2:-2, 2:-2]
           - 4.0 * g[3:-1, 2:-2] + g[4:, 2:-2]) / hy2 ** 2
    v = u.values
    cross = (v[2:, 2:] + v[2:, :-2] + v[:-2, 2:] + v[:-2, :-2]
             - 2.0 * (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2])
             + 4.0 * v[1:-1, 1:-1]) / (hx2 * hy2)
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = d4x + d4y + 2.0 * cross
    return Field(grid, out)


def bilaplacian_navier(u: Field) -> Field:
    """Bilaplacian as two hinged Laplacians (exact for Navier solutions)."""
    return laplacian(laplacian(u, "antireflect"), "antireflect")


def hessian_det(u: Field) -> Field:
    """det(D^2 u) = u_xx u_yy - u_xy^2 at interior nodes; zero ring.

    Only interior values feed the solvers (boundary rows are identity),
    so the ring is set to zero rather than ghost-extrapolated.
    """
    grid = u.grid
    v = u.values
    hx2, hy2 = grid.hx ** 2, grid.hy ** 2
    uxx = (v[1:-1, 2:] - 2.0 * v[1:-1, 1:-1] + v[1:-1, :-2]) / hx2
    uyy = (v[2:, 1:-1] - 2.0 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / hy2
    uxy = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4.0 * grid.hx * grid.hy)
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = uxx * uyy - uxy ** 2
    return Field(grid, out)


def hessian_det_divergence(u: Field) -> Field:
    """Divergence form (u_x u_y)_xy - (u_y^2)_xx/2 - (u_x^2)_yy/2.

    Built exactly as written: nodal gradient fields first (one-sided
    second-order closures on the boundary so products stay accurate),
    then central differences of the products.  Zero ring, as above.
    """
    grid = u.grid
    px = dx(u, "second_layer").values
    py = dy(u, "second_layer").values
    a = px * py
    b = py ** 2
    c = px ** 2
    hx2, hy2 = grid.hx ** 2, grid.hy ** 2
    a_xy = (a[2:, 2:] - a[2:, :-2] - a[:-2, 2:] + a[:-2, :-2]) / (4.0 * grid.hx * grid.hy)
    b_xx = (b[1:-1, 2:] - 2.0 * b[1:-1, 1:-1] + b[1:-1, :-2]) / hx2
    c_yy = (c[2:, 1:-1] - 2.0 * c[1:-1, 1:-1] + c[:-2, 1:-1]) / hy2
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = a_xy - 0.5 * b_xx - 0.5 * c_yy
    return Field(grid, out)


def grad_perp(u: Field, ghost: str = "second_layer") -> tuple[Field, Field]:
    """Rotated gradient (u_y, -u_x)."""
    gy = dy(u, ghost)
    gx = dx(u, ghost)
    return gy, Field(u.grid, -gx.values)


@dataclass(frozen=True)
class StencilOp:
    """Named stencil plus ghost policy, applied as a unit."""

    name: str  # grad_x | grad_y | laplacian | mixed_xy | bilaplacian
    ghost_policy: str = "reflect_even"

    def apply(self, u: Field) -> Field:
        if self.name == "grad_x":
            return dx(u, self.ghost_policy)
        if self.name == "grad_y":
            return dy(u, self.ghost_policy)
        if self.name == "laplacian":
            return laplacian(u, self.ghost_policy)
        if self.name == "mixed_xy":
            return dxy(u, self.ghost_policy)
        if self.name == "bilaplacian":
            return bilaplacian_dirichlet(u)
        raise ValueError(f"unknown stencil {self.name!r}")


# ---------------------------------------------------------------------------
# Sparse realizations over all nodes (ghosts folded into the matrix).
# Row-major flat index k = j*nx + i.
# ---------------------------------------------------------------------------

def _fold_ghost_row(mat_rows, n: int, h: float, kind: str, policy: str):
    """First/second-difference 1D matrix rows with folded boundary ghosts."""
    rows, cols, vals = mat_rows
    if kind == "d1":
        interior = 1.0 / (2.0 * h)
        for i in range(1, n - 1):
            rows += [i, i]
            cols += [i - 1, i + 1]
            vals += [-interior, interior]
        closures = {
            "reflect_even": ([], []),
            "antireflect": ([0, 1], [-1.0 / h, 1.0 / h]),
            "second_layer": ([0, 1, 2], [-1.5 / h, 2.0 / h, -0.5 / h]),
        }
        c, v = closures[policy]
        rows += [0] * len(c); cols += list(c); vals += list(v)
        rows += [n - 1] * len(c); cols += [n - 1 - j for j in c]; vals += [-x for x in v]
    elif kind == "d2":
        ih2 = 1.0 / h ** 2
        for i in range(1, n - 1):
            rows += [i, i, i]
            cols += [i - 1, i, i + 1]
            vals += [ih2, -2.0 * ih2, ih2]
        closures = {
            "reflect_even": ([0, 1], [-2.0 * ih2, 2.0 * ih2]),
            "antireflect": ([], []),
            "second_layer": ([0, 1, 2], [ih2, -2.0 * ih2, ih2]),
        }
        c, v = closures[policy]
        rows += [0] * len(c); cols += list(c); vals += list(v)
        rows += [n - 1] * len(c); cols += [n - 1 - j for j in c]; vals += list(v)
    else:
        raise ValueError(kind)


@lru_cache(maxsize=None)
def _matrix_1d(n: int, h: float, kind: str, policy: str) -> sp.csr_matrix:
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    _fold_ghost_row((rows, cols, vals), n, h, kind, policy)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@lru_cache(maxsize=None)
def dx_matrix(grid: Grid2D, ghost: str = "reflect_even") -> sp.csr_matrix:
    return sp.kron(sp.identity(grid.ny, format="csr"),
                   _matrix_1d(grid.nx, grid.hx, "d1", ghost), format="csr")


@lru_cache(maxsize=None)
def dy_matrix(grid: Grid2D, ghost: str = "reflect_even") -> sp.csr_matrix:
    return sp.kron(_matrix_1d(grid.ny, grid.hy, "d1", ghost),
                   sp.identity(grid.nx, format="csr"), format="csr")


@lru_cache(maxsize=None)
def dxy_matrix(grid: Grid2D, ghost: str = "reflect_even") -> sp.csr_matrix:
    return sp.kron(_matrix_1d(grid.ny, grid.hy, "d1", ghost),
                   _matrix_1d(grid.nx, grid.hx, "d1", ghost), format="csr")


@lru_cache(maxsize=None)
def laplacian_matrix(grid: Grid2D, ghost: str = "reflect_even") -> sp.csr_matrix:
    return (sp.kron(sp.identity(grid.ny, format="csr"),
                    _matrix_1d(grid.nx, grid.hx, "d2", ghost), format="csr")
            + sp.kron(_matrix_1d(grid.ny, grid.hy, "d2", ghost),
                      sp.identity(grid.nx, format="csr"), format="csr")).tocsr()
