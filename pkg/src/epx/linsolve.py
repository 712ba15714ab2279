"""Sparse linear kernels: Poisson and biharmonic solves on the rectangle.

Three solvers, all with u = 0 on the boundary ring:

* ``solve_poisson``            -lap(u) = g            (5-point)
* ``solve_biharmonic_navier``  lap^2(u) = g, lap u = 0 (two Poisson solves)
* ``solve_biharmonic_dirichlet`` lap^2(u) = g, du/dn = 0 (13-point system)

Boundary conditions enter by row elimination: unknowns are the interior
nodes only, boundary values are identically zero, and the clamped
normal-derivative condition is folded in through even-reflection ghosts.
Systems are solved by a cached sparse LU when small enough, otherwise
by diagonally preconditioned conjugate gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import BoundaryKind, Field, Grid2D

__all__ = [
    "DIRECT_SOLVE_LIMIT",
    "SingularSystemError",
    "SparseSystem",
    "biharmonic_dirichlet_matrix",
    "biharmonic_navier_matrix",
    "dump_system",
    "embed_interior",
    "interior_values",
    "poisson_matrix",
    "solve_biharmonic_dirichlet",
    "solve_biharmonic_navier",
    "solve_poisson",
]

DIRECT_SOLVE_LIMIT = 250_000  # unknowns; beyond this fall back to CG
CG_RTOL = 1e-9


class SingularSystemError(RuntimeError):
    """The assembled system could not be solved (breakdown or divergence)."""


@dataclass(frozen=True)
class SparseSystem:
    """Assembled CSR system A x = rhs over the interior unknowns."""

    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def interior_values(f: Field) -> np.ndarray:
    return f.values[1:-1, 1:-1].ravel()


def embed_interior(grid: Grid2D, x: np.ndarray) -> Field:
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = x.reshape(grid.ny - 2, grid.nx - 2)
    return Field(grid, out)


def _d2_interior(n: int, h: float) -> sp.csr_matrix:
    """1D second difference on interior nodes with zero Dirichlet ends."""
    m = n - 2
    ih2 = 1.0 / h ** 2
    return sp.diags([ih2, -2.0 * ih2, ih2], [-1, 0, 1], shape=(m, m), format="csr")


def _d4_clamped(n: int, h: float) -> sp.csr_matrix:
    """1D fourth difference on interior nodes, even-reflection ghosts."""
    m = n - 2
    ih4 = 1.0 / h ** 4
    mat = sp.diags([ih4, -4.0 * ih4, 6.0 * ih4, -4.0 * ih4, ih4],
                   [-2, -1, 0, 1, 2], shape=(m, m), format="lil")
    mat[0, 0] += ih4        # ghost u[-1] = u[1]
    mat[m - 1, m - 1] += ih4
    return mat.tocsr()


@lru_cache(maxsize=None)
def poisson_matrix(grid: Grid2D) -> sp.csr_matrix:
    """-lap over interior unknowns (SPD)."""
    ax = _d2_interior(grid.nx, grid.hx)
    ay = _d2_interior(grid.ny, grid.hy)
    ix = sp.identity(grid.nx - 2, format="csr")
    iy = sp.identity(grid.ny - 2, format="csr")
    return (-(sp.kron(iy, ax) + sp.kron(ay, ix))).tocsr()


@lru_cache(maxsize=None)
def biharmonic_dirichlet_matrix(grid: Grid2D) -> sp.csr_matrix:
    """13-point clamped bilaplacian over interior unknowns (SPD)."""
    d4x = _d4_clamped(grid.nx, grid.hx)
    d4y = _d4_clamped(grid.ny, grid.hy)
    d2x = _d2_interior(grid.nx, grid.hx)
    d2y = _d2_interior(grid.ny, grid.hy)
    ix = sp.identity(grid.nx - 2, format="csr")
    iy = sp.identity(grid.ny - 2, format="csr")
    return (sp.kron(iy, d4x) + sp.kron(d4y, ix) + 2.0 * sp.kron(d2y, d2x)).tocsr()


@lru_cache(maxsize=None)
def biharmonic_navier_matrix(grid: Grid2D) -> sp.csr_matrix:
    """Hinged bilaplacian: square of the interior Poisson matrix."""
    a = poisson_matrix(grid)
    return (a @ a).tocsr()


@lru_cache(maxsize=None)
def _lu(grid: Grid2D, which: str):
    mats = {"poisson": poisson_matrix, "dirichlet": biharmonic_dirichlet_matrix}
    try:
        return spla.splu(mats[which](grid).tocsc())
    except RuntimeError as exc:  # pragma: no cover - healthy grids never trip this
        raise SingularSystemError(f"{which} factorization failed: {exc}") from exc


def _solve(grid: Grid2D, which: str, rhs: np.ndarray) -> np.ndarray:
    mat = {"poisson": poisson_matrix, "dirichlet": biharmonic_dirichlet_matrix}[which](grid)
    if mat.shape[0] <= DIRECT_SOLVE_LIMIT:
        return _lu(grid, which).solve(rhs)
    precond = spla.LinearOperator(mat.shape, lambda v: v / mat.diagonal())
    x, info = spla.cg(mat, rhs, rtol=CG_RTOL, maxiter=20 * mat.shape[0], M=precond)
    if info != 0:
        raise SingularSystemError(f"CG failed on {which} system (info={info})")
    return x


def solve_poisson(g: Field) -> Field:
    """Solve -lap(u) = g with u = 0 on the boundary."""
    return embed_interior(g.grid, _solve(g.grid, "poisson", interior_values(g)))


def solve_biharmonic_navier(g: Field) -> Field:
    """Solve lap^2(u) = g with u = lap(u) = 0: two nested Poisson solves."""
    return solve_poisson(solve_poisson(g))


def solve_biharmonic_dirichlet(g: Field) -> Field:
    """Solve lap^2(u) = g with u = du/dn = 0 via the 13-point system."""
    return embed_interior(g.grid, _solve(g.grid, "dirichlet", interior_values(g)))


def solve_biharmonic(g: Field, bc: BoundaryKind) -> Field:
    if bc == BoundaryKind.NAVIER:
        return solve_biharmonic_navier(g)
    return solve_biharmonic_dirichlet(g)


def assemble_system(g: Field, which: str) -> SparseSystem:
    """Expose the assembled system, mainly for inspection and dumps."""
    mats = {"poisson": poisson_matrix, "dirichlet": biharmonic_dirichlet_matrix,
            "navier": biharmonic_navier_matrix}
    return SparseSystem(mats[which](g.grid), interior_values(g))


def dump_system(system: SparseSystem, path) -> None:
    """Matrix Market coordinate dump of the assembled operator."""
    from scipy.io import mmwrite

    mmwrite(str(path), system.matrix)
