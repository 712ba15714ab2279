"""Fourth-order KPZ problem via system reduction and exponential transform.

lap^2 u = |grad(lap u)|^2 + lambda f with hinged data splits into

    -lap u = v,   -lap v = |grad v|^2 + lambda f,   u = v = 0 on the edge,

and w = e^v linearizes the second equation to -lap w = lambda f w with
w = 1 on the boundary.  Writing w = 1 + z gives the single linear solve

    (-lap - lambda f) z = lambda f,   z = 0 on the boundary,

valid while the shifted operator stays positive; admissibility is
checked a posteriori through w > 0 (and, for f >= 0, z >= 0 by the
discrete maximum principle while the matrix remains an M-matrix).
Only the bounded solution branch is computed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Field
from .linsolve import (DIRECT_SOLVE_LIMIT, SingularSystemError, embed_interior,
                       interior_values, poisson_matrix, solve_poisson)
from .operators import dx, dy, laplacian

__all__ = ["KpzAdmissibilityError", "KpzSolution", "solve_kpz"]


class KpzAdmissibilityError(RuntimeError):
    """lambda at or beyond the transform's spectral bound (w lost positivity)."""


@dataclass(frozen=True)
class KpzSolution:
    u: Field
    v: Field               # -lap u
    w: Field               # e^v, positive, 1 on the boundary
    residual_v: Field      # -lap v - |grad v|^2 - lambda f (interior)
    residual_composed: Field  # lap^2 u - |grad lap u|^2 - lambda f (interior)


def _interior_only(grid, arr: np.ndarray) -> Field:
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = arr[1:-1, 1:-1]
    return Field(grid, out)


def solve_kpz(f: Field, lam: float) -> KpzSolution:
    """Bounded branch of the fourth-order KPZ problem for f >= 0, small lambda."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if np.any(f.values < 0):
        raise ValueError("forcing must satisfy f >= 0")
    grid = f.grid

    a = poisson_matrix(grid)
    f_int = interior_values(f)
    mat = (a - lam * sp.diags(f_int)).tocsc()
    try:
        if mat.shape[0] <= DIRECT_SOLVE_LIMIT:
            z_int = spla.splu(mat).solve(lam * f_int)
        else:
            z_int, info = spla.gmres(mat, lam * f_int, rtol=1e-12)
            if info != 0:
                raise SingularSystemError(f"gmres failed (info={info})")
        if not np.all(np.isfinite(z_int)):
            raise SingularSystemError("non-finite solution")
    except (RuntimeError, SingularSystemError) as exc:
        raise KpzAdmissibilityError(
            f"shifted Poisson system unsolvable at lambda={lam}: {exc}") from exc

    z = embed_interior(grid, z_int)
    w_vals = 1.0 + z.values
    if np.any(w_vals <= 0.0):
        raise KpzAdmissibilityError(
            f"w = 1 + z dips to {w_vals.min():.3e} <= 0: lambda={lam} is at or "
            "beyond the transform's spectral bound")
    # per-run maximum-principle check (holds while the shifted operator
    # stays an M-matrix; small slack for rounding)
    if z.values.min() < -1e-12 * max(1.0, float(np.abs(z.values).max())):
        raise KpzAdmissibilityError(
            f"z dips to {z.values.min():.3e} < 0 for f >= 0: the shifted "
            f"operator lost monotonicity at lambda={lam}")
    w = Field(grid, w_vals)
    v = Field(grid, np.log(w_vals))          # exactly 0 on the boundary
    u = solve_poisson(v)

    grad2_v = dx(v).values ** 2 + dy(v).values ** 2
    res_v = -laplacian(v, "antireflect").values - grad2_v - lam * f.values
    residual_v = _interior_only(grid, res_v)

    lap_u = laplacian(u, "antireflect")       # equals -v up to solver tolerance
    grad2_lap = dx(lap_u).values ** 2 + dy(lap_u).values ** 2
    res_c = laplacian(lap_u, "antireflect").values - grad2_lap - lam * f.values
    residual_composed = _interior_only(grid, res_c)
    return KpzSolution(u, v, w, residual_v, residual_composed)
