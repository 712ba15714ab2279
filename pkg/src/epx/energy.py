"""Discrete energy for the clamped problem and its exact gradient.

The functional is

    J(u) = 1/2 * int |lap u|^2  -  int u_x u_y u_xy  -  lambda * int f u

evaluated with trapezoidal quadrature and the even-ghost stencil
matrices from :mod:`epx.operators`.  The gradient returned here is the
exact transpose of that composition with respect to interior nodal
values, not a re-discretization of the Euler-Lagrange operator, so
line-search descent is monotone to rounding.

Also provided: the cubic cutoff used to truncate the energy, the scalar
radial minorant g(s) = s^2/2 - c1 s^3 - lambda c2 |f|_1 s whose positive
bump certifies the mountain-pass geometry, and empirical fits for the
two embedding constants c1, c2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .grid import Field, Grid2D, integrate, norm_linf
from .operators import dx_matrix, dxy_matrix, dy_matrix, laplacian_matrix

__all__ = [
    "EnergyBreakdown",
    "GeometrySetup",
    "TruncationParams",
    "bump_psi",
    "energy",
    "energy_gradient",
    "fit_embedding_constants",
    "minorant_lambda0",
    "mollified_direction",
    "radial_minorant",
    "setup_geometry",
    "truncated_energy",
    "truncated_energy_gradient",
]

_GHOST = "reflect_even"  # the energy lives on clamped (Dirichlet) fields


@dataclass(frozen=True)
class EnergyBreakdown:
    quad: float    # 1/2 int |lap u|^2
    cubic: float   # int u_x u_y u_xy
    linear: float  # lambda int f u

    @property
    def total(self) -> float:
        return self.quad - self.cubic - self.linear

    def write_csv_row(self, fh) -> None:
        fh.write(f"{self.quad:.17g},{self.cubic:.17g},{self.linear:.17g},{self.total:.17g}\n")


@lru_cache(maxsize=None)
def _mats(grid: Grid2D):
    return (laplacian_matrix(grid, _GHOST), dx_matrix(grid, _GHOST),
            dy_matrix(grid, _GHOST), dxy_matrix(grid, _GHOST))


@lru_cache(maxsize=None)
def _adjoints(grid: Grid2D):
    return tuple(m.T.tocsr() for m in _mats(grid))


def _terms(u: Field, f: Field, lam: float):
    L, DX, DY, DXY = _mats(u.grid)
    w = u.grid.trapezoid_weights().ravel()
    uf = u.flat()
    lap = L @ uf
    px, py, pxy = DX @ uf, DY @ uf, DXY @ uf
    quad = 0.5 * float(w @ lap ** 2)
    cubic = float(w @ (px * py * pxy))
    linear = lam * float(w @ (f.flat() * uf))
    return lap, px, py, pxy, w, quad, cubic, linear


def energy(u: Field, f: Field, lam: float) -> EnergyBreakdown:
    *_, quad, cubic, linear = _terms(u, f, lam)
    return EnergyBreakdown(quad, cubic, linear)


def _zero_ring(grid: Grid2D, flat: np.ndarray) -> Field:
    arr = flat.reshape(grid.shape).copy()
    arr[0, :] = arr[-1, :] = 0.0
    arr[:, 0] = arr[:, -1] = 0.0
    return Field(grid, arr)


def energy_gradient(u: Field, f: Field, lam: float) -> Field:
    """Exact gradient of the discrete J w.r.t. interior nodal values."""
    lap, px, py, pxy, w, *_ = _terms(u, f, lam)
    LT, DXT, DYT, DXYT = _adjoints(u.grid)
    g = (LT @ (w * lap)
         - DXT @ (w * py * pxy) - DYT @ (w * px * pxy) - DXYT @ (w * px * py)
         - lam * (w * f.flat()))
    return _zero_ring(u.grid, g)


def lap_l2(u: Field) -> float:
    """|lap_h u|_2 with the clamped (even-ghost) Laplacian."""
    L, *_ = _mats(u.grid)
    w = u.grid.trapezoid_weights().ravel()
    return float(np.sqrt(w @ (L @ u.flat()) ** 2))


def _interior_index(grid: Grid2D) -> np.ndarray:
    return np.arange(grid.n_nodes).reshape(grid.shape)[1:-1, 1:-1].ravel()


def energy_hessian(u: Field, f: Field, lam: float):
    """Sparse Hessian of J over interior nodes (symmetric; indefinite at saddles).

    Second derivative of the same discrete composition the gradient
    transposes: the quadratic block L^T W L minus the product-rule terms
    of the cubic integrand.
    """
    import scipy.sparse as sp

    L, DX, DY, DXY = _mats(u.grid)
    w = u.grid.trapezoid_weights().ravel()
    uf = u.flat()
    px, py, pxy = DX @ uf, DY @ uf, DXY @ uf
    W = sp.diags(w)
    quad = L.T @ W @ L
    cub = (DX.T @ sp.diags(w * pxy) @ DY + DY.T @ sp.diags(w * pxy) @ DX
           + DX.T @ sp.diags(w * py) @ DXY + DXY.T @ sp.diags(w * py) @ DX
           + DY.T @ sp.diags(w * px) @ DXY + DXY.T @ sp.diags(w * px) @ DY)
    h = (quad - cub).tocsr()
    idx = _interior_index(u.grid)
    return h[np.ix_(idx, idx)].tocsc()


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationParams:
    """Cubic Hermite cutoff: 1 below r0, 0 above r1, C^1 ramp in between."""

    r0: float
    r1: float

    def __post_init__(self):
        if not (0 < self.r0 < self.r1):
            raise ValueError("need 0 < r0 < r1")

    def tau(self, s: float) -> float:
        if s <= self.r0:
            return 1.0
        if s >= self.r1:
            return 0.0
        t = (s - self.r0) / (self.r1 - self.r0)
        return 1.0 - t * t * (3.0 - 2.0 * t)

    def dtau(self, s: float) -> float:
        if s <= self.r0 or s >= self.r1:
            return 0.0
        t = (s - self.r0) / (self.r1 - self.r0)
        return -6.0 * t * (1.0 - t) / (self.r1 - self.r0)


def truncated_energy(u: Field, f: Field, lam: float, tp: TruncationParams) -> float:
    *_, quad, cubic, linear = _terms(u, f, lam)
    s = math.sqrt(2.0 * quad)
    return quad - cubic * tp.tau(s) - linear


def truncated_energy_gradient(u: Field, f: Field, lam: float, tp: TruncationParams) -> Field:
    lap, px, py, pxy, w, quad, cubic, _ = _terms(u, f, lam)
    LT, DXT, DYT, DXYT = _adjoints(u.grid)
    s = math.sqrt(2.0 * quad)
    grad_quad = LT @ (w * lap)
    grad_cubic = DXT @ (w * py * pxy) + DYT @ (w * px * pxy) + DXYT @ (w * px * py)
    g = grad_quad - tp.tau(s) * grad_cubic - lam * (w * f.flat())
    if s > 0.0 and tp.dtau(s) != 0.0:
        g = g - cubic * tp.dtau(s) * (grad_quad / s)
    return _zero_ring(u.grid, g)


# ---------------------------------------------------------------------------
# Radial minorant and mountain-pass geometry
# ---------------------------------------------------------------------------

def radial_minorant(s: float, c1: float, c2: float, lam: float, f_l1: float) -> float:
    """g(s) = s^2/2 - c1 s^3 - lam c2 |f|_1 s, the lower bound along norm spheres."""
    return 0.5 * s * s - c1 * s ** 3 - lam * c2 * f_l1 * s


def minorant_lambda0(c1: float, c2: float, f_l1: float) -> float:
    """Largest lam for which g keeps a positive bump (double-zero discriminant)."""
    if c1 <= 0 or c2 <= 0:
        raise ValueError("constants must be positive")
    if f_l1 == 0.0:
        return math.inf
    return 1.0 / (16.0 * c1 * c2 * f_l1)


@dataclass(frozen=True)
class GeometrySetup:
    """Everything the descent and minimax stages need about g."""

    c1: float
    c2: float
    f_l1: float
    lam: float
    lambda0: float
    r0: float      # lower positive zero of g
    r_max: float   # argmax of g
    r1: float      # cutoff upper radius, in (r0, r_max)
    tp: TruncationParams

    def g(self, s: float) -> float:
        return radial_minorant(s, self.c1, self.c2, self.lam, self.f_l1)


def setup_geometry(f: Field, lam: float, c1: float | None = None,
                   c2: float | None = None, *, seed: int = 0,
                   safety: float = 1.2) -> GeometrySetup:
    """Fit constants if needed and derive the cutoff radii from g.

    Raises ValueError when lam is at or beyond the bump threshold
    lambda0, i.e. when g has no positive local maximum.
    """
    if c1 is None or c2 is None:
        c1f, c2f = fit_embedding_constants(f.grid, seed=seed, safety=safety)
        c1 = c1 if c1 is not None else c1f
        c2 = c2 if c2 is not None else c2f
    f_l1 = integrate(Field(f.grid, np.abs(f.values)))
    lambda0 = minorant_lambda0(c1, c2, f_l1)
    if not lam < lambda0:
        raise ValueError(f"lambda={lam} >= lambda0={lambda0}: minorant has no positive bump")
    ratio = lam / lambda0  # 0.0 when lambda0 is inf
    r0 = (1.0 - math.sqrt(1.0 - ratio)) / (4.0 * c1)
    r_max = (1.0 + math.sqrt(1.0 - 0.75 * ratio)) / (6.0 * c1)
    if r0 <= 0.0:  # lam == 0 degenerates; keep a usable cutoff below the bump
        r0 = 0.25 * r_max
    r1 = 0.5 * (r0 + r_max)
    return GeometrySetup(c1, c2, f_l1, lam, lambda0, r0, r_max, r1,
                         TruncationParams(r0, r1))


# ---------------------------------------------------------------------------
# Probe fields and constant fitting
# ---------------------------------------------------------------------------

def bump_psi(grid: Grid2D, center: tuple[float, float] | None = None,
             radius: float | None = None) -> Field:
    """[(1 - |x|^2)+]^4 profile scaled into the rectangle.

    Default placement: centered, radius a quarter of the shorter side,
    so the doubled ball still fits inside the domain.  C^2 and clamped
    (vanishes with its gradient where its support ends).
    """
    cx = 0.5 * (grid.x0 + grid.x1) if center is None else center[0]
    cy = 0.5 * (grid.y0 + grid.y1) if center is None else center[1]
    if radius is None:
        radius = 0.25 * min(grid.x1 - grid.x0, grid.y1 - grid.y0)
    X, Y = grid.meshgrid()
    rho2 = ((X - cx) ** 2 + (Y - cy) ** 2) / radius ** 2
    return Field(grid, np.maximum(1.0 - rho2, 0.0) ** 4)


def _quartic_mask(grid: Grid2D) -> np.ndarray:
    X, Y = grid.meshgrid()
    xi = (X - grid.x0) / (grid.x1 - grid.x0)
    eta = (Y - grid.y0) / (grid.y1 - grid.y0)
    mask = (xi * (1.0 - xi) * eta * (1.0 - eta)) ** 2
    return mask / mask.max()


def mollified_direction(f: Field) -> Field:
    """phi_f: f smoothed by a C^2 bump of radius 4h, then boundary-flattened.

    The flattening multiplies by the normalized quartic mask
    (x(1-x)y(1-y))^2 so the result is a clamped admissible field with
    int f*phi_f > 0 for nontrivial f >= 0.
    """
    grid = f.grid
    rx = 4.0 * grid.hx
    ry = 4.0 * grid.hy
    mx = int(rx / grid.hx)
    my = int(ry / grid.hy)
    ox, oy = np.meshgrid(np.arange(-mx, mx + 1), np.arange(-my, my + 1))
    d2 = (ox * grid.hx / rx) ** 2 + (oy * grid.hy / ry) ** 2
    kernel = np.maximum(1.0 - d2, 0.0) ** 3
    kernel /= kernel.sum()
    smoothed = ndimage.convolve(f.values, kernel, mode="nearest")
    return Field(grid, smoothed * _quartic_mask(grid))


def _probe_family(grid: Grid2D, seed: int, n_random: int) -> list[Field]:
    probes: list[Field] = []
    lx = grid.x1 - grid.x0
    ly = grid.y1 - grid.y0
    cx = 0.5 * (grid.x0 + grid.x1)
    cy = 0.5 * (grid.y0 + grid.y1)
    short = min(lx, ly)
    for r in (0.25 * short, 0.16 * short, 0.36 * short):
        probes.append(bump_psi(grid, (cx, cy), r))
    probes.append(bump_psi(grid, (cx + 0.15 * lx, cy - 0.1 * ly), 0.2 * short))
    mask = _quartic_mask(grid)
    X, Y = grid.meshgrid()
    xi = (X - grid.x0) / lx
    eta = (Y - grid.y0) / ly
    for k, m in ((1, 1), (1, 2), (2, 1), (2, 2), (3, 1)):
        probes.append(Field(grid, mask * np.sin(k * np.pi * xi) * np.sin(m * np.pi * eta)))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        noise = rng.standard_normal(grid.shape)
        smooth = ndimage.gaussian_filter(noise, sigma=max(2.0, grid.nx / 16.0))
        probes.append(Field(grid, mask * smooth))
    return probes


def fit_embedding_constants(grid: Grid2D, *, seed: int = 0, n_random: int = 12,
                            safety: float = 1.2) -> tuple[float, float]:
    """Empirical (c1, c2) with |cubic(u)| <= c1 |lap u|^3, |u|_inf <= c2 |lap u|_2.

    Maxima of the two ratios over a deterministic probe family
    (canonical bumps, masked sine modes, seeded smoothed noise),
    inflated by a safety factor.  Both ratios are scale invariant, so
    no normalization of the probes is needed.
    """
    zero = Field.zeros(grid)
    c1 = 0.0
    c2 = 0.0
    for u in _probe_family(grid, seed, n_random):
        parts = energy(u, zero, 0.0)
        s = math.sqrt(2.0 * parts.quad)
        if s == 0.0:
            continue
        c1 = max(c1, abs(parts.cubic) / s ** 3)
        c2 = max(c2, norm_linf(u) / s)
    return safety * c1, safety * c2
