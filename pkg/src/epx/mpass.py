"""Two solutions by descent and minimax, plus a flow-based stability tag.

Workflow for small lambda:

1. ``find_local_min`` descends the truncated energy from a small
   multiple of the mollified forcing direction and lands on the
   negative-energy local minimizer u0 (a genuine critical point of the
   full energy once its norm sits below the cutoff radius).
2. ``find_mountain_pass`` joins u0 to a far low-energy endpoint by a
   discretized path and repeatedly pushes the path's highest point
   along the (path-transverse part of the) preconditioned gradient.
   The path maximum decreases monotonically and settles on the
   saddle-type solution u*.
3. ``classify_stability`` perturbs a critical point and lets the
   parabolic flow decide: minimizers pull the flow back, saddles shed
   it.

Descent directions are gradients in the clamped-plate inner product
(u, v) -> (lap u, lap v), realized by one cached sparse solve; plain
L2 steepest descent would stall on the fourth-order stiffness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .energy import (GeometrySetup, bump_psi, energy, energy_gradient, lap_l2,
                     mollified_direction, setup_geometry, truncated_energy,
                     truncated_energy_gradient)
from .evolution import FlowConfig, flow_step
from .grid import BoundaryKind, Field, integrate, norm_l2
from .linsolve import _lu as _linsolve_lu
from .linsolve import biharmonic_dirichlet_matrix
from .report import ConvergenceReport, Outcome

__all__ = [
    "PathState",
    "StabilityTag",
    "classify_stability",
    "find_local_min",
    "find_mountain_pass",
    "scaled_residual",
]

MIN_PATH_POINTS = 17


class StabilityTag(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    UNKNOWN = "unknown"


class DescentStagnation(RuntimeError):
    """Line search could not make progress."""


class PathCollapse(RuntimeError):
    """The path maximum migrated to an endpoint (geometry violation)."""


# ---------------------------------------------------------------------------
# Preconditioning in the clamped-plate metric
# ---------------------------------------------------------------------------

def _precondition(u_grid, grad: Field) -> Field:
    """K^{-1} grad where K = hx*hy * (13-point clamped bilaplacian).

    K is exactly the Gram matrix of the quadratic energy term on
    interior nodes, so this is the Riesz map of the working space.
    """
    lu = _linsolve_lu(u_grid, "dirichlet")
    g_int = grad.values[1:-1, 1:-1].ravel()
    d = lu.solve(g_int) / (u_grid.hx * u_grid.hy)
    out = np.zeros(u_grid.shape)
    out[1:-1, 1:-1] = d.reshape(u_grid.ny - 2, u_grid.nx - 2)
    return Field(u_grid, out)


def _k_inner(grid, a: Field, b: Field) -> float:
    mat = biharmonic_dirichlet_matrix(grid)
    return grid.hx * grid.hy * float(
        a.values[1:-1, 1:-1].ravel() @ (mat @ b.values[1:-1, 1:-1].ravel()))


def scaled_residual(u: Field, f: Field, lam: float, grad: Field | None = None) -> float:
    """PDE residual of the discrete critical-point equation, scaled by the forcing.

    The gradient divided by the quadrature weight is the nodal residual
    of lap^2_h u = det-variation + lambda f; its L2 norm over
    max(1, |lambda f|_2) is the convergence measure used throughout.
    """
    if grad is None:
        grad = energy_gradient(u, f, lam)
    w = u.grid.trapezoid_weights()
    res = Field(u.grid, grad.values / w)
    return norm_l2(res) / max(1.0, abs(lam) * norm_l2(f))


# ---------------------------------------------------------------------------
# Step 1: the negative-energy local minimizer
# ---------------------------------------------------------------------------

def find_local_min(f: Field, lam: float, geometry: GeometrySetup | None = None,
                   *, gtol: float = 1e-8, max_iter: int = 500,
                   check_truncation: bool = True) -> tuple[Field, float]:
    """Descend the truncated energy to the local minimizer u0, J(u0) < 0.

    For f identically zero the minimizer degenerates to u0 = 0 with
    J = 0 (returned as such).  Raises ValueError when lambda is too
    large for the minorant to have a positive bump, DescentStagnation
    when the line search dies.
    """
    if norm_l2(f) == 0.0:
        return Field.zeros(f.grid), 0.0
    geom = geometry if geometry is not None else setup_geometry(f, lam)
    tp = geom.tp

    phi = mollified_direction(f)
    if integrate(Field(f.grid, f.values * phi.values)) <= 0.0:
        raise ValueError("mollified direction fails int(f*phi) > 0")
    phi = Field(f.grid, phi.values / lap_l2(phi))

    t = 0.5 * geom.r0
    u = Field(f.grid, t * phi.values)
    fu = truncated_energy(u, f, lam, tp)
    while fu >= 0.0 and t > 1e-12 * geom.r0:
        t *= 0.5
        u = Field(f.grid, t * phi.values)
        fu = truncated_energy(u, f, lam, tp)
    if fu >= 0.0:
        raise DescentStagnation("could not find a negative-energy start along phi_f")

    for _ in range(max_iter):
        g = truncated_energy_gradient(u, f, lam, tp)
        if scaled_residual(u, f, lam, g) <= gtol:
            break
        d = _precondition(f.grid, g)
        slope = -float(g.flat() @ d.flat())  # = -<g, K^{-1} g> < 0
        alpha, accepted = 1.0, False
        while alpha > 1e-14:
            trial = Field(f.grid, u.values - alpha * d.values)
            ft = truncated_energy(trial, f, lam, tp)
            if ft <= fu + 1e-4 * alpha * slope:
                u, fu, accepted = trial, ft, True
                break
            alpha *= 0.5
        if not accepted:
            raise DescentStagnation("line search stalled in find_local_min")
        if check_truncation and fu < 0.0 and lap_l2(u) >= geom.r0:
            raise RuntimeError("truncation violated: F(u) < 0 but |lap u| >= r0; "
                               "embedding constants underestimate the cubic term")
    total = energy(u, f, lam).total
    if total >= 0.0:
        raise DescentStagnation(f"descent ended with J(u0) = {total} >= 0")
    return u, total


# ---------------------------------------------------------------------------
# Step 2: the mountain-pass point
# ---------------------------------------------------------------------------

@dataclass
class PathState:
    """Discretized path from u0 to the far endpoint."""

    points: list[Field]
    energies: np.ndarray

    def __post_init__(self):
        if len(self.points) < MIN_PATH_POINTS:
            raise ValueError(f"need at least {MIN_PATH_POINTS} path points")
        if len(self.points) != len(self.energies):
            raise ValueError("points/energies length mismatch")

    @property
    def max_index(self) -> int:
        return int(np.argmax(self.energies))


def _path_energies(points: list[Field], f: Field, lam: float) -> np.ndarray:
    return np.array([energy(p, f, lam).total for p in points])


def _reparametrize(points: list[Field]) -> list[Field]:
    """Resample the polyline at uniform arc length in the lap-L2 metric."""
    n = len(points)
    seglen = np.array([lap_l2(Field(points[0].grid, b.values - a.values))
                       for a, b in zip(points[:-1], points[1:])])
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    if cum[-1] == 0.0:
        return points
    targets = np.linspace(0.0, cum[-1], n)
    out = [points[0]]
    for s in targets[1:-1]:
        k = int(np.searchsorted(cum, s, side="right") - 1)
        k = min(k, n - 2)
        frac = (s - cum[k]) / seglen[k] if seglen[k] > 0 else 0.0
        vals = (1.0 - frac) * points[k].values + frac * points[k + 1].values
        out.append(Field(points[0].grid, vals))
    out.append(points[-1])
    return out


def _far_endpoint(f: Field, lam: float, geom: GeometrySetup, j_anchor: float) -> Field:
    psi = bump_psi(f.grid)
    parts0 = energy(psi, f, 0.0)
    if parts0.cubic <= 0.0:
        raise RuntimeError("canonical bump lost cubic positivity; cannot build far endpoint")
    psi = Field(f.grid, psi.values / lap_l2(psi))
    s = 2.0 * geom.r_max
    for _ in range(60):
        v = Field(f.grid, s * psi.values)
        if energy(v, f, lam).total < min(j_anchor, 0.0):
            return v
        s *= 2.0
    raise RuntimeError("could not find a far endpoint with energy below J(u0)")


def _push_point(grid, path: PathState, i: int, f: Field, lam: float,
                alpha0: float) -> tuple[bool, float]:
    """One line-searched descent step on path point i, tangent part removed.

    Returns (moved, alpha_used); the point's energy never increases, so
    the path maximum is monotone under sweeps of such pushes.
    """
    ui = path.points[i]
    g = energy_gradient(ui, f, lam)
    d = _precondition(grid, g)
    tangent = Field(grid, path.points[i + 1].values - path.points[i - 1].values)
    tt = _k_inner(grid, tangent, tangent)
    if tt > 0.0:
        coef = float(g.flat() @ tangent.flat()) / tt  # <K^{-1}g, t>_K = <g, t>
        d_push = Field(grid, d.values - coef * tangent.values)
    else:
        d_push = d
    slope = -float(g.flat() @ d_push.flat())
    if slope >= 0.0:
        d_push, slope = d, -float(g.flat() @ d.flat())
    seg = 0.5 * (lap_l2(tangent) + 1e-30)
    alpha = min(alpha0, seg / max(lap_l2(d_push), 1e-30))
    ji = path.energies[i]
    while alpha > 1e-14:
        trial = Field(grid, ui.values - alpha * d_push.values)
        jt = energy(trial, f, lam).total
        if jt <= ji + 1e-4 * alpha * slope:
            path.points[i] = trial
            path.energies[i] = jt
            return True, alpha
        alpha *= 0.5
    return False, 0.0


def _newton_polish(u: Field, f: Field, lam: float, gtol: float,
                   max_newton: int = 40) -> tuple[Field, float, bool]:
    """Damped Newton on grad J = 0, accepting steps that shrink the residual.

    The deformation stage parks the path maximum near the saddle; this
    drives the critical-point residual the rest of the way down.
    """
    from .energy import energy_hessian
    from scipy.sparse.linalg import splu

    grid = u.grid
    res = scaled_residual(u, f, lam)
    for _ in range(max_newton):
        if res <= gtol:
            return u, res, True
        g = energy_gradient(u, f, lam)
        hess = energy_hessian(u, f, lam)
        try:
            delta_int = splu(hess).solve(-g.values[1:-1, 1:-1].ravel())
        except RuntimeError:
            return u, res, False
        step = np.zeros(grid.shape)
        step[1:-1, 1:-1] = delta_int.reshape(grid.ny - 2, grid.nx - 2)
        alpha, improved = 1.0, False
        while alpha > 1e-10:
            trial = Field(grid, u.values + alpha * step)
            r_trial = scaled_residual(trial, f, lam)
            if r_trial <= (1.0 - 1e-4 * alpha) * res:
                u, res, improved = trial, r_trial, True
                break
            alpha *= 0.5
        if not improved:
            return u, res, False
    return u, res, res <= gtol


def find_mountain_pass(f: Field, lam: float, u0: Field,
                       geometry: GeometrySetup | None = None, *,
                       n_points: int = 33, gtol: float = 1e-6,
                       max_sweeps: int = 600, plateau_window: int = 30,
                       path_csv=None) -> tuple[Field, float, ConvergenceReport]:
    """Path-deformation minimax for the saddle u* with J(u*) > 0.

    Each sweep pushes every interior path point one line-searched step
    along its preconditioned gradient with the path-tangent component
    removed, then resamples at uniform arc length (skipped whenever
    resampling would raise the maximum).  Sweeping stops when the
    maximum's energy plateaus; a damped Newton iteration on the
    critical-point equation then drives the scaled residual below gtol.
    The report's residual history is the scaled gradient norm at the
    path maximum per sweep, with the Newton tail appended.
    """
    geom = geometry if geometry is not None else setup_geometry(f, lam)
    grid = f.grid
    j0 = energy(u0, f, lam).total
    v_far = _far_endpoint(f, lam, geom, j0)

    ts = np.linspace(0.0, 1.0, n_points)
    points = [Field(grid, (1.0 - t) * u0.values + t * v_far.values) for t in ts]
    path = PathState(points, _path_energies(points, f, lam))
    report = ConvergenceReport()
    log = open(path_csv, "w") if path_csv is not None else None
    if log is not None:
        log.write("sweep,point,energy\n")
    seg_scale = lap_l2(Field(grid, v_far.values - u0.values)) / (n_points - 1)
    max_history: list[float] = []

    def accept(u_star: Field, res: float, hover: Field) -> tuple[Field, float] | None:
        j_star = energy(u_star, f, lam).total
        gap = lap_l2(Field(grid, u_star.values - hover.values))
        if res <= gtol and j_star > 0.0 and gap <= 4.0 * seg_scale:
            return u_star, j_star
        return None

    try:
        for sweep in range(max_sweeps):
            m = path.max_index
            if m in (0, n_points - 1):
                raise PathCollapse(f"path maximum sits on endpoint {m}")
            res = scaled_residual(path.points[m], f, lam)
            report.record(res)
            if log is not None and sweep % 10 == 0:
                for i, e in enumerate(path.energies):
                    log.write(f"{sweep},{i},{e:.17g}\n")
            if res <= gtol:
                report.outcome = Outcome.CONVERGED
                return path.points[m], float(path.energies[m]), report
            max_history.append(float(path.energies[m]))
            plateaued = (len(max_history) > plateau_window
                         and max_history[-plateau_window] - max_history[-1]
                         <= 1e-9 * (1.0 + abs(max_history[-1])))
            if plateaued:
                break

            # push the current maximum downhill until a neighbor takes over
            stalled = False
            for _ in range(8):
                moved, _ = _push_point(grid, path, m, f, lam, 1.0)
                if not moved:
                    stalled = True
                    break
                new_m = path.max_index
                if new_m != m:
                    break
            if stalled and sweep > 0:
                break  # line search exhausted; polish from here

            if sweep % 25 == 24:
                resampled = _reparametrize(path.points)
                new_e = _path_energies(resampled, f, lam)
                if new_e.max() <= path.energies.max() + 1e-12 * (1.0 + abs(path.energies.max())):
                    path = PathState(resampled, new_e)

            if sweep % 40 == 39:  # cheap probe: is the hover already in Newton's basin?
                hover = path.points[path.max_index]
                u_star, res_star, ok = _newton_polish(hover, f, lam, gtol, max_newton=12)
                if ok:
                    hit = accept(u_star, res_star, hover)
                    if hit is not None:
                        report.record(res_star)
                        report.outcome = Outcome.CONVERGED
                        return hit[0], hit[1], report

        m = path.max_index
        if m in (0, n_points - 1):
            raise PathCollapse(f"path maximum sits on endpoint {m}")
        hover = path.points[m]
        u_star, res, ok = _newton_polish(hover, f, lam, gtol)
        j_star = energy(u_star, f, lam).total
        report.record(res)
        hit = accept(u_star, res, hover) if ok else None
        report.outcome = Outcome.CONVERGED if hit is not None else Outcome.MAX_ITER
        if hit is not None:
            return hit[0], hit[1], report
        return u_star, j_star, report
    finally:
        if log is not None:
            log.close()


# ---------------------------------------------------------------------------
# Step 3: stability via the parabolic flow
# ---------------------------------------------------------------------------

def classify_stability(u: Field, f: Field, lam: float, *,
                       bc: BoundaryKind = BoundaryKind.DIRICHLET,
                       eps_scale: float = 1e-3, horizon: int = 1000,
                       dt: float = 1e-3) -> StabilityTag:
    """Perturb u, run the k1=1/2, k2=1 flow, watch the distance to u.

    Stable: the flow ends within 10*eps of u.  Unstable: it ends far
    away and near its running maximum distance (departed and stayed
    out, including blowup).  Anything else: Unknown.
    """
    base = lap_l2(u)
    eps = eps_scale * (base if base > 0.0 else 1.0)
    bump = bump_psi(u.grid)
    bump = Field(u.grid, bump.values / lap_l2(bump))
    cfg = FlowConfig(k1=0.5, k2=1.0, dt=dt, steps=horizon, bc=bc)

    state = Field(u.grid, u.values + eps * bump.values)
    dists = []
    for _ in range(horizon):
        try:
            state = flow_step(state, f, lam, cfg)
        except (ValueError, FloatingPointError, OverflowError):
            return StabilityTag.UNSTABLE  # left the basin explosively
        d = lap_l2(Field(u.grid, state.values - u.values))
        if not math.isfinite(d) or d > 1e8:
            return StabilityTag.UNSTABLE
        dists.append(d)
    final = dists[-1]
    if final <= 10.0 * eps:
        return StabilityTag.STABLE
    if final >= 0.9 * max(dists) and final > 10.0 * eps:
        return StabilityTag.UNSTABLE
    return StabilityTag.UNKNOWN
