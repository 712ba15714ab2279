"""Fixed-point construction for lap^2(u) = det(D^2 u) + lambda*f.

The map T sends phi to the solution of the linear problem
lap^2(u) = det(D^2 phi) + lambda*f under the configured boundary
condition.  Iterating T from the linear solution contracts for small
lambda; this module runs that iteration, measures the empirical
Lipschitz ratio of T, and brackets the largest lambda for which the
iteration still converges.

The (lambda_ok, lambda_fail) bracket is a Picard-solvability threshold:
the iteration failing does not by itself prove non-existence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .grid import BoundaryKind, Field, axpy, norm_l2, sub
from .linsolve import solve_biharmonic
from .operators import ghost_policy_for, hessian_det, laplacian
from .report import ConvergenceReport, Outcome

__all__ = [
    "PicardConfig",
    "contraction_probe",
    "lambda_threshold",
    "picard_map",
    "solve_fixed_point",
]


@dataclass(frozen=True)
class PicardConfig:
    lam: float
    bc: BoundaryKind = BoundaryKind.NAVIER
    tol: float = 1e-10
    max_iter: int = 200
    blowup_cap: float = 1e6

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1 or self.blowup_cap <= self.tol:
            raise ValueError("need tol > 0, max_iter >= 1, blowup_cap > tol")


def lap_norm(u: Field, bc: BoundaryKind) -> float:
    """Working norm of the iteration: L2 norm of the discrete Laplacian."""
    return norm_l2(laplacian(u, ghost_policy_for(bc)))


def picard_map(phi: Field, cfg: PicardConfig, f: Field) -> Field:
    """One application of T: solve lap^2 u = det(D^2 phi) + lambda*f."""
    rhs = axpy(cfg.lam, f, hessian_det(phi))
    return solve_biharmonic(rhs, cfg.bc)


def pde_residual(u: Field, lam: float, f: Field, bc: BoundaryKind) -> Field:
    """lap^2_h(u) - det_h(D^2 u) - lambda*f with the bc-matched bilaplacian.

    Interior nodes only (zero ring); for Navier the bilaplacian is the
    hinged double Laplacian, which is the operator the solver inverts.
    """
    if bc == BoundaryKind.NAVIER:
        bil = laplacian(laplacian(u, "antireflect"), "antireflect")
    else:
        from .operators import bilaplacian_dirichlet

        bil = bilaplacian_dirichlet(u)
    out = bil.values - hessian_det(u).values - lam * f.values
    out[0, :] = out[-1, :] = 0.0
    out[:, 0] = out[:, -1] = 0.0
    return Field(u.grid, out)


def solve_fixed_point(cfg: PicardConfig, f: Field,
                      u0: Field | None = None) -> tuple[Field, ConvergenceReport]:
    """Iterate u_{k+1} = T(u_k) from the linear solution u_0.

    Returns the last iterate together with the report; only
    ``Outcome.CONVERGED`` carries a solution claim.  Divergence is a
    reported value, not an exception.
    """
    report = ConvergenceReport()
    u = u0 if u0 is not None else solve_biharmonic(
        Field(f.grid, cfg.lam * f.values), cfg.bc)
    for _ in range(cfg.max_iter):
        if lap_norm(u, cfg.bc) > cfg.blowup_cap:
            report.outcome = Outcome.BLOWUP
            return u, report
        try:
            u_next = picard_map(u, cfg, f)
        except (ValueError, FloatingPointError, OverflowError):
            report.outcome = Outcome.BLOWUP
            return u, report
        res = lap_norm(sub(u_next, u), cfg.bc)
        if not math.isfinite(res):
            report.outcome = Outcome.BLOWUP
            return u, report
        report.record(res)
        u = u_next
        if res <= cfg.tol:
            report.outcome = Outcome.CONVERGED
            return u, report
    report.outcome = Outcome.MAX_ITER
    return u, report


def contraction_probe(phi1: Field, phi2: Field, cfg: PicardConfig, f: Field) -> float:
    """Empirical Lipschitz ratio |T(phi1)-T(phi2)| / |phi1-phi2| in the lap norm."""
    denom = lap_norm(sub(phi1, phi2), cfg.bc)
    if denom == 0.0:
        raise ValueError("contraction probe needs phi1 != phi2")
    num = lap_norm(sub(picard_map(phi1, cfg, f), picard_map(phi2, cfg, f)), cfg.bc)
    return num / denom


def _converges(lam: float, f: Field, bc: BoundaryKind, tol: float, max_iter: int) -> bool:
    cfg = PicardConfig(lam=lam, bc=bc, tol=tol, max_iter=max_iter)
    _, rep = solve_fixed_point(cfg, f)
    return rep.outcome == Outcome.CONVERGED


def lambda_threshold(f: Field, bc: BoundaryKind, lo: float, hi: float,
                     *, rel_width: float = 1e-3, tol: float = 1e-10,
                     max_iter: int = 200) -> tuple[float, float]:
    """Bisect for the Picard-solvability edge between lo (works) and hi (fails).

    Returns (lambda_ok, lambda_fail) with lambda_fail - lambda_ok <=
    rel_width * lambda_fail.  Raises if the precondition (convergence at
    lo, failure at hi) does not hold.
    """
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    if not _converges(lo, f, bc, tol, max_iter):
        raise ValueError(f"precondition violated: Picard already fails at lambda={lo}")
    if _converges(hi, f, bc, tol, max_iter):
        raise ValueError(f"precondition violated: Picard still converges at lambda={hi}"
                         " (no threshold in the bracket; f may be too weak, e.g. f == 0)")
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if _converges(mid, f, bc, tol, max_iter):
            lo = mid
        else:
            hi = mid
    return lo, hi
