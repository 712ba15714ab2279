"""Radial shooting solver on the unit disk.

For radial u the model collapses to an ODE initial value problem.  With
p = u' and q = lap(u) = p' + p/r, the determinant is u'u''/r =
((u')^2)'/(2r), and integrating r*lap^2(u) = (r q')' once from the
origin (where smoothness forces p -> 0 and r q' -> 0) gives the reduced
third-order system

    u' = p,   p' = q - p/r,   q' = (p^2/2 + lam*F(r)) / r,

with F(r) = int_0^r s f(s) ds carried along as a fourth state variable
F' = r f(r).  Near the origin the series

    p = beta r + (beta^2 + lam f0)/16 r^3 + lam f1/45 r^4 + ...
    q = 2 beta + (beta^2 + lam f0)/4  r^2 + lam f1/9  r^3 + ...

(f0, f1 the value and slope of f at 0) starts the state at r = 1e-6,
where beta = u''(0) is the shooting parameter.  The stretch up to
r = 0.01 is integrated on a fixed geometric mesh, keeping the step
proportional to r (the 1/r terms would otherwise degrade the order of
any fixed-step method near the origin); from there classical fixed-step
RK4 runs to r = 1, so every run is bit-reproducible.  The terminal
mismatch is u'(1) for clamped data and lap u(1) for hinged data, and u
itself is recovered by shifting the integrated profile so u(1) = 0.

The integrator core is numba-compiled when available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .grid import BoundaryKind

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is normally present
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn

__all__ = [
    "RadialShot",
    "find_radial_roots",
    "radial_threshold",
    "shoot",
    "solve_radial",
]

BLOWUP_LIMIT = 1e12
DEFAULT_STEPS = 10_000
EPS0 = 1e-6          # series start radius
R_UNIFORM = 0.01     # geometric stretch ends, uniform RK4 begins
N_GEOMETRIC = 256    # fixed geometric cell count on [EPS0, R_UNIFORM]
BETA_SCAN_DECADES = (-4.0, 3.0)  # per sign, 200 log probes each
BETA_SCAN_COUNT = 200

_GL_NODES = np.array([-0.8611363115940526, -0.3399810435848563,
                      0.3399810435848563, 0.8611363115940526])
_GL_WEIGHTS = np.array([0.3478548451374538, 0.6521451548625461,
                        0.6521451548625461, 0.3478548451374538])


@dataclass(frozen=True)
class RadialShot:
    """One integrated trajectory and its boundary mismatch."""

    beta: float
    lam: float
    bc: BoundaryKind
    r: np.ndarray
    u: np.ndarray
    p: np.ndarray   # u'
    q: np.ndarray   # lap u
    terminal_residual: float
    blowup: bool = False
    escape_radius: float | None = None

    def uniform_section(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(r, u, p, q) restricted to the equispaced part of the mesh."""
        k = min(N_GEOMETRIC, len(self.r) - 1)
        return self.r[k:], self.u[k:], self.p[k:], self.q[k:]

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("r,u,du,lap_u\n")
            for r, u, p, q in zip(self.r, self.u, self.p, self.q):
                fh.write(f"{r:.17g},{u:.17g},{p:.17g},{q:.17g}\n")


def _mesh(n_steps: int) -> np.ndarray:
    """Geometric stretch [EPS0, R_UNIFORM], then n_steps uniform cells to 1."""
    geo = EPS0 * (R_UNIFORM / EPS0) ** (np.arange(N_GEOMETRIC + 1) / N_GEOMETRIC)
    geo[-1] = R_UNIFORM
    uni = np.linspace(R_UNIFORM, 1.0, n_steps + 1)
    return np.concatenate([geo[:-1], uni])


def _eval_f(f_radial, s: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f_radial(s), dtype=np.float64)
        if vals.shape != s.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(f_radial(v)) for v in s])
    return vals


def _stage_values(f_radial, mesh: np.ndarray) -> np.ndarray:
    """f at every mesh node and cell midpoint (2*cells + 1 values)."""
    rs = np.empty(2 * len(mesh) - 1)
    rs[0::2] = mesh
    rs[1::2] = 0.5 * (mesh[:-1] + mesh[1:])
    vals = _eval_f(f_radial, rs)
    if not np.all(np.isfinite(vals)):
        raise ValueError("f_radial produced non-finite values on (0, 1]")
    return vals


def _start_data(f_radial) -> tuple[float, float, float]:
    """(F(EPS0), f(0), f'(0)): Gauss-Legendre for F, extrapolation for f."""
    s = 0.5 * EPS0 * (_GL_NODES + 1.0)
    vals = _eval_f(f_radial, s)
    f_start = float(0.5 * EPS0 * np.sum(_GL_WEIGHTS * s * vals))
    fa, fb = _eval_f(f_radial, np.array([0.5 * EPS0, EPS0]))
    f1 = float((fb - fa) / (0.5 * EPS0))
    f0 = float(2.0 * fa - fb)
    return f_start, f0, f1


@njit(cache=True)
def _integrate(betas, lam, mesh, fs, f_start, f0, f1, keep):  # pragma: no cover
    """RK4 over the mesh for every beta at once.

    With keep=True the full (u, p, q) trajectories are stored, otherwise
    only terminal values; arrays come back shaped (m, n_nodes) or (m, 1).
    """
    m = betas.shape[0]
    n_cells = mesh.shape[0] - 1
    width = n_cells + 1 if keep else 1
    u_out = np.zeros((m, width))
    p_out = np.zeros((m, width))
    q_out = np.zeros((m, width))
    blow = np.zeros(m, dtype=np.bool_)
    esc = np.full(m, np.nan)
    last = np.full(m, n_cells, dtype=np.int64)
    eps = mesh[0]
    for b in range(m):
        beta = betas[b]
        series = beta * beta + lam * f0
        u = 0.0
        p = beta * eps + series * eps ** 3 / 16.0 + lam * f1 * eps ** 4 / 45.0
        q = 2.0 * beta + series * eps ** 2 / 4.0 + lam * f1 * eps ** 3 / 9.0
        big_f = f_start
        if keep:
            u_out[b, 0] = u
            p_out[b, 0] = p
            q_out[b, 0] = q
        for k in range(n_cells):
            r = mesh[k]
            h = mesh[k + 1] - mesh[k]
            fa = fs[2 * k]
            fm = fs[2 * k + 1]
            fb = fs[2 * k + 2]
            du1 = p
            dp1 = q - p / r
            dq1 = (0.5 * p * p + lam * big_f) / r
            dF1 = r * fa
            rh = r + 0.5 * h
            p2 = p + 0.5 * h * dp1
            q2 = q + 0.5 * h * dq1
            F2 = big_f + 0.5 * h * dF1
            du2 = p2
            dp2 = q2 - p2 / rh
            dq2 = (0.5 * p2 * p2 + lam * F2) / rh
            dF2 = rh * fm
            p3 = p + 0.5 * h * dp2
            q3 = q + 0.5 * h * dq2
            F3 = big_f + 0.5 * h * dF2
            du3 = p3
            dp3 = q3 - p3 / rh
            dq3 = (0.5 * p3 * p3 + lam * F3) / rh
            dF3 = rh * fm
            r1 = r + h
            p4 = p + h * dp3
            q4 = q + h * dq3
            F4 = big_f + h * dF3
            du4 = p4
            dp4 = q4 - p4 / r1
            dq4 = (0.5 * p4 * p4 + lam * F4) / r1
            dF4 = r1 * fb
            u += h * (du1 + 2.0 * du2 + 2.0 * du3 + du4) / 6.0
            p += h * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4) / 6.0
            q += h * (dq1 + 2.0 * dq2 + 2.0 * dq3 + dq4) / 6.0
            big_f += h * (dF1 + 2.0 * dF2 + 2.0 * dF3 + dF4) / 6.0
            if keep:
                u_out[b, k + 1] = u
                p_out[b, k + 1] = p
                q_out[b, k + 1] = q
            if abs(p) > BLOWUP_LIMIT or abs(q) > BLOWUP_LIMIT or not (p == p and q == q):
                blow[b] = True
                esc[b] = r1
                last[b] = k + 1
                break
        if not keep:
            u_out[b, 0] = u
            p_out[b, 0] = p
            q_out[b, 0] = q
    return u_out, p_out, q_out, blow, esc, last


class _Problem:
    """Mesh, forcing samples and series data shared across shots."""

    def __init__(self, f_radial, n_steps: int):
        self.mesh = _mesh(n_steps)
        self.fs = _stage_values(f_radial, self.mesh)
        self.f_start, self.f0, self.f1 = _start_data(f_radial)

    def residuals(self, betas: np.ndarray, lam: float, bc: BoundaryKind):
        _, p, q, blow, _, _ = _integrate(
            np.asarray(betas, dtype=np.float64), float(lam), self.mesh,
            self.fs, self.f_start, self.f0, self.f1, False)
        res = p[:, 0] if bc == BoundaryKind.DIRICHLET else q[:, 0]
        return res, blow


def shoot(beta: float, lam: float, f_radial, bc: BoundaryKind, *,
          n_steps: int = DEFAULT_STEPS) -> RadialShot:
    """Integrate one trajectory for shooting parameter beta = u''(0)."""
    prob = _Problem(f_radial, n_steps)
    u, p, q, blow, esc, last = _integrate(
        np.array([float(beta)]), float(lam), prob.mesh, prob.fs,
        prob.f_start, prob.f0, prob.f1, True)
    k = int(last[0])
    rs = prob.mesh[:k + 1].copy()
    u, p, q = u[0, :k + 1], p[0, :k + 1], q[0, :k + 1]
    if blow[0]:
        residual = math.inf
    else:
        u = u - u[-1]  # pin u(1) = 0
        residual = float(p[-1] if bc == BoundaryKind.DIRICHLET else q[-1])
    return RadialShot(float(beta), float(lam), bc, rs, u, p, q, residual,
                      blowup=bool(blow[0]),
                      escape_radius=(float(esc[0]) if blow[0] else None))


def find_radial_roots(lam: float, f_radial, bc: BoundaryKind, *,
                      n_steps: int = DEFAULT_STEPS,
                      residual_tol: float = 1e-10) -> list[RadialShot]:
    """Bracket every terminal-residual sign change on the log beta scan.

    The scan covers +-[1e-4, 1e3] with 200 logarithmic probes per sign;
    each bracket is polished by Brent iteration down to |residual| <=
    residual_tol.
    """
    prob = _Problem(f_radial, n_steps)
    pos = np.logspace(BETA_SCAN_DECADES[0], BETA_SCAN_DECADES[1], BETA_SCAN_COUNT)
    betas = np.concatenate([-pos[::-1], pos])
    res, blow = prob.residuals(betas, lam, bc)

    def scalar_residual(beta: float) -> float:
        r, b = prob.residuals(np.array([beta]), lam, bc)
        return math.inf if b[0] else float(r[0])

    roots: list[RadialShot] = []
    for i in range(len(betas) - 1):
        if blow[i] or blow[i + 1]:
            continue
        if res[i] == 0.0:
            root = betas[i]
        elif res[i] * res[i + 1] < 0.0:
            root = brentq(scalar_residual, betas[i], betas[i + 1],
                          xtol=1e-14, rtol=8.9e-16)
        else:
            continue
        shot = shoot(root, lam, f_radial, bc, n_steps=n_steps)
        if abs(shot.terminal_residual) <= residual_tol:
            roots.append(shot)
    roots.sort(key=lambda s: s.beta)
    return roots


def solve_radial(lam: float, f_radial, bc: BoundaryKind, *,
                 n_steps: int = DEFAULT_STEPS) -> RadialShot:
    """Shooting solution with the smallest |beta| (the branch near the
    linear solution).  Raises when no sign change exists in the scan range."""
    if lam == 0.0:
        return shoot(0.0, 0.0, f_radial, bc, n_steps=n_steps)
    roots = find_radial_roots(lam, f_radial, bc, n_steps=n_steps)
    if not roots:
        raise ValueError(f"no shooting root found at lambda={lam}: candidate non-existence")
    return min(roots, key=lambda s: abs(s.beta))


def _root_spread(lam: float, f_radial, bc: BoundaryKind, n_steps: int):
    roots = find_radial_roots(lam, f_radial, bc, n_steps=n_steps)
    if not roots:
        return None
    bs = [s.beta for s in roots]
    return min(bs), max(bs)


def radial_threshold(f_radial, bc: BoundaryKind, *, lo: float = 1.0,
                     hi: float | None = None, rel_width: float = 1e-3,
                     n_steps: int = DEFAULT_STEPS,
                     trace_out: list | None = None) -> float:
    """Fold location: bisect between solvable and unsolvable lambda.

    Returns the midpoint of a bracket (lambda_ok, lambda_fail) with
    lambda_fail - lambda_ok <= rel_width * lambda_fail.  `trace_out`
    collects (lambda, beta_lo, beta_hi) rows for every solvable probe.
    Rejects (ValueError) when no failure can be bracketed, e.g. f == 0.
    """
    lam_ok, lam_fail = _bracket_threshold(f_radial, bc, lo, hi, rel_width,
                                          n_steps, trace_out)
    return 0.5 * (lam_ok + lam_fail)


def _bracket_threshold(f_radial, bc: BoundaryKind, lo: float, hi: float | None,
                       rel_width: float, n_steps: int,
                       trace_out: list | None) -> tuple[float, float]:
    def probe(lam: float):
        spread = _root_spread(lam, f_radial, bc, n_steps)
        if spread is not None and trace_out is not None:
            trace_out.append((lam, spread[0], spread[1]))
        return spread

    if probe(lo) is None:
        raise ValueError(f"precondition violated: no radial solution at lambda={lo}")
    if hi is None:
        hi = 2.0 * lo
        while probe(hi) is not None:
            lo, hi = hi, 2.0 * hi
            if hi > 1e9:
                raise ValueError("no solvability threshold found below lambda=1e9 "
                                 "(f may be identically zero)")
    elif probe(hi) is not None:
        raise ValueError(f"precondition violated: radial problem still solvable at lambda={hi}")
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if probe(mid) is not None:
            lo = mid
        else:
            hi = mid
    return lo, hi
