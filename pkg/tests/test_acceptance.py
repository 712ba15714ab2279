"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with `pytest -s tests/test_acceptance.py` to see the verdict lines.
Criteria with stated runtime budgets assert them.  The mountain-pass
configuration (criterion 8) is shared with the stability dichotomy
(criterion 10) through a module fixture.
"""

import time

import numpy as np
import pytest
import sympy

import epx
from epx import BoundaryKind, Field, Grid2D
from epx.energy import lap_l2, setup_geometry
from epx.mpass import StabilityTag, scaled_residual
from epx.picard import lap_norm
from epx.report import Outcome
from conftest import dyadic_orders

X_, Y_ = sympy.symbols("x y")
GRIDS = (33, 65, 129)


def _fmt(orders) -> str:
    return "(" + ", ".join(f"{float(v):.2f}" for v in np.atleast_1d(orders)) + ")"


def _verdict(num: int, ok: bool, detail: str) -> None:
    print(f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _lambdify(expr):
    return sympy.lambdify((X_, Y_), expr, "numpy")


def _bilap(expr):
    return (sympy.diff(expr, X_, 4) + 2 * sympy.diff(expr, X_, 2, Y_, 2)
            + sympy.diff(expr, Y_, 4))


def _det(expr):
    return (sympy.diff(expr, X_, 2) * sympy.diff(expr, Y_, 2)
            - sympy.diff(expr, X_, 1, Y_, 1) ** 2)


def test_criterion_1_operator_orders():
    t0 = time.perf_counter()
    trig = sympy.sin(sympy.pi * X_) * sympy.sin(sympy.pi * Y_)
    clamped = 16 * (X_ * (1 - X_) * Y_ * (1 - Y_)) ** 2
    exact = {
        "laplacian": _lambdify(sympy.diff(trig, X_, 2) + sympy.diff(trig, Y_, 2)),
        "bilaplacian_dirichlet": _lambdify(_bilap(clamped)),
        "bilaplacian_navier": _lambdify(_bilap(trig)),
        "hessian_det": _lambdify(_det(trig)),
        "hessian_det_divergence": _lambdify(_det(trig)),
    }
    fields = {"bilaplacian_dirichlet": _lambdify(clamped)}
    trig_np = _lambdify(trig)
    errs = {k: [] for k in exact}
    for n in GRIDS:
        g = Grid2D(n, n)
        X, Y = g.meshgrid()
        # fixed interior strip: the stencils' truncation order, clear of the
        # low-order ghost closure whose effect the solver tests cover
        strip = np.minimum(np.minimum(X, 1 - X), np.minimum(Y, 1 - Y)) >= 0.125 - 1e-12
        u_trig = Field(g, trig_np(X, Y))
        u_clamp = Field(g, fields["bilaplacian_dirichlet"](X, Y))
        got = {
            "laplacian": epx.laplacian(u_trig),
            "bilaplacian_dirichlet": epx.bilaplacian_dirichlet(u_clamp),
            "bilaplacian_navier": epx.bilaplacian_navier(u_trig),
            "hessian_det": epx.hessian_det(u_trig),
            "hessian_det_divergence": epx.hessian_det_divergence(u_trig),
        }
        for k in exact:
            errs[k].append(np.abs(np.where(strip, got[k].values - exact[k](X, Y), 0.0)).max())
    orders = {k: dyadic_orders(v) for k, v in errs.items()}
    elapsed = time.perf_counter() - t0
    ok = all((o >= 1.9).all() for o in orders.values()) and elapsed < 10.0
    detail = ("operator orders " + ", ".join(f"{k}={_fmt(v)}" for k, v in orders.items())
              + f"; runtime {elapsed:.1f}s < 10s")
    _verdict(1, ok, detail)


def test_criterion_2_determinant_form_equivalence():
    l1 = []
    for n in GRIDS:
        g = Grid2D(n, n, -1.5, 1.5, -1.5, 1.5)
        psi = Field.from_function(
            g, lambda X, Y: np.maximum(1.0 - (X ** 2 + Y ** 2), 0.0) ** 4)
        diff = epx.hessian_det(psi).values - epx.hessian_det_divergence(psi).values
        l1.append(epx.integrate(Field(g, np.abs(diff))))
    orders = dyadic_orders(l1)
    _verdict(2, bool((orders >= 1.0).all()),
             f"det vs Det in L1 on the bump: {[f'{v:.3e}' for v in l1]}, "
             f"orders {_fmt(orders)} >= 1")


def test_criterion_3_cubic_identity():
    from epx.operators import dx, dy, dxy

    gaps = []
    for n in GRIDS:
        g = Grid2D(n, n)
        X, Y = g.meshgrid()
        mask = (X * (1 - X) * Y * (1 - Y)) ** 2
        u = Field(g, mask * np.exp(X + 0.5 * Y) * (1 + 0.3 * np.sin(3 * X) * Y))
        lhs = epx.integrate(Field(g, u.values * epx.hessian_det(u).values))
        cubic = epx.integrate(Field(g, dx(u, "reflect_even").values
                                    * dy(u, "reflect_even").values
                                    * dxy(u, "reflect_even").values))
        gaps.append(abs(lhs - 3.0 * cubic))
    consts = [gap * (n - 1) ** 2 for gap, n in zip(gaps, GRIDS)]
    ok = (dyadic_orders(gaps) >= 1.9).all() and max(consts) <= 1.1 * min(consts)
    _verdict(3, bool(ok),
             f"|int u det - 3 int ux uxy uy| = C h^2 with C in "
             f"[{min(consts):.3e}, {max(consts):.3e}] (stable)")


def test_criterion_4_rotated_gradient_identity():
    from epx.operators import dx, dy

    gaps = []
    for n in GRIDS:
        g = Grid2D(n, n)
        X, Y = g.meshgrid()
        v1 = Field(g, X ** 2 * Y + X)
        v2 = Field(g, X * Y ** 2 - Y + 0.5 * X ** 2)
        v3 = Field(g, X * (1 - X) * Y * (1 - Y))
        det12 = dx(v1).values * dy(v2).values - dy(v1).values * dx(v2).values
        lhs = epx.integrate(Field(g, det12 * v3.values))
        gy, mgx = epx.grad_perp(v3)
        rhs = epx.integrate(Field(g, v1.values * (dx(v2).values * gy.values
                                                  + dy(v2).values * mgx.values)))
        gaps.append(abs(lhs - rhs))
    consts = [gap * (n - 1) ** 2 for gap, n in zip(gaps, GRIDS)]
    ok = (dyadic_orders(gaps) >= 1.9).all() and max(consts) <= 1.1 * min(consts)
    _verdict(4, bool(ok),
             f"pairing identity gap = C h^2 with C in "
             f"[{min(consts):.3e}, {max(consts):.3e}] (stable)")


def test_criterion_5_gradient_exactness():
    from conftest import clamped_random

    t0 = time.perf_counter()
    g = Grid2D(21, 25, 0.0, 1.0, 0.0, 1.2)
    f = Field.full(g, 1.0)
    rng = np.random.default_rng(0)
    eps, lam = 1e-5, 0.7
    failures = 0
    for _ in range(20):
        u = clamped_random(g, rng, amplitude=5.0)
        w = clamped_random(g, rng, amplitude=5.0)
        up = Field(g, u.values + eps * w.values)
        um = Field(g, u.values - eps * w.values)
        fd = (epx.energy(up, f, lam).total - epx.energy(um, f, lam).total) / (2 * eps)
        an = float(epx.energy_gradient(u, f, lam).flat() @ w.flat())
        if abs(fd - an) > 1e-6 * max(1.0, abs(an)):
            failures += 1
    elapsed = time.perf_counter() - t0
    _verdict(5, failures == 0 and elapsed < 5.0,
             f"gradient matches central differences on 20 pairs "
             f"(failures={failures}); runtime {elapsed:.1f}s < 5s")


def test_criterion_6_manufactured_picard_recovery():
    t0 = time.perf_counter()
    cases = {
        BoundaryKind.NAVIER: sympy.sin(sympy.pi * X_) * sympy.sin(sympy.pi * Y_),
        BoundaryKind.DIRICHLET: 16 * (X_ * (1 - X_) * Y_ * (1 - Y_)) ** 2,
    }
    all_orders = {}
    for bc, expr in cases.items():
        f_u = _lambdify(expr)
        f_rhs = _lambdify(_bilap(expr) - _det(expr))
        errs = []
        for n in GRIDS:
            g = Grid2D(n, n)
            X, Y = g.meshgrid()
            u, rep = epx.solve_fixed_point(epx.PicardConfig(lam=1.0, bc=bc),
                                           Field(g, f_rhs(X, Y)))
            assert rep.outcome == Outcome.CONVERGED
            errs.append(np.abs(u.values - f_u(X, Y)).max())
        all_orders[bc.value] = dyadic_orders(errs)
    elapsed = time.perf_counter() - t0
    ok = all((o >= 1.9).all() for o in all_orders.values()) and elapsed < 60.0
    _verdict(6, ok, "picard manufactured recovery orders "
             + ", ".join(f"{k}={_fmt(v)}" for k, v in all_orders.items())
             + f"; runtime {elapsed:.1f}s < 60s")


def test_criterion_7_contraction_and_ball_uniqueness():
    g = Grid2D(33, 33)
    f = Field.full(g, 1.0)
    cfg = epx.PicardConfig(lam=1.0, bc=BoundaryKind.NAVIER)
    u_a, rep = epx.solve_fixed_point(cfg, f)
    ratios_ok = rep.outcome == Outcome.CONVERGED and all(
        r < 1.0 for r in rep.ratio_history[1:])
    from epx.energy import bump_psi

    v = epx.solve_biharmonic(f, BoundaryKind.NAVIER)
    bump = bump_psi(g)
    start = Field(g, v.values + 1e-3 * bump.values / lap_l2(bump))
    u_b, rep_b = epx.solve_fixed_point(cfg, f, u0=start)
    gap = lap_norm(epx.sub(u_a, u_b), BoundaryKind.NAVIER)
    ok = ratios_ok and rep_b.outcome == Outcome.CONVERGED and gap <= 10.0 * cfg.tol
    _verdict(7, ok, f"all ratios < 1 ({max(rep.ratio_history[1:]):.3f} max), "
             f"two in-ball starts agree to {gap:.2e} <= 10*tol")


@pytest.fixture(scope="module")
def mpass_config():
    """Documented criterion-8 configuration: 65x65 unit square, f = 1, lam = 1."""
    g = Grid2D(65, 65)
    f = Field.full(g, 1.0)
    lam = 1.0
    t0 = time.perf_counter()
    geom = setup_geometry(f, lam, seed=0)
    u0, j0 = epx.find_local_min(f, lam, geom)
    u_star, j_star, rep = epx.find_mountain_pass(f, lam, u0, geom)
    elapsed = time.perf_counter() - t0
    return dict(grid=g, f=f, lam=lam, geom=geom, u0=u0, j0=j0,
                u_star=u_star, j_star=j_star, rep=rep, elapsed=elapsed)


def test_criterion_8_two_solutions(mpass_config):
    c = mpass_config
    res0 = scaled_residual(c["u0"], c["f"], c["lam"])
    res1 = scaled_residual(c["u_star"], c["f"], c["lam"])
    distinct = lap_l2(epx.sub(c["u_star"], c["u0"])) > 0.0
    ok = (c["rep"].outcome == Outcome.CONVERGED
          and c["j0"] < 0.0 < c["j_star"]
          and res0 <= 1e-5 and res1 <= 1e-5
          and distinct and c["elapsed"] < 600.0)
    _verdict(8, ok, f"J(u0)={c['j0']:.3e} < 0 < J(u*)={c['j_star']:.4e}, "
             f"residuals ({res0:.1e}, {res1:.1e}) <= 1e-5, "
             f"runtime {c['elapsed']:.0f}s < 600s (65x65, f=1, lam=1)")


def test_criterion_9_thresholds_and_fold():
    g = Grid2D(33, 33)
    f = Field.full(g, 1.0)
    lo, hi = epx.lambda_threshold(f, BoundaryKind.NAVIER, 1.0, 1000.0)
    lo2, hi2 = epx.lambda_threshold(f, BoundaryKind.NAVIER, 1.0, 1000.0)
    picard_ok = (hi - lo) <= 1e-3 * hi and (lo, hi) == (lo2, hi2)

    one = lambda r: np.ones_like(r)
    trace: list = []
    lam_star = epx.radial_threshold(one, BoundaryKind.NAVIER, trace_out=trace)
    lam_star2 = epx.radial_threshold(one, BoundaryKind.NAVIER)
    spreads = []
    for delta in (0.04, 0.01):
        roots = epx.find_radial_roots(lam_star * (1 - delta), one, BoundaryKind.NAVIER)
        betas = sorted(s.beta for s in roots)
        spreads.append(betas[-1] - betas[0])
    fold_ratio = spreads[0] / spreads[1]
    radial_ok = lam_star == lam_star2 and abs(fold_ratio - 2.0) <= 0.4
    _verdict(9, picard_ok and radial_ok,
             f"picard bracket ({lo:.4f}, {hi:.4f}) width {(hi-lo)/hi:.2e} <= 1e-3, "
             f"deterministic; radial fold at {lam_star:.4f}, sqrt-scaling ratio "
             f"{fold_ratio:.3f} within 20% of 2")


def test_criterion_10_stability_dichotomy(mpass_config):
    c = mpass_config
    tag0 = epx.classify_stability(c["u0"], c["f"], c["lam"])
    tag1 = epx.classify_stability(c["u_star"], c["f"], c["lam"])
    _verdict(10, tag0 == StabilityTag.STABLE and tag1 == StabilityTag.UNSTABLE,
             f"u0 -> {tag0.value}, u* -> {tag1.value}")


def test_criterion_11_kpz_residuals():
    res_v, res_c = [], []
    for n in GRIDS:
        g = Grid2D(n, n)
        sol = epx.solve_kpz(Field.full(g, 1.0), 1.0)
        res_v.append(epx.norm_linf(sol.residual_v))
        res_c.append(epx.norm_linf(sol.residual_composed))
        for edge in (sol.v.values[0], sol.v.values[-1],
                     sol.v.values[:, 0], sol.v.values[:, -1]):
            assert np.abs(edge).max() == 0.0
    ov, oc = dyadic_orders(res_v), dyadic_orders(res_c)
    _verdict(11, bool((ov >= 1.9).all() and (oc >= 1.9).all()),
             f"kpz residual orders v={_fmt(ov)}, "
             f"composed={_fmt(oc)}; boundary trace exact")


def test_criterion_12_bit_reproducibility(tmp_path):
    from epx.cli import main

    out = tmp_path / "repro"
    argv = ["solve", "--bc", "navier", "--lambda", "1", "--f", "constant:1",
            "--nx", "33", "--ny", "33", "--output-dir", str(out)]
    assert main(argv) == 0
    first = {p.name: p.read_bytes() for p in out.glob("*.epx1")}
    first_summary = (out / "summary.json").read_bytes()
    assert main(argv) == 0
    second = {p.name: p.read_bytes() for p in out.glob("*.epx1")}
    ok = (first == second and (out / "summary.json").read_bytes() == first_summary
          and len(first) > 0)
    _verdict(12, ok, f"two consecutive runs: {len(first)} binary field file(s) "
             "bit-identical, summary identical")
