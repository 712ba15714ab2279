import numpy as np
import pytest

from epx import (Field, Grid2D, KpzAdmissibilityError, laplacian, norm_linf,
                 solve_kpz)
from conftest import dyadic_orders


def test_zero_forcing_gives_trivial_branch(unit33):
    sol = solve_kpz(Field.zeros(unit33), 1.0)
    assert norm_linf(sol.u) == 0.0
    assert norm_linf(sol.v) == 0.0
    assert np.all(sol.w.values == 1.0)


def test_rejects_negative_forcing(unit33):
    bad = Field.from_function(unit33, lambda X, Y: X - 0.5)
    with pytest.raises(ValueError):
        solve_kpz(bad, 1.0)
    with pytest.raises(ValueError):
        solve_kpz(Field.full(unit33, 1.0), -1.0)


def test_small_lambda_solution_structure(unit33, ones33):
    sol = solve_kpz(ones33, 1.0)
    assert (sol.v.values[1:-1, 1:-1] > 0).all()
    assert (sol.w.values > 0).all()
    # exact boundary data: w = 1, v = 0, for every edge
    assert np.abs(sol.w.values[0] - 1.0).max() == 0.0
    assert np.abs(sol.v.values[:, -1]).max() == 0.0
    # monotonicity: z = w - 1 >= 0 by the discrete maximum principle
    assert (sol.w.values >= 1.0).all()


def test_transform_exactness(unit33, ones33):
    # -lap w = lam f w holds to linear-solver accuracy at interior nodes
    lam = 1.0
    sol = solve_kpz(ones33, lam)
    res = (-laplacian(sol.w, "antireflect").values
           - lam * ones33.values * sol.w.values)[1:-1, 1:-1]
    assert np.abs(res).max() < 1e-10


def test_residuals_second_order_under_refinement():
    res_v, res_c = [], []
    for n in (33, 65, 129):
        g = Grid2D(n, n)
        sol = solve_kpz(Field.full(g, 1.0), 1.0)
        res_v.append(norm_linf(sol.residual_v))
        res_c.append(norm_linf(sol.residual_composed))
    assert (dyadic_orders(res_v) >= 1.9).all()
    assert (dyadic_orders(res_c) >= 1.9).all()


def test_exponential_boundary_membership_shadow(unit33, ones33):
    # e^{delta v} - 1 vanishes on the boundary for every delta, exactly
    sol = solve_kpz(ones33, 1.0)
    for delta in (0.1, 0.25, 0.4, 0.5):
        trace = np.exp(delta * sol.v.values) - 1.0
        assert np.abs(trace[0]).max() == 0.0
        assert np.abs(trace[-1]).max() == 0.0
        assert np.abs(trace[:, 0]).max() == 0.0
        assert np.abs(trace[:, -1]).max() == 0.0


def test_lambda_beyond_spectral_bound_rejected(unit33, ones33):
    # for f = 1 admissibility ends at the first Dirichlet eigenvalue of
    # -lap (about 19.7 on the unit square); well beyond it w loses positivity
    with pytest.raises(KpzAdmissibilityError):
        solve_kpz(ones33, 25.0)


def test_u_solves_poisson_against_v(unit33, ones33):
    sol = solve_kpz(ones33, 1.0)
    res = (-laplacian(sol.u, "antireflect").values - sol.v.values)[1:-1, 1:-1]
    assert np.abs(res).max() < 1e-10
