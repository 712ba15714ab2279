import numpy as np
import pytest
import scipy.sparse.linalg as spla
import sympy

from epx import (BoundaryKind, Field, Grid2D, assemble_system, dump_system,
                 laplacian, norm_linf, solve_biharmonic_dirichlet,
                 solve_biharmonic_navier, solve_poisson)
from epx.linsolve import biharmonic_dirichlet_matrix, poisson_matrix
from epx.picard import lap_norm
from epx.grid import integrate
from conftest import dyadic_orders

X_, Y_ = sympy.symbols("x y")


def poisson_square_center_series(terms: int = 400) -> float:
    """Independent oracle: Fourier series for -lap u = 1 on the unit square."""
    total = 0.0
    for m in range(1, terms, 2):
        for n in range(1, terms, 2):
            coef = 16.0 / (np.pi ** 4 * m * n * (m * m + n * n))
            total += coef * np.sin(m * np.pi / 2) * np.sin(n * np.pi / 2)
    return total


def test_poisson_zero_rhs(unit33):
    u = solve_poisson(Field.zeros(unit33))
    assert norm_linf(u) == 0.0


def test_poisson_eigenpair_order():
    errs = []
    for n in (33, 65, 129):
        g = Grid2D(n, n)
        exact = Field.from_function(g, lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y))
        u = solve_poisson(Field(g, 2 * np.pi ** 2 * exact.values))
        errs.append(norm_linf(Field(g, u.values - exact.values)))
    assert (dyadic_orders(errs) >= 1.9).all()


def test_poisson_unit_forcing_center_value():
    center = poisson_square_center_series()
    assert center == pytest.approx(0.07367, abs=2e-5)  # classical value
    g = Grid2D(65, 65)
    u = solve_poisson(Field.full(g, 1.0))
    assert u.values[32, 32] == pytest.approx(center, abs=1e-3)


def test_poisson_residual_postcondition(unit33):
    rng = np.random.default_rng(2)
    g0 = Field(unit33, rng.standard_normal(unit33.shape))
    u = solve_poisson(g0)
    res = -laplacian(u, "antireflect").values[1:-1, 1:-1] - g0.values[1:-1, 1:-1]
    assert np.abs(res).max() <= 1e-10 * norm_linf(g0)


def test_navier_zero_and_eigenpair():
    assert norm_linf(solve_biharmonic_navier(Field.zeros(Grid2D(17, 17)))) == 0.0
    errs = []
    for n in (33, 65, 129):
        g = Grid2D(n, n)
        exact = Field.from_function(g, lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y))
        u = solve_biharmonic_navier(Field(g, 4 * np.pi ** 4 * exact.values))
        errs.append(norm_linf(Field(g, u.values - exact.values)))
    assert (dyadic_orders(errs) >= 1.9).all()


def test_navier_double_laplacian_roundtrip(unit33):
    rng = np.random.default_rng(4)
    g0 = Field(unit33, rng.standard_normal(unit33.shape))
    u = solve_biharmonic_navier(g0)
    twice = laplacian(laplacian(u, "antireflect"), "antireflect")
    res = twice.values[1:-1, 1:-1] - g0.values[1:-1, 1:-1]
    assert np.abs(res).max() < 1e-9 * max(1.0, norm_linf(g0))


def test_navier_apriori_bound_regression(unit33):
    # discrete shadow of |lap u|_2 <= C |g|_1 for g >= 0; C_grid frozen
    X, Y = unit33.meshgrid()
    probes = [Field.full(unit33, 1.0), Field(unit33, X * Y),
              Field(unit33, np.exp(-8 * ((X - 0.3) ** 2 + (Y - 0.6) ** 2))),
              Field(unit33, np.abs(np.sin(3 * X) * Y))]
    ratios = []
    for g0 in probes:
        u = solve_biharmonic_navier(g0)
        l1 = integrate(Field(unit33, np.abs(g0.values)))
        ratios.append(lap_norm(u, BoundaryKind.NAVIER) / l1)
    assert max(ratios) == pytest.approx(0.057503606750997256, rel=1e-9)
    assert max(ratios) < 0.058  # frozen C_grid for the 33x33 unit square


def test_dirichlet_zero_and_manufactured_order():
    assert norm_linf(solve_biharmonic_dirichlet(Field.zeros(Grid2D(17, 17)))) == 0.0
    expr = (X_ * (1 - X_) * Y_ * (1 - Y_)) ** 2
    f_u = sympy.lambdify((X_, Y_), expr, "numpy")
    f_b = sympy.lambdify((X_, Y_), sympy.diff(expr, X_, 4)
                         + 2 * sympy.diff(expr, X_, 2, Y_, 2)
                         + sympy.diff(expr, Y_, 4), "numpy")
    errs = []
    for n in (33, 65, 129):
        g = Grid2D(n, n)
        X, Y = g.meshgrid()
        u = solve_biharmonic_dirichlet(Field(g, f_b(X, Y)))
        errs.append(np.abs(u.values - f_u(X, Y)).max())
    assert (dyadic_orders(errs) >= 1.9).all()


def test_dirichlet_unit_forcing_positive_interior(unit33):
    # no maximum principle backs this in general; regression for this grid
    u = solve_biharmonic_dirichlet(Field.full(unit33, 1.0))
    assert (u.values[1:-1, 1:-1] > 0).all()


@pytest.mark.parametrize("solver", [solve_poisson, solve_biharmonic_navier,
                                    solve_biharmonic_dirichlet])
def test_solver_linearity(solver, unit33):
    rng = np.random.default_rng(6)
    g1 = Field(unit33, rng.standard_normal(unit33.shape))
    g2 = Field(unit33, rng.standard_normal(unit33.shape))
    combo = Field(unit33, 2.0 * g1.values - 3.5 * g2.values)
    lhs = solver(combo)
    rhs = 2.0 * solver(g1).values - 3.5 * solver(g2).values
    scale = max(norm_linf(lhs), 1e-30)
    assert np.abs(lhs.values - rhs).max() / scale < 1e-9


@pytest.mark.parametrize("matrix_fn", [poisson_matrix, biharmonic_dirichlet_matrix])
def test_matrices_symmetric_positive_definite(matrix_fn):
    g = Grid2D(9, 11, 0.0, 1.0, 0.0, 2.0)
    mat = matrix_fn(g)
    asym = (mat - mat.T).tocoo()
    assert np.abs(asym.data).max() if asym.nnz else 0.0 < 1e-12
    smallest = spla.eigsh(mat.asfptype(), k=1, which="SA",
                          return_eigenvectors=False)[0]
    assert smallest > 0.0


def test_matrix_market_dump(tmp_path, unit33):
    from scipy.io import mmread

    system = assemble_system(Field.full(unit33, 1.0), "poisson")
    path = tmp_path / "poisson.mtx"
    dump_system(system, path)
    back = mmread(path).tocsr()
    assert (back != system.matrix).nnz == 0
