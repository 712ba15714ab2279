import numpy as np
import pytest

from epx import (BoundaryKind, Field, Grid2D, PicardConfig, classify_stability,
                 find_local_min, find_mountain_pass, norm_linf,
                 solve_biharmonic_dirichlet, solve_fixed_point, sub)
from epx.energy import lap_l2, setup_geometry
from epx.mpass import (MIN_PATH_POINTS, PathState, StabilityTag,
                       _precondition, scaled_residual)
from epx.picard import lap_norm
from epx.report import Outcome


@pytest.fixture(scope="module")
def grid():
    return Grid2D(33, 33)


@pytest.fixture(scope="module")
def ones(grid):
    return Field.full(grid, 1.0)


@pytest.fixture(scope="module")
def geom(ones):
    return setup_geometry(ones, 1.0, seed=0)


@pytest.fixture(scope="module")
def local_min(ones, geom):
    return find_local_min(ones, 1.0, geom)


@pytest.fixture(scope="module")
def pass_point(ones, geom, local_min, tmp_path_factory):
    u0, _ = local_min
    csv = tmp_path_factory.mktemp("mpass") / "path_energies.csv"
    u_star, j_star, rep = find_mountain_pass(ones, 1.0, u0, geom, path_csv=csv)
    return u_star, j_star, rep, csv


def test_path_state_invariants(grid):
    pts = [Field.zeros(grid) for _ in range(MIN_PATH_POINTS)]
    PathState(pts, np.zeros(MIN_PATH_POINTS))
    with pytest.raises(ValueError):
        PathState(pts[:-1], np.zeros(MIN_PATH_POINTS - 1))
    with pytest.raises(ValueError):
        PathState(pts, np.zeros(MIN_PATH_POINTS - 1))


def test_local_min_zero_forcing_degenerates(grid):
    u0, j0 = find_local_min(Field.zeros(grid), 1.0)
    assert norm_linf(u0) == 0.0 and j0 == 0.0


def test_local_min_properties(ones, geom, local_min):
    u0, j0 = local_min
    assert j0 < 0.0
    assert lap_l2(u0) < geom.r0  # genuine critical point of the full energy
    assert scaled_residual(u0, ones, 1.0) <= 1e-8
    assert j0 == pytest.approx(-1.973249e-04, rel=1e-5)  # frozen


def test_local_min_rejects_large_lambda(ones, geom):
    with pytest.raises(ValueError):
        find_local_min(ones, 2.0 * geom.lambda0, None)


def test_local_min_lambda_scaling(ones, grid):
    # u0(lam) ~ lam * v_lin + O(lam^2); the rescaled gap shrinks with lam
    v_lin = solve_biharmonic_dirichlet(ones)
    gaps = []
    for lam in (0.4, 0.2, 0.1):
        u0, _ = find_local_min(ones, lam)
        gaps.append(lap_l2(Field(grid, u0.values / lam - v_lin.values)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_descent_direction_monotone(ones, grid):
    # preconditioned steepest descent decreases the truncated energy exactly
    from epx.energy import truncated_energy, truncated_energy_gradient, mollified_direction
    geom = setup_geometry(ones, 1.0, seed=0)
    phi = mollified_direction(ones)
    u = Field(grid, 0.25 * geom.r0 * phi.values / lap_l2(phi))
    f_prev = truncated_energy(u, ones, 1.0, geom.tp)
    accepted = 0
    for _ in range(6):
        g = truncated_energy_gradient(u, ones, 1.0, geom.tp)
        if scaled_residual(u, ones, 1.0, g) <= 1e-12:
            break  # parked on the minimizer; nothing left to decrease
        d = _precondition(grid, g)
        alpha = 1.0
        while True:
            trial = Field(grid, u.values - alpha * d.values)
            f_new = truncated_energy(trial, ones, 1.0, geom.tp)
            if f_new < f_prev or alpha < 1e-14:
                break
            alpha *= 0.5
        assert f_new < f_prev
        u, f_prev = trial, f_new
        accepted += 1
    assert accepted >= 2


def test_mountain_pass_two_solution_certificate(ones, geom, local_min, pass_point):
    u0, j0 = local_min
    u_star, j_star, rep, _ = pass_point
    assert rep.outcome == Outcome.CONVERGED
    assert j0 < 0.0 < j_star
    assert lap_l2(u_star) > lap_l2(u0)
    assert scaled_residual(u_star, ones, 1.0) <= 1e-5
    assert lap_l2(sub(u_star, u0)) > 0.0
    # minimax level certificate against the computed minorant
    assert j_star >= geom.g(geom.r_max) > 0.0


def test_max_energy_nonincreasing_over_sweeps(pass_point):
    _, _, _, csv = pass_point
    rows = np.loadtxt(csv, delimiter=",", skiprows=1, ndmin=2)
    sweeps = np.unique(rows[:, 0])
    maxima = [rows[rows[:, 0] == s, 2].max() for s in sweeps]
    assert all(b <= a + 1e-9 * (1 + abs(a)) for a, b in zip(maxima, maxima[1:]))


def test_mountain_pass_not_reachable_by_picard(ones, grid, pass_point):
    u_star, _, _, _ = pass_point
    u_pic, rep = solve_fixed_point(PicardConfig(lam=1.0, bc=BoundaryKind.DIRICHLET), ones)
    assert rep.outcome == Outcome.CONVERGED
    assert lap_norm(sub(u_star, u_pic), BoundaryKind.DIRICHLET) > 1.0


def test_stability_dichotomy(ones, local_min, pass_point):
    u0, _ = local_min
    u_star, _, _, _ = pass_point
    assert classify_stability(u0, ones, 1.0) == StabilityTag.STABLE
    assert classify_stability(u_star, ones, 1.0) == StabilityTag.UNSTABLE


def test_zero_state_stable_without_forcing(grid):
    zero = Field.zeros(grid)
    assert classify_stability(zero, zero, 0.0) == StabilityTag.STABLE
