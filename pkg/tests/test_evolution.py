import numpy as np
import pytest

from epx import (BoundaryKind, Field, FlowConfig, Grid2D, PicardConfig,
                 flow_step, flow_to_steady, norm_linf, solve_fixed_point, sub)
from epx.energy import bump_psi, lap_l2
from epx.picard import lap_norm
from epx.report import Outcome


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(dt=0.0)
    with pytest.raises(ValueError):
        FlowConfig(k2=-1.0)


def test_stationary_solution_is_fixed_point(unit33, ones33):
    lam = 1.0
    u, rep = solve_fixed_point(PicardConfig(lam=lam, bc=BoundaryKind.NAVIER), ones33)
    assert rep.outcome == Outcome.CONVERGED
    cfg = FlowConfig(k1=0.5, k2=1.0, dt=1e-3, steps=1, bc=BoundaryKind.NAVIER)
    step = flow_step(u, ones33, lam, cfg)
    assert norm_linf(sub(step, u)) <= 1e-12


def test_small_bump_decays_monotonically(unit33):
    f0 = Field.zeros(unit33)
    psi = bump_psi(unit33)
    u = Field(unit33, 0.01 * psi.values / lap_l2(psi))
    cfg = FlowConfig(k1=0.5, k2=1.0, dt=1e-4, steps=1, bc=BoundaryKind.NAVIER)
    norms = [lap_norm(u, cfg.bc)]
    for _ in range(50):
        u = flow_step(u, f0, 0.0, cfg)
        norms.append(lap_norm(u, cfg.bc))
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_linear_decay_rate_matches_eigenvalue():
    # k1 = 0 turns the flow into du/dt = -lap^2 u; the first hinged mode
    # decays like exp(-4 pi^4 t)
    g = Grid2D(33, 33)
    u = Field.from_function(g, lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y))
    f0 = Field.zeros(g)
    dt = 2e-6
    cfg = FlowConfig(k1=0.0, k2=1.0, dt=dt, steps=1, bc=BoundaryKind.NAVIER)
    a0 = norm_linf(u)
    steps = 0
    while norm_linf(u) > 0.1 * a0:
        u = flow_step(u, f0, 0.0, cfg)
        steps += 1
    rate = -np.log(norm_linf(u) / a0) / (steps * dt)
    assert rate == pytest.approx(4 * np.pi ** 4, rel=0.02)


def test_one_step_local_error_second_order(unit33):
    # dt-halving Richardson: |S_dt - S_{dt/2}^2| = O(dt^2).  The state must
    # be spectrally resolved (dt * lam_max << 1) or the stiff modes sit
    # outside the expansion the comparison relies on.
    u0 = Field.from_function(unit33, lambda X, Y: 0.1 * np.sin(np.pi * X) * np.sin(np.pi * Y))
    f = Field.full(unit33, 1.0)
    gaps = []
    for dt in (2e-4, 1e-4, 5e-5):
        big = flow_step(u0, f, 1.0, FlowConfig(dt=dt, steps=1, bc=BoundaryKind.NAVIER))
        half_cfg = FlowConfig(dt=dt / 2, steps=1, bc=BoundaryKind.NAVIER)
        small = flow_step(flow_step(u0, f, 1.0, half_cfg), f, 1.0, half_cfg)
        gaps.append(norm_linf(sub(big, small)))
    orders = np.log2(np.array(gaps[:-1]) / np.array(gaps[1:]))
    assert (orders >= 1.7).all()


def test_flow_to_steady_zero_forcing(unit33):
    f0 = Field.zeros(unit33)
    psi = bump_psi(unit33)
    u0 = Field(unit33, 0.05 * psi.values / lap_l2(psi))
    cfg = FlowConfig(dt=1e-3, steps=50_000, bc=BoundaryKind.NAVIER)
    u, rep = flow_to_steady(u0, f0, 0.0, cfg, tol=1e-10)
    assert rep.outcome == Outcome.CONVERGED
    assert norm_linf(u) < 1e-8


def test_flow_agrees_with_picard(unit33, ones33):
    # the scheme's fixed point solves the same discrete stationary system
    lam = 1.0
    u_pic, _ = solve_fixed_point(PicardConfig(lam=lam, bc=BoundaryKind.NAVIER), ones33)
    cfg = FlowConfig(k1=0.5, k2=1.0, dt=1e-3, steps=200_000, bc=BoundaryKind.NAVIER)
    u_flow, rep = flow_to_steady(Field.zeros(unit33), ones33, lam, cfg, tol=1e-10)
    assert rep.outcome == Outcome.CONVERGED
    assert lap_norm(sub(u_flow, u_pic), BoundaryKind.NAVIER) <= 1e-6


def test_horizon_exhaustion_reported(unit33, ones33):
    cfg = FlowConfig(dt=1e-5, steps=3, bc=BoundaryKind.NAVIER)
    _, rep = flow_to_steady(Field.zeros(unit33), ones33, 1.0, cfg, tol=1e-14)
    assert rep.outcome == Outcome.MAX_ITER
    assert rep.iterates == 3
