"""Time integration: growth laws, CFL formulas, the upwind update against
hand computation, and trajectory-level guarantees (conservation, bounds,
positivity, mass growth, exact landings).
"""

import math

import numpy as np
import pytest

from crossfv import (BrinkmanOperator, FaceField, GrowthLaw, NOFLUX, PERIODIC,
                     ScalarField, State, StepError, StepperConfig, build_grid,
                     divergence, growth_sup, identity_tensor, integrate,
                     l2_distance, nbar_ceiling, reaction, run, stable_dt,
                     step, upwind_flux, velocity)

NO_GROWTH = (GrowthLaw(nbar=1.0, slope=0.0), GrowthLaw(nbar=1.0, slope=0.0))


def _state(grid, n1_values, n2_values=None, nu=0.0, tensor=None):
    n1 = ScalarField(grid, np.asarray(n1_values, dtype=float))
    n2 = (ScalarField.zeros(grid) if n2_values is None
          else ScalarField(grid, np.asarray(n2_values, dtype=float)))
    total = ScalarField(grid, n1.values + n2.values)
    if nu == 0.0:
        m = total
    else:
        from crossfv import solve_brinkman
        op = BrinkmanOperator(grid, tensor, nu, 0.0)
        m, _, _ = solve_brinkman(op, total)
    return State(n1=n1, n2=n2, m=m, t=0.0)


# ----------------------------------------------------------- growth laws

def test_growth_law_validation():
    with pytest.raises(ValueError, match="positive"):
        GrowthLaw(nbar=0.0, slope=1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        GrowthLaw(nbar=1.0, slope=-0.5)


def test_growth_law_rate_and_equilibrium():
    law = GrowthLaw(nbar=1.0, slope=2.0)
    assert law.rate(1.0) == 0.0
    assert law.rate(np.array([0.0, 0.5, 1.5])).tolist() == [2.0, 1.0, -1.0]


def test_reaction_hand_values():
    grid = build_grid(1, 1.0, 2, NOFLUX)
    laws = (GrowthLaw(nbar=1.0, slope=1.0), GrowthLaw(nbar=1.0, slope=1.0))
    n1 = ScalarField(grid, np.array([0.5, 0.0]))
    n2 = ScalarField(grid, np.array([0.25, 0.0]))
    r1, r2 = reaction(n1, n2, laws)
    assert r1.values[0] == pytest.approx(0.125)  # 0.5 * (1 - 0.75)
    assert r2.values[0] == pytest.approx(0.0625)
    assert r1.values[1] == 0.0 and r2.values[1] == 0.0
    # Total at the homeostatic pressure: zero reaction.
    full1 = ScalarField(grid, np.array([1.0, 1.0]))
    r1, _ = reaction(full1, ScalarField.zeros(grid), laws)
    assert np.all(r1.values == 0.0)


def test_ceiling_and_growth_sup():
    laws = (GrowthLaw(nbar=1.0, slope=0.3), GrowthLaw(nbar=2.0, slope=0.5))
    assert nbar_ceiling(laws) == 2.0
    # Species 1: |G| on [0, 2] peaks at n = 2 -> 0.3 * |1 - 2| = 0.3;
    # species 2: at n = 0 -> 0.5 * 2 = 1.0.
    assert growth_sup(laws) == pytest.approx(1.0)
    assert growth_sup(NO_GROWTH) == 0.0


def test_stepper_config_validation():
    with pytest.raises(ValueError, match="mode"):
        StepperConfig(mode="euler", nu=0.0, nbar=1.0, reaction_max=0.0,
                      lambda_sup=1.0)
    with pytest.raises(ValueError, match="cfl_safety"):
        StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                      lambda_sup=1.0, cfl_safety=0.0)
    with pytest.raises(ValueError, match="darcy"):
        StepperConfig(mode="darcy", nu=0.1, nbar=1.0, reaction_max=0.0,
                      lambda_sup=1.0)
    with pytest.raises(ValueError, match="brinkman"):
        StepperConfig(mode="brinkman", nu=0.0, nbar=1.0, reaction_max=0.0,
                      lambda_sup=1.0)


def test_stepper_config_for_problem():
    grid = build_grid(1, 1.0, 8, NOFLUX)
    laws = (GrowthLaw(nbar=1.0, slope=0.5), GrowthLaw(nbar=2.0, slope=0.25))
    cfg = StepperConfig.for_problem(laws, identity_tensor(grid), 0.0)
    assert cfg.mode == "darcy"
    assert cfg.nbar == 2.0
    assert cfg.reaction_max == pytest.approx(1.0)  # max slope * ceiling
    assert cfg.lambda_sup == 1.0
    cfg_v = StepperConfig.for_problem(laws, identity_tensor(grid), 0.01)
    assert cfg_v.mode == "brinkman"


# ------------------------------------------------------------ stable_dt

def test_stable_dt_darcy_parabolic_value():
    # Zero velocity, no reaction: dt = cfl * dx^2 / (2 d Lambda nbar).
    grid = build_grid(1, 0.8, 16, NOFLUX)  # dx = 0.1
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0, cfl_safety=0.4)
    state = _state(grid, np.zeros(16))
    dt = stable_dt(state, FaceField.zeros(grid), cfg, grid)
    assert dt == pytest.approx(0.4 * 0.01 / 2.0)  # 0.002


def test_stable_dt_brinkman_advective_value():
    # With nu large enough that viscous damping covers the grid modes,
    # the advective bound cfl * dx / (2 d max|v|) is what binds.
    grid = build_grid(1, 0.05, 10, NOFLUX)  # dx = 0.01
    cfg = StepperConfig(mode="brinkman", nu=0.01, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0, cfl_safety=0.5)
    v = FaceField(grid, (np.full(11, 1.0),))
    state = _state(grid, np.zeros(10))
    dt = stable_dt(state, v, cfg, grid)
    # Parabolic bound here: 0.5 * (1e-4 + 0.04) / 2 = 0.010025 — not binding.
    assert dt == pytest.approx(0.0025, rel=1e-9)


def test_stable_dt_reaction_bound():
    grid = build_grid(1, 1.0, 4, NOFLUX)
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=100.0,
                        lambda_sup=1e-6, cfl_safety=0.5)
    state = _state(grid, np.zeros(4))
    dt = stable_dt(state, FaceField.zeros(grid), cfg, grid)
    assert dt == pytest.approx(0.5 / 100.0)


def test_stable_dt_refinement_scaling():
    # Doubling N halves the advective-bound dt and quarters the
    # zero-velocity darcy dt.
    def dt_for(n, mode, nu, speed):
        grid = build_grid(1, 1.0, n, NOFLUX)
        cfg = StepperConfig(mode=mode, nu=nu, nbar=1.0, reaction_max=0.0,
                            lambda_sup=1.0, cfl_safety=0.4)
        v = FaceField(grid, (np.full(n + 1, speed),))
        return stable_dt(_state(grid, np.zeros(n)), v, cfg, grid)

    assert dt_for(64, "brinkman", 1.0, 1.0) == pytest.approx(
        2.0 * dt_for(128, "brinkman", 1.0, 1.0), rel=1e-9)
    assert dt_for(64, "darcy", 0.0, 0.0) == pytest.approx(
        4.0 * dt_for(128, "darcy", 0.0, 0.0), rel=1e-12)


def test_stable_dt_small_nu_parabolic_guard():
    # At tiny nu the parabolic term must bind well below the advective
    # bound when velocities are small (slow grid-scale ringing regime).
    grid = build_grid(1, 1.0, 256, NOFLUX)
    cfg = StepperConfig(mode="brinkman", nu=1e-6, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0, cfl_safety=0.4)
    v = FaceField(grid, (np.full(257, 1e-3),))
    dt = stable_dt(_state(grid, np.zeros(256)), v, cfg, grid)
    dx2 = grid.cell_size ** 2
    expected = 0.4 * (dx2 + 4.0 * 1e-6) / (2.0 * 1.0 * 1.0)
    assert dt == pytest.approx(expected, rel=1e-12)


# --------------------------------------------------------- upwind update

def test_upwind_flux_hand_values():
    grid = build_grid(1, 1.0, 2, NOFLUX)
    n = ScalarField(grid, np.array([1.0, 2.0]))
    plus = FaceField(grid, (np.array([0.0, 1.0, 0.0]),))
    minus = FaceField(grid, (np.array([0.0, -1.0, 0.0]),))
    assert upwind_flux(n, plus).components[0][1] == 1.0   # left value
    assert upwind_flux(n, minus).components[0][1] == -2.0  # right value
    zero = upwind_flux(n, FaceField.zeros(grid))
    assert np.all(zero.components[0] == 0.0)


def test_upwind_flux_matches_brute_force_periodic():
    grid = build_grid(1, 1.0, 4, PERIODIC)
    rng = np.random.default_rng(11)
    n = ScalarField(grid, rng.uniform(0.0, 1.0, size=4))
    v_arr = rng.uniform(-1.0, 1.0, size=5)
    v_arr[-1] = v_arr[0]
    v = FaceField(grid, (v_arr,))
    flux = upwind_flux(n, v)
    # Brute force: face k sits between cells k-1 and k (wrap at 0).
    for k in range(5):
        left = n.values[(k - 1) % 4]
        right = n.values[k % 4]
        want = v_arr[k] * (left if v_arr[k] > 0 else right if v_arr[k] < 0
                           else 0.0)
        assert flux.components[0][k] == pytest.approx(want)
    # Flux-form transport conserves: divergence integrates to zero.
    assert abs(integrate(divergence(flux))) < 1e-14


def test_single_darcy_step_hand_computation():
    # 4-cell periodic grid, A = identity, G = 0, dt = 0.05.
    # n = {1.0, 0.5, 0.25, 0.75}, m = n, dx = 0.5.
    # grad m at faces (right - left)/dx, v = -grad m:
    #   face0 (n3->n0): (1.0-0.75)/0.5 =  0.5 -> v = -0.5  (flux -0.5*n0)
    #   face1 (n0->n1): (0.5-1.0)/0.5  = -1.0 -> v =  1.0  (flux  1.0*n0)
    #   face2 (n1->n2): (0.25-0.5)/0.5 = -0.5 -> v =  0.5  (flux  0.5*n1)
    #   face3 (n2->n3): (0.75-0.25)/0.5=  1.0 -> v = -1.0  (flux -1.0*n3)
    # fluxes F = {-0.5, 1.0, 0.25, -0.75, -0.5}; update n -= dt (F_r - F_l)/dx.
    grid = build_grid(1, 1.0, 4, PERIODIC)
    n_vals = np.array([1.0, 0.5, 0.25, 0.75])
    state = _state(grid, n_vals)
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0, cfl_safety=0.4)
    new = step(state, identity_tensor(grid), NO_GROWTH, cfg, 0.05)
    expect = np.array([1.0 - 0.1 * (1.0 - (-0.5)),
                       0.5 - 0.1 * (0.25 - 1.0),
                       0.25 - 0.1 * (-0.75 - 0.25),
                       0.75 - 0.1 * (-0.5 - (-0.75))])
    assert np.allclose(new.n1.values, expect, rtol=0.0, atol=1e-15)
    assert np.allclose(new.n1.values, [0.85, 0.575, 0.35, 0.725])
    assert integrate(new.n1) == pytest.approx(integrate(state.n1), abs=1e-15)
    assert new.t == pytest.approx(0.05)
    # Darcy mode keeps m = total density.
    assert np.array_equal(new.m.values, new.n1.values + new.n2.values)


def test_steady_states_are_fixed_points():
    grid = build_grid(1, 1.0, 16, PERIODIC)
    laws = (GrowthLaw(nbar=1.0, slope=0.5), GrowthLaw(nbar=1.0, slope=0.5))
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.5,
                        lambda_sup=1.0)
    # Full homeostatic density: zero gradient and zero reaction.
    full = _state(grid, np.full(16, 1.0))
    out = step(full, identity_tensor(grid), laws, cfg, 0.01)
    assert np.array_equal(out.n1.values, full.n1.values)
    # Vacuum is also steady.
    empty = _state(grid, np.zeros(16))
    out = step(empty, identity_tensor(grid), laws, cfg, 0.01)
    assert np.all(out.n1.values == 0.0) and np.all(out.n2.values == 0.0)


def test_step_detects_non_finite():
    grid = build_grid(1, 1.0, 4, NOFLUX)
    state = _state(grid, np.array([1.0, np.nan, 0.5, 0.0]))
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0)
    with pytest.raises(StepError, match="non-finite"):
        step(state, identity_tensor(grid), NO_GROWTH, cfg, 0.001)


def test_step_enforces_density_ceiling():
    grid = build_grid(1, 1.0, 4, NOFLUX)
    state = _state(grid, np.full(4, 1.2))  # already above nbar = 1
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0)
    with pytest.raises(StepError, match="maximum principle"):
        step(state, identity_tensor(grid), NO_GROWTH, cfg, 1e-6)


def test_step_clips_negative_densities_into_ledger():
    # An unstable dt on a sharp front forces an undershoot; the clipped
    # mass is recorded, not silently dropped.  (dt = 0.3 drains cell 0 by
    # 0.972 > 0.9 while keeping the receiving cell below the ceiling.)
    grid = build_grid(1, 1.0, 4, NOFLUX)
    state = _state(grid, np.array([0.9, 0.0, 0.0, 0.0]))
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0)
    new = step(state, identity_tensor(grid), NO_GROWTH, cfg, 0.3)
    assert np.all(new.n1.values >= 0.0)
    assert new.clipped_cum > 0.0
    # Mass bookkeeping: conserved once the ledger is added back.
    assert integrate(new.n1) == pytest.approx(
        integrate(state.n1) + new.clipped_cum, abs=1e-14)


# ----------------------------------------------------------- trajectories

def _gauss_state(grid, amp=0.8, width=0.4):
    x = grid.axis_centers()
    return _state(grid, amp * np.exp(-x * x / (2.0 * width * width)))


def test_run_conserves_mass_without_growth():
    grid = build_grid(1, 2.0, 64, NOFLUX)
    state = _gauss_state(grid)
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0)
    mass0 = integrate(state.n1)
    final, steps = run(state, identity_tensor(grid), NO_GROWTH, cfg, 0.5)
    assert steps > 10
    assert integrate(final.n1) == pytest.approx(
        mass0 - 0.0 + final.clipped_cum, rel=1e-13)
    assert np.all(final.n1.values >= 0.0)


def test_run_respects_ceiling_and_positivity_with_growth():
    grid = build_grid(1, 2.0, 64, NOFLUX)
    laws = (GrowthLaw(nbar=1.0, slope=0.5), GrowthLaw(nbar=1.0, slope=0.5))
    state = _gauss_state(grid, amp=0.9)
    cfg = StepperConfig.for_problem(laws, identity_tensor(grid), 0.0)
    peaks = []
    run(state, identity_tensor(grid), laws, cfg, 1.0,
        observers=[lambda i, s, aux: peaks.append(
            float(np.max(s.total_values())))])
    assert all(p <= 1.0 + cfg.bound_tolerance for p in peaks)


def test_run_mass_growth_bounded_by_exponential():
    grid = build_grid(1, 2.0, 64, NOFLUX)
    laws = (GrowthLaw(nbar=1.0, slope=0.5), GrowthLaw(nbar=1.0, slope=0.5))
    state = _gauss_state(grid, amp=0.5)
    cfg = StepperConfig.for_problem(laws, identity_tensor(grid), 0.0)
    mass0 = integrate(state.n1)
    t_final = 1.0
    final, _ = run(state, identity_tensor(grid), laws, cfg, t_final)
    g_hat = growth_sup(laws)
    assert integrate(final.n1) <= 1.05 * mass0 * math.exp(g_hat * t_final)


def test_run_zero_horizon_returns_initial():
    grid = build_grid(1, 1.0, 16, NOFLUX)
    state = _gauss_state(grid)
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0)
    final, steps = run(state, identity_tensor(grid), NO_GROWTH, cfg, 0.0)
    assert steps == 0
    assert final is state


def test_run_rejects_backwards_horizon():
    grid = build_grid(1, 1.0, 16, NOFLUX)
    state = _gauss_state(grid)
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0)
    state.t = 1.0
    with pytest.raises(ValueError, match="precedes"):
        run(state, identity_tensor(grid), NO_GROWTH, cfg, 0.5)


def test_run_lands_exactly_on_targets():
    grid = build_grid(1, 2.0, 64, NOFLUX)
    state = _gauss_state(grid)
    cfg = StepperConfig(mode="darcy", nu=0.0, nbar=1.0, reaction_max=0.0,
                        lambda_sup=1.0)
    targets = [0.1, 0.25, 0.4]
    seen = []
    run(state, identity_tensor(grid), NO_GROWTH, cfg, 0.5,
        observers=[lambda i, s, aux: seen.append(s.t)],
        targets=targets)
    for t in targets + [0.5]:
        assert t in seen  # exact float landings, not approximations


def test_run_steady_state_unchanged():
    grid = build_grid(1, 1.0, 32, PERIODIC)
    state = _state(grid, np.full(32, 1.0))
    laws = (GrowthLaw(nbar=1.0, slope=0.5), GrowthLaw(nbar=1.0, slope=0.5))
    cfg = StepperConfig.for_problem(laws, identity_tensor(grid), 0.0)
    final, _ = run(state, identity_tensor(grid), laws, cfg, 0.5)
    assert np.array_equal(final.n1.values, state.n1.values)


def test_tiny_nu_trajectory_close_to_darcy():
    # The brinkman path at nu = 1e-6 and the darcy path must agree to
    # within the discretization error scale of this grid.
    grid = build_grid(1, 2.0, 128, NOFLUX)
    tensor = identity_tensor(grid)
    t_final = 0.25

    def final_total(nu):
        state = _gauss_state(grid, amp=0.8, width=0.5)
        if nu > 0.0:
            from crossfv import solve_brinkman
            op = BrinkmanOperator(grid, tensor, nu, 0.0)
            m, _, _ = solve_brinkman(op, ScalarField(grid, state.n1.values))
            state = State(n1=state.n1, n2=state.n2, m=m, t=0.0)
        cfg = StepperConfig.for_problem(NO_GROWTH, tensor, nu)
        final, _ = run(state, tensor, NO_GROWTH, cfg, t_final)
        return ScalarField(grid, final.total_values())

    gap = l2_distance(final_total(1e-6), final_total(0.0))
    assert gap < 5e-4  # far below the O(dx) discretization band (~1e-2)
