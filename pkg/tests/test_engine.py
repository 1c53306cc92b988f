import numpy as np
import pytest

import thetabsde as tb
from thetabsde.drivers import evaluate
from thetabsde.engine import EngineError, axiom_check


def make_sde(**kw):
    base = dict(dim_x=1, dim_b=1, x0=[0.0], vol_const=[[1.0]])
    base.update(kw)
    return tb.SdeSpec(**base)


UNIT_BOX = tb.Box([0.0], [1.0])


def test_forward_deterministic_cases():
    grid = tb.TimeGrid(0.0, 1.0, 20)
    frozen = tb.SdeSpec(dim_x=1, dim_b=1, x0=[2.0])  # b=0, sigma=0
    ens = tb.simulate_forward(frozen, grid, 50, 1)
    assert np.all(ens.states == 2.0)

    ode = tb.SdeSpec(dim_x=1, dim_b=1, x0=[0.0], drift_const=[1.0])
    ens = tb.simulate_forward(ode, grid, 50, 1)
    assert np.allclose(ens.states[:, -1, 0], 1.0, atol=1e-12)


def test_forward_brownian_variance():
    grid = tb.TimeGrid(0.0, 1.0, 50)
    ens = tb.simulate_forward(make_sde(), grid, 100_000, 2)
    xT = ens.states[:, -1, 0]
    # Var chi^2 check: sample variance of B_T is T within 3 standard errors
    se = np.sqrt(2.0 / len(xT))  # stderr of the variance of a N(0,1) sample
    assert abs(np.var(xT) - 1.0) <= 3 * se


def test_forward_regeneration_is_bit_identical():
    grid = tb.TimeGrid(0.0, 1.0, 10)
    a = tb.simulate_forward(make_sde(), grid, 100, 7)
    b = tb.simulate_forward(make_sde(), grid, 100, 7)
    assert np.array_equal(a.increments, b.increments)
    assert np.array_equal(a.states, b.states)


def test_zero_driver_constant_terminal():
    grid = tb.TimeGrid(0.0, 1.0, 20)
    sc = tb.Scenario(sde=make_sde(), driver=tb.ZeroDriver(), uset=UNIT_BOX,
                     terminal=tb.Payoff([3.0]), grid=grid, n_paths=10_000, seed=3)
    sol = tb.solve_theta_bsde(sc)
    assert np.allclose(sol.Y, 3.0, atol=1e-10)
    assert np.max(np.abs(sol.Z)) <= 5e-3


def test_constant_driver_constant_terminal():
    grid = tb.TimeGrid(0.0, 1.0, 20)
    k, c = 0.7, 2.0
    sc = tb.Scenario(sde=make_sde(), driver=tb.AffineDriver(k, 0.0, [0.0]),
                     uset=UNIT_BOX, terminal=tb.Payoff([c]), grid=grid,
                     n_paths=2000, seed=3)
    sol = tb.solve_theta_bsde(sc)
    for i, t in enumerate(grid.times):
        assert np.allclose(sol.Y[:, i], c + k * (1.0 - t), atol=1e-10)


def test_linear_y_driver_closed_form():
    # F = r*y, xi = B_T: Y_t = exp(r(T-t)) B_t
    r = 0.1
    grid = tb.TimeGrid(0.0, 1.0, 50)
    sc = tb.Scenario(sde=make_sde(), driver=tb.AffineDriver(0.0, r, [0.0]),
                     uset=UNIT_BOX, terminal=tb.Payoff([0.0, 1.0]), grid=grid,
                     n_paths=20_000, seed=4)
    ens = tb.simulate_forward(sc.sde, grid, sc.n_paths, sc.seed)
    sol = tb.solve_theta_bsde(sc, paths=ens)
    assert abs(sol.Y0) <= 3 * sol.stderr
    i = 25  # mid-grid
    b = ens.states[:, i, 0]
    slope = np.polyfit(b, sol.Y[:, i], 1)[0]
    assert slope == pytest.approx(np.exp(r * 0.5), rel=0.02)


def test_theta_expectation():
    grid = tb.TimeGrid(0.0, 1.0, 10)
    sc = tb.Scenario(sde=make_sde(), driver=tb.AffineDriver(0.5, 0.0, [0.0]),
                     uset=UNIT_BOX, terminal=tb.Payoff([0.0]), grid=grid,
                     n_paths=500, seed=5)
    sol = tb.solve_theta_bsde(sc)
    assert tb.theta_expectation(sol, 0) == pytest.approx(0.5, abs=1e-10)
    # terminal node: mean of the payoff
    assert tb.theta_expectation(sol, 10) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(EngineError):
        tb.theta_expectation(sol, 11)


def test_recorded_maximizers_are_feasible_and_optimal():
    grid = tb.TimeGrid(0.0, 1.0, 10)
    uset = tb.UnionSet([tb.Box([0.0], [1.0]), tb.Box([3.0], [4.0])])
    G = tb.StateFn(c0=np.array([0.0]), C_z=[[2.0]])
    drv = tb.RegularizedProjectionDriver(h=tb.StateFn(c0=0.0), G=G, eps=0.5)
    sc = tb.Scenario(sde=make_sde(), driver=drv, uset=uset,
                     terminal=tb.Payoff([0.0, 1.0]), grid=grid,
                     n_paths=500, seed=6)
    ens = tb.simulate_forward(sc.sde, grid, sc.n_paths, sc.seed)
    sol = tb.solve_theta_bsde(sc, paths=ens)
    assert sol.diagnostics["max_a_distance"] <= 1e-9
    assert sol.diagnostics["unsound_for_existence"] is False  # regularized variant
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = rng.integers(0, sc.n_paths)
        i = rng.integers(0, grid.n_steps + 1)
        val = evaluate(drv, grid.times[i], ens.states[p, i][None],
                       [sol.Y[p, i]], sol.Z[p, i][None], sol.A[p, i])[0]
        for _ in range(20):
            # random feasible competitor from one of the members
            a = rng.uniform(0, 1) if rng.random() < 0.5 else rng.uniform(3, 4)
            other = evaluate(drv, grid.times[i], ens.states[p, i][None],
                             [sol.Y[p, i]], sol.Z[p, i][None], [a])[0]
            assert val >= other - 1e-9


def test_solution_determinism_bit_identical():
    grid = tb.TimeGrid(0.0, 1.0, 15)
    sc = tb.Scenario(sde=make_sde(), driver=tb.AffineDriver(0.1, 0.2, [0.3]),
                     uset=UNIT_BOX, terminal=tb.Payoff([0.0, 0.0, 1.0]),
                     grid=grid, n_paths=2000, seed=11)
    s1 = tb.solve_theta_bsde(sc)
    s2 = tb.solve_theta_bsde(sc)
    assert np.array_equal(s1.Y, s2.Y)
    assert np.array_equal(s1.Z, s2.Z)
    assert np.array_equal(s1.A, s2.A)


def test_y0_variance_scales_inversely_with_paths():
    grid = tb.TimeGrid(0.0, 1.0, 5)
    sizes = [500, 2000, 8000]
    variances = []
    for n in sizes:
        y0s = []
        for rep in range(20):
            sc = tb.Scenario(sde=make_sde(), driver=tb.ZeroDriver(),
                             uset=UNIT_BOX, terminal=tb.Payoff([0.0, 1.0]),
                             grid=grid, n_paths=n, seed=1000 + rep)
            y0s.append(tb.solve_theta_bsde(sc).Y0)
        variances.append(np.var(y0s))
    slope = np.polyfit(np.log(sizes), np.log(variances), 1)[0]
    assert -1.2 <= slope <= -0.8


def test_axiom_a1_equal_terminals():
    grid = tb.TimeGrid(0.0, 1.0, 10)
    sc = tb.Scenario(sde=make_sde(), driver=tb.ZeroDriver(), uset=UNIT_BOX,
                     terminal=tb.Payoff([0.0, 1.0]), grid=grid,
                     n_paths=500, seed=8)
    rep = axiom_check(sc, "A1_monotonicity", {"terminal2": tb.Payoff([0.0, 1.0])})
    assert rep["passed"] and rep["discrepancy"] == 0.0


def test_axiom_a2_zero_driver_exact_shift():
    grid = tb.TimeGrid(0.0, 1.0, 10)
    sc = tb.Scenario(sde=make_sde(), driver=tb.ZeroDriver(), uset=UNIT_BOX,
                     terminal=tb.Payoff([0.0, 1.0]), grid=grid,
                     n_paths=500, seed=8)
    rep = axiom_check(sc, "A2_translation", {"m": 1.0})
    assert rep["passed"] and rep["discrepancy"] <= 1e-12


def test_axiom_a2_rejects_y_dependent_driver():
    grid = tb.TimeGrid(0.0, 1.0, 10)
    sc = tb.Scenario(sde=make_sde(), driver=tb.AffineDriver(0.0, 1.0, [0.0]),
                     uset=UNIT_BOX, terminal=tb.Payoff([0.0, 1.0]), grid=grid,
                     n_paths=500, seed=8)
    with pytest.raises(EngineError):
        axiom_check(sc, "A2_translation", {"m": 1.0})


def test_axiom_a3_s_equals_t():
    grid = tb.TimeGrid(0.0, 1.0, 10)
    sc = tb.Scenario(sde=make_sde(), driver=tb.AffineDriver(0.2, 0.0, [0.1]),
                     uset=UNIT_BOX, terminal=tb.Payoff([0.0, 1.0]), grid=grid,
                     n_paths=500, seed=8)
    rep = axiom_check(sc, "A3_tower", {"s_index": 0})
    assert rep["passed"] and rep["discrepancy"] == 0.0


def test_engine_validation_errors():
    with pytest.raises(EngineError):
        tb.TimeGrid(0.0, 0.0, 10)
    with pytest.raises(EngineError):
        tb.TimeGrid(0.0, 1.0, 0)
    with pytest.raises(EngineError):
        tb.SdeSpec(dim_x=2, dim_b=1, x0=[0.0])
    with pytest.raises(EngineError):
        tb.Payoff([0.0, 1.0], clamp=(2.0, 1.0))
