"""Equilibrium derivatives: structure, oracles, and refusal behavior."""

import numpy as np
import pytest

from nagsens import (
    ConstraintQualificationError,
    GameSpec,
    LinearInteraction,
    Network,
    PolyhedralSet,
    QuadraticShockCost,
    SolverConfig,
    detect_active_set,
    finite_difference_oracle,
    sensitivity_matrix,
    solve_nash,
)

from conftest import random_lq_game

CFG = SolverConfig(tol_res=1e-11)


def test_unconstrained_reduction():
    """With nothing active, the response is the inverse operator Jacobian."""
    gamma = 0.3
    W = np.array([[0.0, 1.0], [1.0, 0.0]])
    game = GameSpec(network=Network(W),
                    cost=QuadraticShockCost(LinearInteraction(gamma)),
                    sets=[PolyhedralSet.unconstrained(1)] * 2)
    y = np.array([0.4, -0.1])
    res = solve_nash(game, y, config=CFG)
    sens = sensitivity_matrix(game, res, y, config=CFG)
    L_expected = np.linalg.inv(np.eye(2) - gamma * W)
    np.testing.assert_allclose(sens.M, L_expected, atol=1e-10)
    # dx/dy = -M dF/dy = M * gamma for the additive-shock model
    np.testing.assert_allclose(sens.dx_dy, gamma * L_expected, atol=1e-10)


def test_response_matrix_is_psd_and_tangent(rng):
    """M must be PSD and parameter moves must stay inside the active face."""
    for trial in range(12):
        game = random_lq_game(rng, n_players=5)
        y = rng.normal(scale=1.5, size=5)
        res = solve_nash(game, y, config=CFG)
        try:
            sens = sensitivity_matrix(game, res, y, config=CFG)
        except ConstraintQualificationError:
            continue  # a random corner can be genuinely degenerate
        sym = 0.5 * (sens.M + sens.M.T)
        assert np.linalg.eigvalsh(sym).min() >= -1e-9
        A = sens.report.A[sens.report.independent_rows]
        if A.size:
            assert np.abs(A @ sens.dx_dy).max() < 1e-8


def test_matches_finite_differences(rng):
    for trial in range(6):
        game = random_lq_game(rng, n_players=4)
        y = rng.normal(scale=1.2, size=4)
        res = solve_nash(game, y, config=CFG)
        try:
            sens = sensitivity_matrix(game, res, y, config=CFG)
        except ConstraintQualificationError:
            continue
        direction = rng.normal(size=4)
        direction /= np.linalg.norm(direction)
        fd = finite_difference_oracle(game, y, direction, h=1e-5, config=CFG)
        np.testing.assert_allclose(sens.dx_dy @ direction, fd, atol=5e-6)


def test_pinned_player_does_not_move():
    gamma = 0.4
    W = np.array([[0.0, 1.0], [1.0, 0.0]])
    game = GameSpec(network=Network(W),
                    cost=QuadraticShockCost(LinearInteraction(gamma)),
                    sets=[PolyhedralSet.unconstrained(1),
                          PolyhedralSet.with_pins(1, {0: 0.0})])
    y = np.array([1.0, 0.3])
    res = solve_nash(game, y, config=CFG)
    assert abs(res.x_star.x[1]) < 1e-12
    sens = sensitivity_matrix(game, res, y, config=CFG)
    np.testing.assert_allclose(sens.dx_dy[1], 0.0, atol=1e-12)
    # the free player's own response matches the single-player closed form
    assert sens.dx_dy[0, 0] == pytest.approx(gamma, abs=1e-10)


def test_duplicate_inequality_rows_are_degenerate():
    """The same facet written twice splits its multiplier arbitrarily; the
    derivative formula's independence hypothesis fails and must be refused,
    not papered over."""
    gamma = 0.3
    W = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = np.array([[-1.0], [-1.0]])  # x >= 0, twice
    b = np.zeros(2)
    game = GameSpec(network=Network(W),
                    cost=QuadraticShockCost(LinearInteraction(gamma)),
                    sets=[PolyhedralSet(dim=1, B=B, b=b),
                          PolyhedralSet.unconstrained(1)])
    y = np.array([-2.0, 0.5])  # negative shock pushes player 1 onto the bound
    res = solve_nash(game, y, config=CFG)
    assert abs(res.x_star.x[0]) < 1e-10
    report = detect_active_set(game, res, config=CFG)
    assert report.n_active == 2
    assert report.degenerate and not report.full_row_rank
    with pytest.raises(ConstraintQualificationError):
        sensitivity_matrix(game, res, y, config=CFG)


def test_pin_implied_bound_is_exempt_from_strictness():
    """A bound that coincides with an equality pin carries zero multiplier;
    that must not be misread as a strict-complementarity failure."""
    gamma = 0.3
    W = np.array([[0.0, 1.0], [1.0, 0.0]])
    pinned = PolyhedralSet(dim=1, B=np.array([[-1.0]]), b=np.zeros(1),
                           H=np.array([[1.0]]), h=np.zeros(1))
    game = GameSpec(network=Network(W),
                    cost=QuadraticShockCost(LinearInteraction(gamma)),
                    sets=[pinned, PolyhedralSet.unconstrained(1)])
    y = np.array([1.0, 1.0])
    res = solve_nash(game, y, config=CFG)
    sens = sensitivity_matrix(game, res, y, config=CFG)  # must not refuse
    assert sens.report.cq_ok
    np.testing.assert_allclose(sens.dx_dy[0], 0.0, atol=1e-12)


def test_weak_complementarity_is_refused():
    """An active bound with zero multiplier has no one-sided derivative."""
    gamma = 0.5
    W = np.array([[0.0, 1.0], [1.0, 0.0]])
    game = GameSpec(network=Network(W),
                    cost=QuadraticShockCost(LinearInteraction(gamma)),
                    sets=[PolyhedralSet.nonnegative(1),
                          PolyhedralSet.unconstrained(1)])
    # player 2 sits at -gamma*? ... choose the shock so player 1's
    # unconstrained optimum is exactly the bound: x1 = 0 with lam = 0
    y = np.array([0.0, 0.0])
    res = solve_nash(game, y, config=CFG)
    assert abs(res.x_star.x[0]) < 1e-10
    report = detect_active_set(game, res, config=CFG)
    if report.n_active:  # the bound registered as active at tolerance
        with pytest.raises(ConstraintQualificationError):
            sensitivity_matrix(game, res, y, config=CFG)


def test_sensitivity_shapes(rng):
    game = random_lq_game(rng, n_players=3, constrained=False)
    y = rng.normal(size=3)
    res = solve_nash(game, y, config=CFG)
    sens = sensitivity_matrix(game, res, y, config=CFG)
    assert sens.dx_dy.shape == (3, 3)
    assert sens.L.shape == (3, 3)
    assert sens.M.shape == (3, 3)
