"""Strong-monotonicity certificates: branch selection and margins."""

import numpy as np
import pytest

from nagsens import (
    ConfigurationError,
    FriedkinJohnsenCost,
    GameSpec,
    LinearInteraction,
    ModelViolationError,
    Network,
    ParametricCostModel,
    PolyhedralSet,
    QuadraticShockCost,
    UnsupportedRegimeError,
    certify,
    direct_margin,
    network_weight,
)

K3 = np.array([
    [0.0, 1.0, 1.0],
    [1.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
])


class CongestionToy(ParametricCostModel):
    """Scalar cost with positive aggregate coupling: grad = x + c*z - y.

    The positive cross term is what admits the sharp eigenvalue branch of
    the certificate; the packaged costs all couple negatively.
    """

    constant_curvature = True

    def __init__(self, c):
        self.c = float(c)

    def cost(self, i, x_i, z_i, y_i):
        x = float(np.asarray(x_i))
        return 0.5 * x * x + self.c * float(np.asarray(z_i)) * x - float(np.asarray(y_i)) * x

    def grad(self, i, x_i, z_i, y_i):
        return np.atleast_1d(np.asarray(x_i, dtype=float)
                             + self.c * np.asarray(z_i) - np.asarray(y_i))

    def hess(self, i, x_i, z_i, y_i):
        return np.eye(1)

    def cross(self, i, x_i, z_i, y_i):
        return self.c * np.eye(1)

    def param_jac(self, i, x_i, z_i, y_i):
        return -np.eye(1)


def _k3_game(cost):
    return GameSpec(network=Network(K3), cost=cost,
                    sets=[PolyhedralSet.unconstrained(1)] * 3)


def test_network_weight_branches():
    w_spec, branch = network_weight(Network(K3), scaled_identity=True)
    assert branch == "spectral"
    assert w_spec == pytest.approx(1.0)  # |lambda_min| of the triangle
    w_norm, branch = network_weight(Network(K3), scaled_identity=False)
    assert branch == "norm"
    assert w_norm == pytest.approx(2.0)


def test_spectral_branch_beats_norm_branch_on_triangle():
    """c = 0.6 on the triangle: eigenvalue bound 0.4, norm bound -0.2."""
    cert = certify(_k3_game(CongestionToy(0.6)), np.zeros(3))
    assert cert.branch == "spectral"
    assert cert.margin == pytest.approx(0.4, abs=1e-12)
    assert cert.certified
    # same coupling magnitude but negative sign: sharp branch unavailable
    cert2 = certify(_k3_game(QuadraticShockCost(LinearInteraction(0.6))), np.zeros(3))
    assert cert2.branch == "norm"
    assert cert2.margin == pytest.approx(-0.2, abs=1e-12)
    assert not cert2.certified


def test_norm_branch_on_asymmetric_network():
    W = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    game = GameSpec(network=Network(W), cost=CongestionToy(0.3),
                    sets=[PolyhedralSet.unconstrained(1)] * 3)
    cert = certify(game, np.zeros(3))
    assert cert.branch == "norm"
    assert cert.margin == pytest.approx(1.0 - 0.3 * np.linalg.norm(W, 2))


def test_margin_never_undercuts_true_jacobian():
    """The certified bound must lower-bound the actual symmetrized spectrum."""
    rng = np.random.default_rng(11)
    for _ in range(20):
        N = int(rng.integers(2, 6))
        W = rng.uniform(0.0, 1.0, size=(N, N))
        np.fill_diagonal(W, 0.0)
        W = 0.5 * (W + W.T)  # symmetric candidates exercise both branches
        gamma = float(rng.uniform(0.05, 0.45))
        game = GameSpec(network=Network(W),
                        cost=QuadraticShockCost(LinearInteraction(gamma)),
                        sets=[PolyhedralSet.unconstrained(1)] * N)
        cert = certify(game, np.zeros(N))
        J = game.operator_jacobian(np.zeros(N), np.zeros(N))
        lam_min = np.linalg.eigvalsh(0.5 * (J + J.T)).min()
        assert lam_min >= cert.margin - 1e-8
        assert cert.jacobian_min_eig >= cert.margin - 1e-8


def test_opinion_game_margin():
    """Doubly stochastic trust with theta = 1 gives margin 1/2 exactly."""
    P = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    game = GameSpec(network=Network(P), cost=FriedkinJohnsenCost(1.0),
                    sets=[PolyhedralSet.unconstrained(1)] * 3)
    cert = certify(game, np.zeros(3))
    assert cert.certified
    assert cert.margin == pytest.approx(0.5, abs=1e-12)


def test_self_loops_are_refused():
    W = np.array([[1.0, 1.0], [1.0, 0.0]])
    game = GameSpec(network=Network(W, allow_self_loops=True),
                    cost=QuadraticShockCost(LinearInteraction(0.1)),
                    sets=[PolyhedralSet.unconstrained(1)] * 2)
    with pytest.raises(UnsupportedRegimeError):
        certify(game, np.zeros(2))
    # the pointwise Jacobian check still applies
    assert direct_margin(game, np.zeros(2)) == pytest.approx(
        np.linalg.eigvalsh(
            0.5 * ((np.eye(2) - 0.1 * W) + (np.eye(2) - 0.1 * W).T)).min())


def test_sampled_mode_needs_box():
    game = _k3_game(CongestionToy(0.2))
    with pytest.raises(ConfigurationError):
        certify(game, np.zeros(3), mode="sampled")
    cert = certify(game, np.zeros(3), mode="sampled", box=(-2.0, 2.0), n_samples=16)
    assert cert.n_samples == 16
    assert cert.margin == pytest.approx(1.0 - 0.2, abs=1e-12)


def test_direct_margin_equals_certificate_for_constant_curvature():
    game = _k3_game(CongestionToy(0.6))
    # spectral certificate is sharp for identical players on a regular graph
    assert direct_margin(game, np.zeros(3)) == pytest.approx(0.4, abs=1e-12)
