"""Shared fixtures: small hand-checkable games used across the suite."""

import numpy as np
import pytest

from nagsens import (
    GameSpec,
    LinearInteraction,
    Network,
    PolyhedralSet,
    QuadraticGameSpec,
    QuadraticShockCost,
    SolverConfig,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def pair_spec():
    """Two players influencing each other with weight 1, slope 1/2.

    Walk-sum matrix is [[4/3, 2/3], [2/3, 4/3]] — small enough to check by
    hand, rich enough to exercise off-diagonal terms.
    """
    W = np.array([[0.0, 1.0], [1.0, 0.0]])
    return QuadraticGameSpec(weights=W, slope_bound=0.5)


@pytest.fixture
def chain_spec():
    """Three players on a path, slope 1/2; middle player is the key player."""
    W = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    return QuadraticGameSpec(weights=W, slope_bound=0.5)


@pytest.fixture
def solver_config():
    return SolverConfig(tol_res=1e-11)


def random_lq_game(rng, n_players=4, dim=1, coupling=0.15, constrained=True):
    """A random strongly monotone linear-quadratic game.

    Weights are dense nonnegative with zero diagonal, scaled so the
    norm-branch margin stays comfortably positive.  Strategy sets are
    either boxes through the origin or unconstrained.
    """
    W = rng.uniform(0.2, 1.0, size=(n_players, n_players))
    np.fill_diagonal(W, 0.0)
    W *= coupling / np.linalg.norm(W, 2)
    sets = []
    for _ in range(n_players):
        if constrained and rng.random() < 0.7:
            lo = rng.uniform(-0.5, 0.0, size=dim)
            hi = rng.uniform(0.3, 1.5, size=dim)
            B = np.vstack([np.eye(dim), -np.eye(dim)])
            b = np.concatenate([hi, -lo])
            sets.append(PolyhedralSet(dim=dim, B=B, b=b))
        else:
            sets.append(PolyhedralSet.unconstrained(dim))
    cost = QuadraticShockCost(LinearInteraction(1.0), n=dim)
    return GameSpec(network=Network(W), cost=cost, sets=sets)
