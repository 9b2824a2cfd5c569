import numpy as np
import pytest

from lqgame.core import STABILITY_MARGIN, closed_loop, spectral_radius
from lqgame.game import JointPolicy, LQGame, load_fixture

# dynamics matrix of a sampled game whose Gauss-Seidel solve runs out
# of budget (gains drift without settling); used to exercise the
# NoConvergence paths deterministically
DIVERGING_A = np.array([
    [0.3035680343067586, 0.8487087496857769],
    [0.1561347780434731, 0.031106436954376093],
])


@pytest.fixture(scope="session")
def game_i() -> LQGame:
    return load_fixture("game_i")


@pytest.fixture(scope="session")
def game_ii() -> LQGame:
    return load_fixture("game_ii")


@pytest.fixture(scope="session")
def diverging_game(game_i) -> LQGame:
    return LQGame(A=DIVERGING_A, B=game_i.B, Q=game_i.Q,
                  R=(np.array([[0.01]]), np.array([[0.1]])),
                  init=game_i.init)


def random_stabilizing_policy(game: LQGame, rng, scale: float = 0.3,
                              max_tries: int = 1000) -> JointPolicy:
    """Rejection-sample a stabilizing joint policy."""
    for _ in range(max_tries):
        Ks = tuple(scale * rng.standard_normal((di, game.m)) for di in game.d)
        cand = JointPolicy(K=Ks)
        if spectral_radius(closed_loop(game, cand)) < 1.0 - STABILITY_MARGIN:
            return cand
    raise AssertionError("could not sample a stabilizing policy")
