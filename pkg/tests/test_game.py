import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqgame.errors import DimensionMismatch, NotStabilizable
from lqgame.game import (InitialStateModel, JointPolicy, LQGame, load_fixture,
                         pbh_stabilizable)


def two_player_game(A=None):
    if A is None:
        A = np.array([[0.5, 0.1], [0.0, 0.3]])
    return LQGame(
        A=A,
        B=(np.array([[1.0], [1.0]]), np.array([[0.0], [1.0]])),
        Q=(np.diag([0.01, 1.0]), np.diag([1.0, 0.147])),
        R=(np.array([[0.01]]), np.array([[0.01]])),
        init=InitialStateModel.from_atoms(
            (((1.0, 1.0), 0.5), ((1.0, 1.1), 0.5))),
    )


class TestPbh:
    def test_controllable_pair(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        B = np.array([[0.0], [1.0]])
        assert pbh_stabilizable(A, B)

    def test_unreachable_unstable_mode(self):
        # second state is unstable and the input never touches it
        A = np.diag([0.5, 2.0])
        B = np.array([[1.0], [0.0]])
        assert not pbh_stabilizable(A, B)

    def test_unreachable_stable_mode_is_fine(self):
        A = np.diag([0.5, 0.9])
        B = np.array([[1.0], [0.0]])
        assert pbh_stabilizable(A, B)

    def test_zero_input_stable_plant(self):
        assert pbh_stabilizable(np.diag([0.3, 0.4]), np.zeros((2, 1)))

    def test_zero_input_unstable_plant(self):
        assert not pbh_stabilizable(np.diag([0.3, 1.4]), np.zeros((2, 1)))


class TestInitialStateModel:
    def test_two_atom_covariance(self):
        init = InitialStateModel.from_atoms(
            (((1.0, 1.0), 0.5), ((1.0, 1.1), 0.5)))
        expected = np.array([[1.0, 1.05], [1.05, 1.105]])
        assert np.allclose(init.sigma0, expected, atol=1e-15)

    def test_single_atom(self):
        init = InitialStateModel.from_atoms((((2.0, 0.0), 1.0),))
        assert np.allclose(init.sigma0, [[4.0, 0.0], [0.0, 0.0]])

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ValueError):
            InitialStateModel.from_atoms((((1.0, 0.0), 0.4),))

    def test_negative_probability_rejected(self):
        with pytest.raises(ValueError):
            InitialStateModel.from_atoms(
                (((1.0, 0.0), -0.5), ((0.0, 1.0), 1.5)))

    def test_covariance_must_be_psd(self):
        with pytest.raises(ValueError):
            InitialStateModel.from_covariance(np.array([[1.0, 2.0],
                                                        [2.0, 1.0]]))


class TestLQGameValidation:
    def test_valid_game(self):
        g = two_player_game()
        assert g.N == 2 and g.m == 2 and g.d == (1, 1)
        assert g.total_input_dim == 2

    def test_nonsquare_A(self):
        g = two_player_game()
        with pytest.raises(DimensionMismatch):
            LQGame(A=np.zeros((2, 3)), B=g.B, Q=g.Q, R=g.R, init=g.init)

    def test_B_row_mismatch(self):
        g = two_player_game()
        with pytest.raises(DimensionMismatch):
            LQGame(A=g.A, B=(np.ones((3, 1)), g.B[1]), Q=g.Q, R=g.R,
                   init=g.init)

    def test_Q_not_psd(self):
        g = two_player_game()
        with pytest.raises(ValueError):
            LQGame(A=g.A, B=g.B, Q=(np.diag([1.0, -0.1]), g.Q[1]), R=g.R,
                   init=g.init)

    def test_R_not_pd(self):
        g = two_player_game()
        with pytest.raises(ValueError):
            LQGame(A=g.A, B=g.B, Q=g.Q, R=(np.zeros((1, 1)), g.R[1]),
                   init=g.init)

    def test_no_stabilizable_player(self):
        init = InitialStateModel.from_covariance(np.eye(2))
        with pytest.raises(NotStabilizable):
            LQGame(A=np.diag([2.0, 3.0]),
                   B=(np.zeros((2, 1)), np.zeros((2, 1))),
                   Q=(np.eye(2), np.eye(2)),
                   R=(np.eye(1), np.eye(1)), init=init)

    def test_arrays_frozen(self):
        g = two_player_game()
        with pytest.raises(ValueError):
            g.A[0, 0] = 9.0


class TestSerialization:
    def test_round_trip(self):
        g = two_player_game()
        g2 = LQGame.from_json(g.to_json())
        assert np.array_equal(g.A, g2.A)
        for i in range(g.N):
            assert np.array_equal(g.B[i], g2.B[i])
            assert np.array_equal(g.Q[i], g2.Q[i])
            assert np.array_equal(g.R[i], g2.R[i])
        assert np.array_equal(g.init.sigma0, g2.init.sigma0)

    def test_declared_dims_checked(self):
        doc = json.loads(two_player_game().to_json())
        doc["m"] = 3
        with pytest.raises((DimensionMismatch, ValueError)):
            LQGame.from_dict(doc)

    def test_fixture_games_load(self):
        for name in ("game_i", "game_ii"):
            g = load_fixture(name)
            assert g.N == 2 and g.m == 2 and g.d == (1, 1)
            assert np.allclose(g.init.sigma0,
                               [[1.0, 1.05], [1.05, 1.105]], atol=1e-15)

    def test_unknown_fixture(self):
        with pytest.raises(ValueError):
            load_fixture("no_such_game")


class TestJointPolicy:
    def test_stack_order_player_major_row_major(self):
        p = JointPolicy(K=(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]])))
        assert np.array_equal(p.stack(), [1.0, 2.0, 3.0, 4.0])

    def test_stack_order_multirow(self):
        p = JointPolicy(K=(np.array([[1.0, 2.0], [3.0, 4.0]]),
                           np.array([[5.0, 6.0]])))
        assert np.array_equal(p.stack(), [1, 2, 3, 4, 5, 6])

    def test_from_stack_inverse(self):
        p = JointPolicy(K=(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]])))
        q = JointPolicy.from_stack(p.stack(), p.shapes())
        for a, b in zip(p.K, q.K):
            assert np.array_equal(a, b)

    def test_from_stack_size_mismatch(self):
        with pytest.raises(DimensionMismatch):
            JointPolicy.from_stack(np.zeros(3), ((1, 2), (1, 2)))

    @given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
    @settings(max_examples=25, deadline=None)
    def test_stack_round_trip_property(self, vals):
        shapes = ((2, 2), (1, 2))
        x = np.array(vals)
        p = JointPolicy.from_stack(x, shapes)
        assert np.array_equal(p.stack(), x)
