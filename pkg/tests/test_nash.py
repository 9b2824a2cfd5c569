import json

import numpy as np
import pytest

from conftest import random_stabilizing_policy
from lqgame.core import closed_loop, cost, spectral_radius
from lqgame.errors import NoConvergence, NotStabilizable
from lqgame.game import InitialStateModel, JointPolicy, LQGame
from lqgame.nash import (NashCertificate, auto_initial_policy, best_response,
                         lyapunov_iterations, multi_init_diagnostic,
                         solve_dare, sweep_once, verify_nash)

scipy_linalg = pytest.importorskip("scipy.linalg")

# converged joint gains for the bundled games, frozen from a verified
# solve (gradient norm < 1e-9, best-response gaps < 1e-9)
NASH_GAINS = {
    "game_i": [0.5133586879929051, 0.04394791789806055,
               0.05247433711429862, 0.011406438707853588],
    "game_ii": [0.47172772040596245, 0.3840473915711588,
                0.0571215384714482, 0.6006837979401355],
}


class TestSolveDare:
    def test_scalar_closed_form(self):
        # P solves the scalar Riccati quadratic
        # b^2 P^2 + (r - b^2 q - a^2 r) P - q r = 0 (take the + root)
        a, b, q, r = 0.9, 1.0, 1.0, 0.5
        roots = np.roots([b * b, r - b * b * q - a * a * r, -q * r])
        expected = max(roots)
        P, K = solve_dare(np.array([[a]]), np.array([[b]]),
                          np.array([[q]]), np.array([[r]]))
        assert abs(P[0, 0] - expected) < 1e-10

    def test_matches_scipy(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            A = rng.standard_normal((2, 2))
            B = rng.standard_normal((2, 1))
            Q = np.diag(rng.uniform(0.1, 2.0, 2))
            R = np.array([[rng.uniform(0.1, 2.0)]])
            try:
                P, K = solve_dare(A, B, Q, R)
            except NotStabilizable:
                continue
            Ps = scipy_linalg.solve_discrete_are(A, B, Q, R)
            assert np.allclose(P, Ps, rtol=1e-8, atol=1e-10)
            Ks = np.linalg.solve(R + B.T @ Ps @ B, B.T @ Ps @ A)
            assert np.allclose(K, Ks, rtol=1e-8, atol=1e-10)

    def test_closed_loop_stable(self):
        A = np.array([[1.2, 0.3], [0.0, 0.8]])
        B = np.array([[1.0], [0.5]])
        P, K = solve_dare(A, B, np.eye(2), np.eye(1))
        assert spectral_radius(A - B @ K) < 1.0

    def test_not_stabilizable_raises(self):
        with pytest.raises(NotStabilizable):
            solve_dare(np.diag([2.0, 0.5]), np.array([[0.0], [1.0]]),
                       np.eye(2), np.eye(1))


class TestBestResponse:
    def test_is_single_player_optimum(self, game_i):
        rng = np.random.default_rng(2)
        p = random_stabilizing_policy(game_i, rng)
        for i in range(2):
            Kbr, P = best_response(game_i, p, i)
            Ks = list(p.K)
            Ks[i] = Kbr
            br_cost = cost(game_i, JointPolicy(K=tuple(Ks)), i).unwrap()
            # no sampled alternative for player i does better
            for _ in range(30):
                Ka = Kbr + 0.1 * rng.standard_normal(Kbr.shape)
                Ks[i] = Ka
                c = cost(game_i, JointPolicy(K=tuple(Ks)), i)
                if c.finite:
                    assert c.value >= br_cost - 1e-9

    def test_fixed_point_at_nash(self, game_i):
        cert = lyapunov_iterations(game_i)
        for i in range(2):
            Kbr, _ = best_response(game_i, cert.policy, i)
            assert np.max(np.abs(Kbr - cert.policy.K[i])) < 1e-6


class TestAutoInitialPolicy:
    def test_stabilizing(self, game_i, game_ii, diverging_game):
        for g in (game_i, game_ii, diverging_game):
            p = auto_initial_policy(g)
            assert spectral_radius(closed_loop(g, p)) < 1.0

    def test_single_player_gets_dare_gain(self):
        g = LQGame(A=np.array([[1.5]]), B=(np.array([[1.0]]),),
                   Q=(np.array([[1.0]]),), R=(np.array([[1.0]]),),
                   init=InitialStateModel.from_covariance([[1.0]]))
        p = auto_initial_policy(g)
        _, K = solve_dare(g.A, g.B[0], g.Q[0], g.R[0])
        assert np.allclose(p.K[0], K)


class TestLyapunovIterations:
    def test_fixture_gains(self, game_i, game_ii):
        for g, name in ((game_i, "game_i"), (game_ii, "game_ii")):
            cert = lyapunov_iterations(g)
            assert cert.converged
            assert np.allclose(cert.policy.stack(), NASH_GAINS[name],
                               rtol=1e-6, atol=1e-9)

    def test_certificate_invariants(self, game_i):
        cert = lyapunov_iterations(game_i)
        assert cert.grad_norm < 1e-9
        assert all(g < 1e-6 for g in cert.per_player_dare_gap)
        assert cert.iterations > 0
        assert len(cert.P) == 2
        for P in cert.P:
            assert np.allclose(P, P.T)

    def test_no_convergence_raises(self, diverging_game):
        with pytest.raises(NoConvergence) as exc_info:
            lyapunov_iterations(diverging_game)
        assert exc_info.value.iterations == 10_000

    def test_non_stabilizing_initial_rejected(self, game_i):
        bad = JointPolicy(K=(np.array([[-5.0, -5.0]]),
                             np.array([[0.0, 0.0]])))
        with pytest.raises(Exception):
            lyapunov_iterations(game_i, initial=bad)

    def test_single_player_reduces_to_dare(self):
        g = LQGame(A=np.array([[0.9, 0.2], [0.1, 1.1]]),
                   B=(np.array([[1.0], [0.3]]),),
                   Q=(np.eye(2),), R=(np.eye(1),),
                   init=InitialStateModel.from_covariance(np.eye(2)))
        cert = lyapunov_iterations(g)
        _, K = solve_dare(g.A, g.B[0], g.Q[0], g.R[0])
        assert np.allclose(cert.policy.K[0], K, rtol=1e-8, atol=1e-10)

    def test_backend_agrees_with_generic_path(self, game_i, monkeypatch):
        cert_fast = lyapunov_iterations(game_i)
        from lqgame import _backend
        monkeypatch.setattr(_backend, "eligible", lambda game: False)
        cert_slow = lyapunov_iterations(game_i)
        assert cert_slow.iterations == cert_fast.iterations
        assert np.allclose(cert_fast.policy.stack(),
                           cert_slow.policy.stack(), rtol=1e-9, atol=1e-12)


class TestSweepOnce:
    def test_contracts_near_fixture_equilibrium(self, game_i):
        cert = lyapunov_iterations(game_i)
        p = JointPolicy(K=tuple(k + 1e-4 for k in cert.policy.K))
        nash = cert.policy.stack()
        d0 = np.max(np.abs(p.stack() - nash))
        for _ in range(5):
            p, delta = sweep_once(game_i, p)
        assert np.max(np.abs(p.stack() - nash)) < d0

    def test_delta_reports_largest_change(self, game_i):
        p0 = auto_initial_policy(game_i)
        p1, delta = sweep_once(game_i, p0)
        measured = max(np.max(np.abs(a - b)) for a, b in zip(p0.K, p1.K))
        assert abs(delta - measured) < 1e-12


class TestVerifyNash:
    def test_at_equilibrium(self, game_i):
        cert = lyapunov_iterations(game_i)
        rep = verify_nash(game_i, cert.policy, seed=0)
        assert rep["is_critical"]
        assert rep["grad_norm"] < 1e-6
        assert all(g < 1e-6 for g in rep["dare_gaps"])
        assert rep["directional_probe"] <= 1e-8

    def test_away_from_equilibrium(self, game_i):
        p = auto_initial_policy(game_i)
        rep = verify_nash(game_i, p, seed=0)
        assert not rep["is_critical"]
        assert rep["directional_probe"] > 1e-6


class TestCertificateSerialization:
    def test_round_trip(self, game_ii):
        cert = lyapunov_iterations(game_ii)
        doc = json.loads(cert.to_json())
        back = NashCertificate.from_dict(doc)
        assert np.allclose(back.policy.stack(), cert.policy.stack())
        assert back.converged == cert.converged
        assert back.grad_norm == cert.grad_norm
        for P1, P2 in zip(back.P, cert.P):
            assert np.allclose(P1, P2)


class TestMultiInit:
    def test_fixture_has_unique_equilibrium(self, game_i):
        diag = multi_init_diagnostic(game_i, n_inits=10, seed=1)
        assert diag["n_converged"] >= 8
        assert diag["n_distinct"] == 1
        assert not diag["multi_equilibrium"]
