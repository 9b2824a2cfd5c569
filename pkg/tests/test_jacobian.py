import numpy as np
import pytest

from lqgame.errors import NumericalFailure, PerturbationDestabilizes
from lqgame.game import InitialStateModel, JointPolicy, LQGame
from lqgame.jacobian import (EquilibriumClass, SpectrumReport,
                             _check_conjugate_pairing, classify_equilibrium,
                             numerical_jacobian, spectrum)
from lqgame.nash import lyapunov_iterations, solve_dare


class TestSpectrumClassification:
    def test_all_positive_is_attracting(self):
        rep = spectrum(np.diag([1.0, 2.0]))
        assert rep.classification is EquilibriumClass.ATTRACTING
        assert rep.n_pos == 2 and rep.n_neg == 0 and rep.n_marginal == 0

    def test_all_negative_is_repelling(self):
        rep = spectrum(np.diag([-1.0, -2.0]))
        assert rep.classification is EquilibriumClass.REPELLING

    def test_mixed_is_strict_saddle(self):
        rep = spectrum(np.diag([1.0, -1.0]))
        assert rep.classification is EquilibriumClass.STRICT_SADDLE
        assert rep.n_pos == 1 and rep.n_neg == 1

    def test_near_zero_real_part_is_marginal(self):
        rep = spectrum(np.diag([1e-9, 1.0]))
        assert rep.classification is EquilibriumClass.MARGINAL
        assert rep.n_marginal == 1

    def test_tau_threshold_is_strict(self):
        rep = spectrum(np.diag([1e-4, 1.0]), tau=1e-6)
        assert rep.classification is EquilibriumClass.ATTRACTING
        rep = spectrum(np.diag([1e-8, 1.0]), tau=1e-6)
        assert rep.classification is EquilibriumClass.MARGINAL

    def test_complex_pair_uses_real_parts(self):
        # eigenvalues 0.1 +/- 1j: positive real parts despite rotation
        J = np.array([[0.1, 1.0], [-1.0, 0.1]])
        rep = spectrum(J)
        assert rep.classification is EquilibriumClass.ATTRACTING
        ims = sorted(e.imag for e in rep.eigenvalues)
        assert np.allclose(ims, [-1.0, 1.0])

    def test_saddle_with_complex_stable_pair(self):
        J = np.diag([5.0, 1.0, 0.0, 0.0]).astype(float)
        J[2:, 2:] = [[-0.01, 0.08], [-0.08, -0.01]]
        rep = spectrum(J)
        assert rep.classification is EquilibriumClass.STRICT_SADDLE
        assert rep.n_neg == 2 and rep.n_pos == 2

    def test_counts_conserved(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            J = rng.standard_normal((5, 5))
            rep = spectrum(J)
            assert rep.n_pos + rep.n_neg + rep.n_marginal == 5


class TestConjugatePairing:
    def test_paired_ok(self):
        _check_conjugate_pairing(np.array([1.0 + 2.0j, 1.0 - 2.0j, 3.0]))

    def test_unpaired_rejected(self):
        with pytest.raises(NumericalFailure):
            _check_conjugate_pairing(np.array([1.0 + 2.0j, 1.0 - 1.0j]))


class TestSerialization:
    def test_schema(self):
        rep = spectrum(np.diag([1.0, -2.0]), h=1e-5)
        doc = rep.to_dict()
        assert set(doc) == {"eigenvalues", "classification", "n_neg",
                            "n_pos", "n_marginal", "h", "tau"}
        assert doc["classification"] == "StrictSaddle"
        assert all(set(e) == {"re", "im"} for e in doc["eigenvalues"])
        assert doc["n_pos"] == 1 and doc["n_neg"] == 1


class TestNumericalJacobian:
    def test_central_difference_order(self, game_i):
        # halving h changes entries at O(h^2): estimates must agree
        cert = lyapunov_iterations(game_i)
        J1 = numerical_jacobian(game_i, cert.policy, h=1e-4)
        J2 = numerical_jacobian(game_i, cert.policy, h=5e-5)
        assert np.max(np.abs(J1 - J2)) < 1e-5 * (1 + np.max(np.abs(J1)))

    def test_perturbation_destabilizes(self):
        # closed loop sits just inside the stability margin, so the
        # finite-difference step crosses it
        a = 2.0
        game = LQGame(A=np.array([[a]]), B=(np.array([[1.0]]),),
                      Q=(np.array([[1.0]]),), R=(np.array([[1.0]]),),
                      init=InitialStateModel.from_covariance([[1.0]]))
        k = a - (1.0 - 2e-9)
        with pytest.raises(PerturbationDestabilizes) as err:
            numerical_jacobian(game, JointPolicy(K=(np.array([[k]]),)))
        assert err.value.coordinate == 0


class TestClassifyEquilibrium:
    def test_single_player_optimum_attracting(self):
        game = LQGame(A=np.array([[0.9, 0.2], [0.0, 0.7]]),
                      B=(np.array([[1.0], [0.4]]),),
                      Q=(np.eye(2),), R=(np.eye(1),),
                      init=InitialStateModel.from_covariance(np.eye(2)))
        cert = lyapunov_iterations(game)
        rep = classify_equilibrium(game, cert)
        assert rep.classification is EquilibriumClass.ATTRACTING

    def test_fixture_classifications(self, game_i, game_ii):
        rep_i = classify_equilibrium(game_i, lyapunov_iterations(game_i))
        assert rep_i.classification is EquilibriumClass.ATTRACTING
        rep_ii = classify_equilibrium(game_ii, lyapunov_iterations(game_ii))
        assert rep_ii.classification is EquilibriumClass.STRICT_SADDLE

    def test_requires_converged_certificate(self, game_i):
        cert = lyapunov_iterations(game_i)
        forged = type(cert)(policy=cert.policy, P=cert.P,
                            grad_norm=cert.grad_norm,
                            iterations=cert.iterations, converged=False,
                            per_player_dare_gap=cert.per_player_dare_gap)
        with pytest.raises(ValueError):
            classify_equilibrium(game_i, forged)

    def test_spectrum_stable_under_fd_step(self, game_ii):
        cert = lyapunov_iterations(game_ii)
        reps = [classify_equilibrium(game_ii, cert, h=h)
                for h in (1e-4, 1e-5, 1e-6)]
        base = np.sort([e.real for e in reps[0].eigenvalues])
        for rep in reps[1:]:
            vals = np.sort([e.real for e in rep.eigenvalues])
            assert np.allclose(vals, base, rtol=1e-4, atol=1e-8)
            assert rep.classification is reps[0].classification
