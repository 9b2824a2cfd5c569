"""Nash equilibrium computation by Lyapunov iterations on the coupled
Riccati equations, plus certification utilities.

The solver runs Gauss-Seidel sweeps in ascending player order: player i
gets its Bellman value matrix under the current joint policy from a
discrete Lyapunov solve, then its gain from the Riccati best-response
formula against the other players' current gains. A certificate is
``converged`` only when both the last gain increment and the gradient
norm fall below ``TOL_NASH``, so converged certificates are always
critical points of the gradient field.

Convergence is not guaranteed for every game; equilibria at which the
sweep map is locally expanding are unreachable by this iteration and
surface as :class:`~lqgame.errors.NoConvergence`. Callers that sample
game families should tally those outcomes separately (the sweep harness
does).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import (STABILITY_MARGIN, closed_loop, cost, gradient_field,
                   solve_bellman, solve_discrete_lyapunov, spectral_radius)
from .errors import (DestabilizedDuringIteration, NoConvergence,
                     NotStabilizable, UnstableSystem)
from .game import JointPolicy, LQGame, pbh_stabilizable

__all__ = [
    "TOL_NASH",
    "MAX_SWEEPS",
    "NashCertificate",
    "solve_dare",
    "best_response",
    "auto_initial_policy",
    "sweep_once",
    "lyapunov_iterations",
    "verify_nash",
    "multi_init_diagnostic",
]

TOL_NASH = 1e-9
MAX_SWEEPS = 10_000

DARE_TOL = 1e-12
DARE_MAX_ITER = 100_000


@dataclass(frozen=True)
class NashCertificate:
    """Result of a Nash solve.

    ``converged`` implies ``grad_norm < TOL_NASH`` and a stabilizing
    closed loop; ``per_player_dare_gap[i]`` is the distance of K_i from
    the exact best response to the other players' gains.
    """

    policy: JointPolicy
    P: tuple
    grad_norm: float
    iterations: int
    converged: bool
    per_player_dare_gap: tuple

    def to_dict(self) -> dict:
        return {
            "K": [k.tolist() for k in self.policy.K],
            "P": [p.tolist() for p in self.P],
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "per_player_dare_gap": list(self.per_player_dare_gap),
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @staticmethod
    def from_dict(doc: dict) -> "NashCertificate":
        return NashCertificate(
            policy=JointPolicy(K=tuple(np.asarray(k, float) for k in doc["K"])),
            P=tuple(np.asarray(p, float) for p in doc["P"]),
            grad_norm=float(doc["grad_norm"]),
            iterations=int(doc["iterations"]),
            converged=bool(doc["converged"]),
            per_player_dare_gap=tuple(doc.get("per_player_dare_gap", ())),
        )


def solve_dare(A, B, Q, R, tol: float = DARE_TOL, max_iter: int = DARE_MAX_ITER):
    """Solve the discrete algebraic Riccati equation by fixed-point
    iteration of the Riccati map starting from P = Q. Stops when the
    step ``max|dP|`` falls below ``tol`` relative to the iterate scale.

    Returns
    -------
    (P, K) : value matrix and the optimal gain (R + B'PB)^-1 B'PA.

    Raises
    ------
    NotStabilizable
        If (A, B) fails the PBH test.
    NoConvergence
        If the iteration budget is exhausted.
    SolveFailure
        If the converged P fails the residual check.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    Q = np.asarray(Q, float)
    R = np.asarray(R, float)
    if not pbh_stabilizable(A, B):
        raise NotStabilizable("(A, B) is not stabilizable")
    if A.shape == (2, 2) and B.shape == (2, 1):
        ok, P, K, _ = _backend.kernels.dare2(A, B, Q, R, tol, max_iter)
        if not ok:
            raise NoConvergence("DARE fixed point did not converge",
                                iterations=max_iter)
    else:
        P = Q.copy()
        for it in range(max_iter):
            BtP = B.T @ P
            G = np.linalg.solve(R + BtP @ B, BtP @ A)
            Pn = A.T @ P @ A - (BtP @ A).T @ G + Q
            Pn = 0.5 * (Pn + Pn.T)
            delta = float(np.max(np.abs(Pn - P)))
            P = Pn
            if delta < tol * (1.0 + float(np.max(np.abs(P)))):
                break
        else:
            raise NoConvergence("DARE fixed point did not converge",
                                iterations=max_iter, last_delta=delta)
        K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    _check_dare_residual(A, B, Q, R, P)
    return P, K


def _check_dare_residual(A, B, Q, R, P):
    from .errors import SolveFailure

    BtP = B.T @ P
    resid = A.T @ P @ A - (BtP @ A).T @ np.linalg.solve(R + BtP @ B, BtP @ A) + Q - P
    r = float(np.max(np.abs(resid)))
    if not np.isfinite(r) or r > 1e-10 * (1.0 + float(np.max(np.abs(P)))):
        raise SolveFailure(f"DARE residual {r:.3g} exceeds tolerance")


def best_response(game: LQGame, policy: JointPolicy, i: int):
    """Exact best response of player i to the other players' gains.

    Player i faces the single-player problem with dynamics
    A_{-i} = A - sum_{j != i} B_j K_j.

    Returns (K_i, P_i) from :func:`solve_dare`.
    """
    A_minus = game.A.copy()
    for j in range(game.N):
        if j != i:
            A_minus -= game.B[j] @ policy.K[j]
    P, K = solve_dare(A_minus, game.B[i], game.Q[i], game.R[i])
    return K, P


def auto_initial_policy(game: LQGame) -> JointPolicy:
    """Stabilizing start: the lowest-index player with a stabilizable
    (A, B_i) pair gets its single-player DARE gain, all others zero."""
    i = game.stabilizable_players[0]
    Ks = [np.zeros((di, game.m)) for di in game.d]
    _, Ks[i] = solve_dare(game.A, game.B[i], game.Q[i], game.R[i])
    return JointPolicy(K=tuple(Ks))


def sweep_once(game: LQGame, policy: JointPolicy):
    """One Gauss-Seidel sweep (ascending player order).

    Returns (updated policy, max gain increment). Raises UnstableSystem
    if an intermediate closed loop leaves the stability margin.
    """
    Ks = [k.copy() for k in policy.K]
    delta = 0.0
    for i in range(game.N):
        Abar = game.A - sum(b @ k for b, k in zip(game.B, Ks))
        rho = spectral_radius(Abar)
        if rho >= 1.0 - STABILITY_MARGIN:
            raise UnstableSystem(radius=rho)
        Ki = Ks[i]
        P = solve_discrete_lyapunov(Abar.T, Ki.T @ game.R[i] @ Ki + game.Q[i])
        Ai = Abar + game.B[i] @ Ki
        Kn = np.linalg.solve(game.R[i] + game.B[i].T @ P @ game.B[i],
                             game.B[i].T @ P @ Ai)
        delta = max(delta, float(np.max(np.abs(Kn - Ki))))
        Ks[i] = Kn
    return JointPolicy(K=tuple(Ks)), delta


def _certificate(game, policy, grad_norm, iterations, converged):
    P = tuple(solve_bellman(game, policy, i) for i in range(game.N))
    gaps = []
    for i in range(game.N):
        Kbr, _ = best_response(game, policy, i)
        gaps.append(float(np.max(np.abs(policy.K[i] - Kbr))))
    return NashCertificate(policy=policy, P=P, grad_norm=float(grad_norm),
                           iterations=int(iterations), converged=converged,
                           per_player_dare_gap=tuple(gaps))


def lyapunov_iterations(game: LQGame, initial: JointPolicy | None = None,
                        tol: float = TOL_NASH,
                        max_iter: int = MAX_SWEEPS) -> NashCertificate:
    """Solve for a feedback Nash equilibrium by Lyapunov iterations.

    Parameters
    ----------
    game : LQGame
    initial : JointPolicy, optional
        Stabilizing starting policy; defaults to
        :func:`auto_initial_policy`.

    Raises
    ------
    DestabilizedDuringIteration
        If an iterate leaves the stabilizing set (carries the sweep
        index).
    NoConvergence
        If ``max_iter`` sweeps do not reach the tolerance.
    """
    if initial is None:
        initial = auto_initial_policy(game)
    stable = spectral_radius(closed_loop(game, initial)) < 1.0 - STABILITY_MARGIN
    if not stable:
        raise UnstableSystem("initial policy is not stabilizing")

    if _backend.eligible(game):
        status, sweeps, k, gn, last_delta = _backend.kernels.gs_solve2(
            *_backend.game_args(game), initial.stack(), tol, max_iter)
        if status == 2:
            raise DestabilizedDuringIteration(sweeps)
        policy = JointPolicy.from_stack(k, [(1, 2), (1, 2)])
        if status == 1:
            raise NoConvergence(
                f"no convergence after {sweeps} sweeps "
                f"(last delta {last_delta:.3g}, grad norm {gn:.3g})",
                iterations=sweeps, last_delta=last_delta)
        return _certificate(game, policy, gn, sweeps, True)

    policy = initial
    for sweep in range(1, max_iter + 1):
        try:
            policy, delta = sweep_once(game, policy)
        except UnstableSystem as e:
            raise DestabilizedDuringIteration(sweep) from e
        if delta < tol:
            w, _ = gradient_field(game, policy)
            gn = float(np.max(np.abs(w)))
            if gn < tol:
                return _certificate(game, policy, gn, sweep, True)
    raise NoConvergence(f"no convergence after {max_iter} sweeps",
                        iterations=max_iter, last_delta=delta)


def verify_nash(game: LQGame, policy: JointPolicy, n_probes: int = 20,
                eps: float = 1e-3, seed: int = 0) -> dict:
    """Check a policy against the equilibrium conditions.

    Reports the gradient norm, per-player best-response gaps, and a
    directional probe: the largest one-sided cost improvement
    ``f_i(K) - f_i(K with K_i + eps*delta)`` over ``n_probes`` random
    unit perturbations per player. At a Nash point no perturbation can
    improve, so the probe stays at or below numerical noise.
    """
    stable = spectral_radius(closed_loop(game, policy)) < 1.0 - STABILITY_MARGIN
    if not stable:
        raise UnstableSystem("policy is not stabilizing")
    w, _ = gradient_field(game, policy)
    grad_norm = float(np.max(np.abs(w)))
    gaps = []
    for i in range(game.N):
        try:
            Kbr, _ = best_response(game, policy, i)
            gaps.append(float(np.max(np.abs(policy.K[i] - Kbr))))
        except (NotStabilizable, NoConvergence):
            gaps.append(float("nan"))
    rng = np.random.default_rng(seed)
    probe = -np.inf
    for i in range(game.N):
        base = cost(game, policy, i).unwrap()
        for _ in range(n_probes):
            d = rng.standard_normal(policy.K[i].shape)
            d /= np.linalg.norm(d)
            Ks = list(policy.K)
            Ks[i] = policy.K[i] + eps * d
            c = cost(game, JointPolicy(K=tuple(Ks)), i)
            if c.finite:
                probe = max(probe, base - c.value)
    return {
        "grad_norm": grad_norm,
        "dare_gaps": gaps,
        "is_critical": grad_norm < 1e-6,
        "directional_probe": float(probe),
    }


def multi_init_diagnostic(game: LQGame, n_inits: int = 20, seed: int = 0,
                          scale: float = 0.1) -> dict:
    """Probe equilibrium uniqueness by solving from randomized starts.

    Perturbs the auto initial policy by Gaussian noise (retrying until
    stabilizing), runs the solver from each start, and clusters the
    converged gains at 1e-6 resolution. ``multi_equilibrium`` flags more
    than one cluster; non-convergent starts are only counted.
    """
    rng = np.random.default_rng(seed)
    base = auto_initial_policy(game)
    reps: list[np.ndarray] = []
    n_converged = 0
    n_failed = 0
    for _ in range(n_inits):
        init = None
        for _try in range(100):
            Ks = tuple(k + scale * rng.standard_normal(k.shape) for k in base.K)
            cand = JointPolicy(K=Ks)
            if spectral_radius(closed_loop(game, cand)) < 1.0 - STABILITY_MARGIN:
                init = cand
                break
        if init is None:
            n_failed += 1
            continue
        try:
            cert = lyapunov_iterations(game, init)
        except (NoConvergence, DestabilizedDuringIteration):
            n_failed += 1
            continue
        n_converged += 1
        x = cert.policy.stack()
        if all(np.max(np.abs(x - r)) > 1e-6 for r in reps):
            reps.append(x)
    return {
        "n_converged": n_converged,
        "n_failed": n_failed,
        "n_distinct": len(reps),
        "multi_equilibrium": len(reps) > 1,
        "representatives": reps,
    }
