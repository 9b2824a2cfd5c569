"""Closed-loop analysis, Lyapunov/Bellman solvers, costs, and the exact
policy-gradient field.

All solvers here are direct (dense Kronecker linear systems), exact to
machine precision at the small state dimensions this package targets.
The gradient field ``omega`` stacks every player's gradient of their own
cost with respect to their own gain; its zeros over the stabilizing set
are exactly the Nash equilibria.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SolveFailure, UnstableSystem
from .game import JointPolicy, LQGame

__all__ = [
    "STABILITY_MARGIN",
    "closed_loop",
    "spectral_radius",
    "is_stabilizing",
    "solve_discrete_lyapunov",
    "state_covariance",
    "solve_bellman",
    "Cost",
    "cost",
    "gradient_field",
    "omega_at",
]

# rho(Abar) must stay below 1 - margin for Lyapunov solves to be trusted
STABILITY_MARGIN = 1e-9

TOL_LYAP = 1e-9


def closed_loop(game: LQGame, policy: JointPolicy) -> np.ndarray:
    """Return Abar = A - sum_i B_i K_i."""
    if len(policy.K) != game.N or any(
        K.shape != (B.shape[1], game.m) for B, K in zip(game.B, policy.K)
    ):
        raise DimensionMismatch(
            f"policy shapes {[k.shape for k in policy.K]} do not fit game "
            f"(N={game.N}, m={game.m}, d={game.d})"
        )
    A = game.A.copy()
    for B, K in zip(game.B, policy.K):
        A -= B @ K
    return A


def spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def is_stabilizing(game: LQGame, policy: JointPolicy):
    """Whether the joint policy stabilizes the closed loop.

    Returns
    -------
    (stable, radius) : (bool, float)
        ``stable`` is ``rho(Abar) < 1 - STABILITY_MARGIN``.
    """
    rho = spectral_radius(closed_loop(game, policy))
    return rho < 1.0 - STABILITY_MARGIN, rho


def solve_discrete_lyapunov(F: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Solve X = F X F' + W for symmetric X, given rho(F) < 1.

    Uses the Kronecker vectorization (F (x) F - I) vec(X) = -vec(W) and a
    dense solve; the result is symmetrized and residual-checked against
    ``TOL_LYAP * (1 + ||X||_F)``.
    """
    F = np.asarray(F, dtype=float)
    W = np.asarray(W, dtype=float)
    m = F.shape[0]
    rho = spectral_radius(F)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise UnstableSystem("Lyapunov equation requires rho(F) < 1", radius=rho)
    M = np.kron(F, F) - np.eye(m * m)
    try:
        x = np.linalg.solve(M, -W.reshape(-1))
    except np.linalg.LinAlgError as e:
        raise SolveFailure(f"Lyapunov linear system solve failed: {e}") from e
    X = x.reshape(m, m)
    X = 0.5 * (X + X.T)
    resid = np.linalg.norm(F @ X @ F.T + W - X)
    if not np.isfinite(resid) or resid > TOL_LYAP * (1.0 + np.linalg.norm(X)):
        raise SolveFailure(
            f"Lyapunov residual {resid:.3g} exceeds tolerance; "
            f"system is too ill-conditioned (rho={rho:.6g})"
        )
    return X


def state_covariance(game: LQGame, policy: JointPolicy) -> np.ndarray:
    """Steady-state second moment Sigma_K solving
    Abar Sigma Abar' + Sigma_0 = Sigma."""
    return solve_discrete_lyapunov(closed_loop(game, policy), game.init.sigma0)


def solve_bellman(game: LQGame, policy: JointPolicy, i: int) -> np.ndarray:
    """Player i's value matrix P_i = Abar' P_i Abar + K_i'R_iK_i + Q_i."""
    Abar = closed_loop(game, policy)
    K = policy.K[i]
    return solve_discrete_lyapunov(Abar.T, K.T @ game.R[i] @ K + game.Q[i])


@dataclass(frozen=True)
class Cost:
    """Cost of a joint policy for one player.

    ``finite`` is False when the policy does not stabilize; ``value`` is
    then None (never an inf/NaN that could leak into arithmetic).
    """

    finite: bool
    value: float | None

    def unwrap(self) -> float:
        if not self.finite:
            raise UnstableSystem("cost is not finite for this policy")
        return self.value


def cost(game: LQGame, policy: JointPolicy, i: int) -> Cost:
    """tr(P_i Sigma_0) for a stabilizing policy; a NonFinite variant
    otherwise. Never raises on a destabilizing policy."""
    stable, _ = is_stabilizing(game, policy)
    if not stable:
        return Cost(finite=False, value=None)
    P = solve_bellman(game, policy, i)
    return Cost(finite=True, value=float(np.trace(P @ game.init.sigma0)))


def gradient_field(game: LQGame, policy: JointPolicy):
    """Exact policy-gradient field at a stabilizing joint policy.

    Player i's gradient of its own cost with respect to K_i is

        D_i = 2 (R_i K_i - B_i' P_i Abar) Sigma_K,

    with P_i the Bellman value matrix and Sigma_K the steady-state
    second moment.

    Returns
    -------
    (omega, grads) : (ndarray, list of ndarray)
        ``omega`` is the stacked vector (player-major, row-major);
        ``grads[i]`` is the d_i x m gradient matrix.
    """
    Abar = closed_loop(game, policy)
    rho = spectral_radius(Abar)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise UnstableSystem(radius=rho)
    Sigma = solve_discrete_lyapunov(Abar, game.init.sigma0)
    grads = []
    for i in range(game.N):
        K = policy.K[i]
        P = solve_discrete_lyapunov(Abar.T, K.T @ game.R[i] @ K + game.Q[i])
        grads.append(2.0 * (game.R[i] @ K - game.B[i].T @ P @ Abar) @ Sigma)
    omega = np.concatenate([g.ravel() for g in grads])
    return omega, grads


def omega_at(game: LQGame, x: np.ndarray) -> np.ndarray:
    """Gradient field evaluated at a stacked policy vector (fast path
    when the compiled kernels apply)."""
    from . import _backend

    w = _backend.omega_stacked(game, np.asarray(x, dtype=float))
    if w is None:
        shapes = [(di, game.m) for di in game.d]
        w, _ = gradient_field(game, JointPolicy.from_stack(x, shapes))
    return w
