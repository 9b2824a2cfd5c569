"""Simultaneous policy-gradient play: simulation, recurrence detection,
and time-averaged strategies.

All players update at once, every gradient evaluated at the pre-update
point:

    K_i <- K_i - gamma_i * D_i f_i(K_1, ..., K_N).

Runs are bitwise deterministic given the same game, initial policy, and
configuration. Destabilization mid-run is an experimental outcome (a
recorded status), not an error; the destabilizing iterate itself is
never recorded, so every recorded row has finite costs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import (STABILITY_MARGIN, closed_loop, gradient_field,
                   solve_discrete_lyapunov, spectral_radius)
from .errors import UnstableSystem
from .game import JointPolicy, LQGame

__all__ = [
    "TOL_CRITICAL",
    "SimConfig",
    "SimStatus",
    "SimTrajectory",
    "CycleReport",
    "pg_step",
    "sample_near",
    "simulate",
    "time_average",
    "detect_cycle",
    "write_trajectory_csv",
]

# ||omega||_inf below this counts as having reached a critical point
TOL_CRITICAL = 1e-10


@dataclass(frozen=True)
class SimConfig:
    step_sizes: tuple
    max_iters: int
    record_every: int = 1
    init_radius: float = 0.0
    seed: int = 0
    stop_on_destabilize: bool = True

    def __post_init__(self):
        if any(g <= 0 for g in self.step_sizes):
            raise ValueError("step sizes must be positive")
        if self.max_iters < 1 or self.record_every < 1:
            raise ValueError("max_iters and record_every must be >= 1")
        object.__setattr__(self, "step_sizes", tuple(float(g) for g in self.step_sizes))

    def to_dict(self) -> dict:
        return {
            "step_sizes": list(self.step_sizes),
            "max_iters": self.max_iters,
            "record_every": self.record_every,
            "init_radius": self.init_radius,
            "seed": self.seed,
            "stop_on_destabilize": self.stop_on_destabilize,
        }


@dataclass(frozen=True)
class SimStatus:
    """One of Completed, ConvergedToCritical, or Destabilized (with the
    index of the first non-stabilizing iterate)."""

    kind: str
    destabilized_at: int | None = None

    def __str__(self):
        if self.kind == "Destabilized":
            return f"Destabilized({self.destabilized_at})"
        return self.kind


@dataclass(frozen=True)
class SimTrajectory:
    """Recorded gradient-play run.

    ``iterates`` holds stacked policy vectors, one row per recorded
    iteration; rows cover every ``record_every``-th iterate plus the
    final stabilizing one.
    """

    iters: np.ndarray
    iterates: np.ndarray
    costs: np.ndarray
    grad_norms: np.ndarray
    status: SimStatus
    final: np.ndarray
    n_steps: int
    record_every: int
    shapes: tuple

    def policy(self, row: int) -> JointPolicy:
        return JointPolicy.from_stack(self.iterates[row], self.shapes)

    def final_policy(self) -> JointPolicy:
        return JointPolicy.from_stack(self.final, self.shapes)

    def __len__(self):
        return self.iterates.shape[0]


@dataclass(frozen=True)
class CycleReport:
    is_recurrent: bool
    period_estimate: int | None
    amplitude: float
    eps_rec: float = 0.0
    n_returns: int = 0
    n_points: int = 0

    def to_dict(self) -> dict:
        return {
            "is_recurrent": self.is_recurrent,
            "period_estimate": self.period_estimate,
            "amplitude": self.amplitude,
            "eps_rec": self.eps_rec,
            "n_returns": self.n_returns,
            "n_points": self.n_points,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def pg_step(game: LQGame, policy: JointPolicy, step_sizes) -> JointPolicy:
    """One simultaneous gradient step; raises UnstableSystem if the
    input policy does not stabilize."""
    _, grads = gradient_field(game, policy)
    Ks = tuple(K - g * D for K, g, D in zip(policy.K, step_sizes, grads))
    return JointPolicy(K=Ks)


def sample_near(policy: JointPolicy, radius: float, seed) -> JointPolicy:
    """Uniform sample from the Euclidean ball of the given radius around
    the stacked policy vector.

    Gaussian direction, radius scaled by U^(1/dim): exactly uniform in
    the ball. ``seed`` may be an int or a numpy Generator.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = policy.stack()
    dim = x.size
    direction = rng.standard_normal(dim)
    nrm = np.linalg.norm(direction)
    if nrm == 0.0 or radius == 0.0:
        return JointPolicy.from_stack(x, policy.shapes())
    r = radius * rng.uniform() ** (1.0 / dim)
    return JointPolicy.from_stack(x + r * direction / nrm, policy.shapes())


def _eval_state(game, policy):
    """(omega, grads, per-player costs) with one set of solves."""
    Abar = closed_loop(game, policy)
    rho = spectral_radius(Abar)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise UnstableSystem(radius=rho)
    Sigma = solve_discrete_lyapunov(Abar, game.init.sigma0)
    grads, costs = [], []
    S0 = game.init.sigma0
    for i in range(game.N):
        K = policy.K[i]
        P = solve_discrete_lyapunov(Abar.T, K.T @ game.R[i] @ K + game.Q[i])
        grads.append(2.0 * (game.R[i] @ K - game.B[i].T @ P @ Abar) @ Sigma)
        costs.append(float(np.trace(P @ S0)))
    w = np.concatenate([g.ravel() for g in grads])
    return w, grads, costs


def simulate(game: LQGame, init: JointPolicy, cfg: SimConfig) -> SimTrajectory:
    """Run gradient play from a stabilizing initial policy.

    Stops at ``max_iters`` (Completed), when the gradient norm falls
    below TOL_CRITICAL (ConvergedToCritical), or when an iterate leaves
    the stabilizing set (Destabilized, unless
    ``cfg.stop_on_destabilize`` is False, in which case UnstableSystem
    is raised instead).
    """
    if len(cfg.step_sizes) != game.N:
        raise ValueError(f"need {game.N} step sizes, got {len(cfg.step_sizes)}")
    rho0 = spectral_radius(closed_loop(game, init))
    if rho0 >= 1.0 - STABILITY_MARGIN:
        raise UnstableSystem("initial policy is not stabilizing", radius=rho0)
    shapes = tuple((di, game.m) for di in game.d)
    n_max = cfg.max_iters // cfg.record_every + 2
    md = sum(di * game.m for di in game.d)
    rec_it = np.zeros(n_max, dtype=np.int64)
    rec_k = np.zeros((n_max, md))
    rec_f = np.zeros((n_max, game.N))
    rec_g = np.zeros(n_max)

    if _backend.eligible(game):
        status_code, n_rec, n_done, k_final = _backend.kernels.simulate2(
            *_backend.game_args(game), init.stack(),
            cfg.step_sizes[0], cfg.step_sizes[1],
            cfg.max_iters, cfg.record_every, TOL_CRITICAL,
            rec_it, rec_k, rec_f, rec_g)
    else:
        status_code, n_rec, n_done, k_final = _simulate_generic(
            game, init, cfg, rec_it, rec_k, rec_f, rec_g)

    if status_code == 2:
        if not cfg.stop_on_destabilize:
            raise UnstableSystem(f"iterate {n_done} destabilized")
        status = SimStatus("Destabilized", destabilized_at=n_done)
    elif status_code == 1:
        status = SimStatus("ConvergedToCritical")
    else:
        status = SimStatus("Completed")
    return SimTrajectory(
        iters=rec_it[:n_rec].copy(), iterates=rec_k[:n_rec].copy(),
        costs=rec_f[:n_rec].copy(), grad_norms=rec_g[:n_rec].copy(),
        status=status, final=np.asarray(k_final, float),
        n_steps=n_done, record_every=cfg.record_every, shapes=shapes)


def _simulate_generic(game, init, cfg, rec_it, rec_k, rec_f, rec_g):
    """Python loop for shapes outside the compiled fast path."""
    policy = init
    prev = init
    prev_vals = None
    prev_recorded = False
    n_rec = 0
    n = 0
    gammas = cfg.step_sizes
    while True:
        try:
            w, grads, costs = _eval_state(game, policy)
        except UnstableSystem:
            if n > 0 and not prev_recorded:
                pw, _, pcosts = prev_vals
                rec_it[n_rec] = n - 1
                rec_k[n_rec] = prev.stack()
                rec_f[n_rec] = pcosts
                rec_g[n_rec] = float(np.max(np.abs(pw)))
                n_rec += 1
            return 2, n_rec, n, prev.stack()
        gn = float(np.max(np.abs(w)))
        recorded = False
        if n % cfg.record_every == 0:
            rec_it[n_rec] = n
            rec_k[n_rec] = policy.stack()
            rec_f[n_rec] = costs
            rec_g[n_rec] = gn
            n_rec += 1
            recorded = True
        if gn < TOL_CRITICAL:
            status = 1
        elif n >= cfg.max_iters:
            status = 0
        else:
            prev = policy
            prev_vals = (w, grads, costs)
            prev_recorded = recorded
            policy = JointPolicy(K=tuple(
                K - g * D for K, g, D in zip(policy.K, gammas, grads)))
            n += 1
            continue
        if not recorded:
            rec_it[n_rec] = n
            rec_k[n_rec] = policy.stack()
            rec_f[n_rec] = costs
            rec_g[n_rec] = gn
            n_rec += 1
        return status, n_rec, n, policy.stack()


def time_average(traj: SimTrajectory, burn_in: int = 0) -> np.ndarray:
    """Running mean of the stacked iterates after discarding the first
    ``burn_in`` recorded rows.

    Row t of the result is the mean of recorded iterates
    burn_in .. burn_in + t.
    """
    X = np.asarray(traj.iterates if isinstance(traj, SimTrajectory) else traj)
    if burn_in >= X.shape[0]:
        raise ValueError("burn-in leaves an empty averaging window")
    tail = X[burn_in:]
    return np.cumsum(tail, axis=0) / np.arange(1, tail.shape[0] + 1)[:, None]


def write_trajectory_csv(traj: SimTrajectory, path, config: dict) -> None:
    """Trajectory CSV: '#'-prefixed JSON config lines, then one row per
    recorded iterate with columns iter, K{player}_{entry}, f_1..f_N,
    grad_norm."""
    n_players = len(traj.shapes)
    cols = ["iter"]
    for i, (di, m) in enumerate(traj.shapes):
        cols += [f"K{i + 1}_{j}" for j in range(di * m)]
    cols += [f"f_{i + 1}" for i in range(n_players)]
    cols.append("grad_norm")
    lines = ["# " + json.dumps(config, sort_keys=True), ",".join(cols)]
    for t in range(len(traj)):
        row = [str(int(traj.iters[t]))]
        row += [repr(float(v)) for v in traj.iterates[t]]
        row += [repr(float(v)) for v in traj.costs[t]]
        row.append(repr(float(traj.grad_norms[t])))
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _return_gaps(X: np.ndarray, eps: float):
    """For each point, the gap (in rows) until the trajectory first
    re-enters its eps-ball after having left it. NaN when no return."""
    n = X.shape[0]
    gaps = []
    for t in range(n - 2):
        d = np.linalg.norm(X[t + 1:] - X[t], axis=1)
        outside = np.nonzero(d > eps)[0]
        if outside.size == 0:
            continue
        first_out = outside[0]
        back = np.nonzero(d[first_out:] <= eps)[0]
        if back.size == 0:
            continue
        gaps.append(first_out + back[0] + 1)
    return np.array(gaps, dtype=int)


def detect_cycle(traj, burn_in: int | None = None,
                 eps_rec: float | None = None,
                 max_points: int = 2000) -> CycleReport:
    """Recurrence-based limit-cycle detector.

    Works on the post-burn-in recorded segment. A point "returns" when
    the trajectory leaves its eps-neighborhood and later re-enters it;
    the period estimate is the modal return gap (converted to iteration
    units). ``is_recurrent`` additionally requires the segment's
    amplitude (max pairwise distance) to exceed 10x eps, which rules
    out plain convergence to a point.

    Defaults: burn_in is half the recorded length; eps_rec is 1e-3
    times the bounding-box diagonal of the segment. Segments longer
    than ``max_points`` are strided down before the quadratic pairwise
    scan, which coarsens the period estimate to stride resolution.
    """
    if isinstance(traj, SimTrajectory):
        X = traj.iterates
        record_every = traj.record_every
    else:
        X = np.asarray(traj, dtype=float)
        record_every = 1
    if X.ndim != 2 or X.shape[0] < 3:
        return CycleReport(False, None, 0.0)
    if burn_in is None:
        burn_in = X.shape[0] // 2
    seg = X[burn_in:]
    if seg.shape[0] < 3:
        raise ValueError("burn-in leaves fewer than 3 recorded points")
    stride = max(1, -(-seg.shape[0] // max_points))
    seg = seg[::stride]
    record_every = record_every * stride
    span = seg.max(axis=0) - seg.min(axis=0)
    diag = float(np.linalg.norm(span))
    if eps_rec is None:
        eps_rec = 1e-3 * diag
    if diag == 0.0 or eps_rec <= 0.0:
        return CycleReport(False, None, 0.0, eps_rec=float(eps_rec),
                           n_points=seg.shape[0])

    # amplitude: max pairwise distance, chunked to bound memory
    amp = 0.0
    chunk = max(1, 2_000_000 // max(seg.shape[0], 1))
    for s in range(0, seg.shape[0], chunk):
        block = seg[s:s + chunk]
        d = np.linalg.norm(block[:, None, :] - seg[None, :, :], axis=2)
        amp = max(amp, float(d.max()))

    gaps = _return_gaps(seg, eps_rec)
    n_returns = int(gaps.size)
    period = None
    if n_returns:
        period = int(np.bincount(gaps).argmax()) * record_every
    is_rec = (amp > 10.0 * eps_rec
              and n_returns >= max(3, seg.shape[0] // 2))
    return CycleReport(is_recurrent=bool(is_rec), period_estimate=period,
                       amplitude=amp, eps_rec=float(eps_rec),
                       n_returns=n_returns, n_points=int(seg.shape[0]))
