"""Game description types: dynamics, costs, initial-state model, policies.

An :class:`LQGame` is the immutable description of an N-player
discrete-time linear-quadratic game

    z(t+1) = A z(t) + sum_i B_i u_i(t),        u_i(t) = -K_i z(t),

where player ``i`` pays ``E[sum_t z'Q_i z + u_i'R_i u_i]`` for an initial
state drawn from the distribution captured by :class:`InitialStateModel`.
A :class:`JointPolicy` is the tuple of feedback gains ``(K_1, ..., K_N)``,
exposable as a single stacked vector.

Stacking order (used everywhere a policy, gradient, or Jacobian axis is
vectorized): player-major, row-major within each ``K_i``. So for two
players with 1x2 gains the vector is
``[K1[0,0], K1[0,1], K2[0,0], K2[0,1]]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotStabilizable

__all__ = [
    "InitialStateModel",
    "LQGame",
    "JointPolicy",
    "pbh_stabilizable",
    "load_fixture",
]

_SYM_TOL = 1e-10


def pbh_stabilizable(A: np.ndarray, B: np.ndarray, rank_tol: float = 1e-10) -> bool:
    """PBH test: (A, B) is stabilizable iff rank [lam*I - A, B] = m for
    every eigenvalue lam of A with |lam| >= 1.

    Parameters
    ----------
    A : (m, m) ndarray
    B : (m, d) ndarray
    rank_tol : float
        Rank tolerance, scaled by ``max(1, ||A||)``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    m = A.shape[0]
    tol = rank_tol * max(1.0, float(np.linalg.norm(A)))
    for lam in np.linalg.eigvals(A):
        if abs(lam) >= 1.0:
            M = np.hstack([lam * np.eye(m) - A, B.astype(complex)])
            if np.linalg.matrix_rank(M, tol) < m:
                return False
    return True


def _as_sym(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {M.shape}")
    if np.max(np.abs(M - M.T)) > _SYM_TOL * (1.0 + np.max(np.abs(M))):
        raise DimensionMismatch(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class InitialStateModel:
    """Second-moment model of the random initial state.

    Either a list of ``(state, probability)`` atoms or an explicit
    covariance. ``sigma0`` is always the resulting second moment
    ``E[z0 z0']``; when atoms are given it is their probability-weighted
    sum of outer products.
    """

    sigma0: np.ndarray
    atoms: tuple | None = None

    @staticmethod
    def from_atoms(atoms) -> "InitialStateModel":
        """Build from ``[(z, p), ...]`` pairs. Probabilities must be
        nonnegative and sum to 1 within 1e-12."""
        zs = [np.asarray(z, dtype=float).ravel() for z, _ in atoms]
        ps = np.array([float(p) for _, p in atoms])
        if np.any(ps < 0):
            raise ValueError("atom probabilities must be nonnegative")
        if abs(ps.sum() - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {ps.sum()}, not 1")
        m = zs[0].size
        if any(z.size != m for z in zs):
            raise DimensionMismatch("atoms have inconsistent state dimension")
        sigma0 = sum(p * np.outer(z, z) for z, p in zip(zs, ps))
        return InitialStateModel(
            sigma0=0.5 * (sigma0 + sigma0.T),
            atoms=tuple((z.copy(), p) for z, p in zip(zs, ps)),
        )

    @staticmethod
    def from_covariance(sigma0) -> "InitialStateModel":
        sigma0 = _as_sym(sigma0, "sigma0")
        # PSD check (small negative eigenvalues from rounding rejected too)
        if np.min(np.linalg.eigvalsh(sigma0)) < -1e-10 * (1 + np.max(np.abs(sigma0))):
            raise ValueError("sigma0 must be positive semidefinite")
        return InitialStateModel(sigma0=sigma0)

    @property
    def m(self) -> int:
        return self.sigma0.shape[0]


@dataclass(frozen=True)
class LQGame:
    """Immutable N-player LQ game description.

    Construction validates dimensions, symmetry and positive
    definiteness of every Q_i and R_i, and that at least one (A, B_i)
    pair is stabilizable. All arrays are copied and set read-only.
    """

    A: np.ndarray
    B: tuple
    Q: tuple
    R: tuple
    init: InitialStateModel
    stabilizable_players: tuple = field(init=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        m = A.shape[0]
        Bs = tuple(np.array(b, dtype=float) for b in self.B)
        if len(Bs) == 0:
            raise DimensionMismatch("need at least one player")
        for i, b in enumerate(Bs):
            if b.ndim != 2 or b.shape[0] != m:
                raise DimensionMismatch(f"B[{i}] must be {m}xd, got {b.shape}")
        Qs = tuple(_as_sym(q, f"Q[{i}]") for i, q in enumerate(self.Q))
        Rs = tuple(_as_sym(r, f"R[{i}]") for i, r in enumerate(self.R))
        if not (len(Qs) == len(Rs) == len(Bs)):
            raise DimensionMismatch("B, Q, R must all have N entries")
        for i, (q, r, b) in enumerate(zip(Qs, Rs, Bs)):
            if q.shape != (m, m):
                raise DimensionMismatch(f"Q[{i}] must be {m}x{m}")
            if r.shape != (b.shape[1], b.shape[1]):
                raise DimensionMismatch(f"R[{i}] must be {b.shape[1]}x{b.shape[1]}")
            if np.min(np.linalg.eigvalsh(q)) <= 0:
                raise ValueError(f"Q[{i}] must be positive definite")
            if np.min(np.linalg.eigvalsh(r)) <= 0:
                raise ValueError(f"R[{i}] must be positive definite")
        if self.init.m != m:
            raise DimensionMismatch("initial-state model dimension != m")
        stab = tuple(i for i, b in enumerate(Bs) if pbh_stabilizable(A, b))
        if not stab:
            raise NotStabilizable("no player has a stabilizable (A, B_i) pair")
        for arr in (A, *Bs, *Qs, *Rs):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", Bs)
        object.__setattr__(self, "Q", Qs)
        object.__setattr__(self, "R", Rs)
        object.__setattr__(self, "stabilizable_players", stab)

    @property
    def m(self) -> int:
        """State dimension."""
        return self.A.shape[0]

    @property
    def N(self) -> int:
        """Number of players."""
        return len(self.B)

    @property
    def d(self) -> tuple:
        """Input dimensions (d_1, ..., d_N)."""
        return tuple(b.shape[1] for b in self.B)

    @property
    def total_input_dim(self) -> int:
        return sum(self.d)

    # -- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        init: dict
        if self.init.atoms is not None:
            init = {"atoms": [{"z": z.tolist(), "p": p} for z, p in self.init.atoms]}
        else:
            init = {"sigma0": self.init.sigma0.tolist()}
        return {
            "m": self.m,
            "N": self.N,
            "d": list(self.d),
            "A": self.A.tolist(),
            "B": [b.tolist() for b in self.B],
            "Q": [q.tolist() for q in self.Q],
            "R": [r.tolist() for r in self.R],
            "init": init,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @staticmethod
    def from_dict(doc: dict) -> "LQGame":
        init_doc = doc["init"]
        if "atoms" in init_doc:
            init = InitialStateModel.from_atoms(
                [(a["z"], a["p"]) for a in init_doc["atoms"]]
            )
        else:
            init = InitialStateModel.from_covariance(init_doc["sigma0"])
        game = LQGame(
            A=doc["A"], B=tuple(doc["B"]), Q=tuple(doc["Q"]), R=tuple(doc["R"]),
            init=init,
        )
        if "m" in doc and doc["m"] != game.m:
            raise DimensionMismatch("declared m does not match A")
        if "N" in doc and doc["N"] != game.N:
            raise DimensionMismatch("declared N does not match B")
        if "d" in doc and tuple(doc["d"]) != game.d:
            raise DimensionMismatch("declared d does not match B")
        return game

    @staticmethod
    def from_json(text: str) -> "LQGame":
        return LQGame.from_dict(json.loads(text))


@dataclass(frozen=True)
class JointPolicy:
    """The point x = (K_1, ..., K_N) in joint strategy space."""

    K: tuple

    def __post_init__(self):
        Ks = tuple(np.array(k, dtype=float) for k in self.K)
        for k in Ks:
            if k.ndim != 2:
                raise DimensionMismatch("each K_i must be a 2-D gain matrix")
            k.setflags(write=False)
        object.__setattr__(self, "K", Ks)

    def stack(self) -> np.ndarray:
        """Vectorize player-major, row-major within each K_i."""
        return np.concatenate([k.ravel() for k in self.K])

    @staticmethod
    def from_stack(x: np.ndarray, shapes) -> "JointPolicy":
        """Inverse of :meth:`stack` given per-player (d_i, m) shapes."""
        x = np.asarray(x, dtype=float).ravel()
        need = sum(di * m for (di, m) in shapes)
        if x.size != need:
            raise DimensionMismatch(
                f"stacked vector has {x.size} entries, shapes need {need}"
            )
        Ks, off = [], 0
        for (di, m) in shapes:
            Ks.append(x[off:off + di * m].reshape(di, m))
            off += di * m
        return JointPolicy(K=tuple(Ks))

    @staticmethod
    def zeros(game: LQGame) -> "JointPolicy":
        return JointPolicy(K=tuple(np.zeros((di, game.m)) for di in game.d))

    def shapes(self):
        return tuple(k.shape for k in self.K)

    def to_dict(self) -> dict:
        return {"K": [k.tolist() for k in self.K]}

    @staticmethod
    def from_dict(doc: dict) -> "JointPolicy":
        return JointPolicy(K=tuple(np.asarray(k, dtype=float) for k in doc["K"]))


def load_fixture(name: str) -> LQGame:
    """Load one of the bundled example games ('game_i' or 'game_ii')."""
    from importlib import resources

    ref = resources.files(__package__).joinpath("fixtures", f"{name}.json")
    try:
        text = ref.read_text()
    except FileNotFoundError:
        raise ValueError(f"no bundled fixture named {name!r}")
    return LQGame.from_json(text)
