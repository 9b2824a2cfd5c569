"""Finite-difference Jacobian of the gradient field and equilibrium
classification by its eigen-spectrum.

Sign convention: omega is the stacked gradient itself (never negated),
and simultaneous gradient play iterates ``x <- x - gamma * omega(x)``.
Eigenvalues of D omega with positive real part are therefore the
locally stable directions of play, and the classes read:

    Attracting    all real parts > tau   (play converges locally)
    Repelling     all real parts < -tau  (play leaves in every direction)
    StrictSaddle  both signs present, none marginal (play almost surely
                  escapes along the negative-real-part directions)
    Marginal      any eigenvalue within tau of the imaginary axis

``tau`` guards against calling finite-difference noise a sign.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .core import omega_at
from .errors import NumericalFailure, PerturbationDestabilizes, UnstableSystem
from .game import JointPolicy, LQGame
from .nash import NashCertificate

__all__ = [
    "DEFAULT_H",
    "DEFAULT_TAU",
    "EquilibriumClass",
    "SpectrumReport",
    "numerical_jacobian",
    "spectrum",
    "classify_equilibrium",
]

DEFAULT_H = 1e-5
DEFAULT_TAU = 1e-6

# real Jacobians must have conjugate-paired complex eigenvalues
PAIRING_TOL = 1e-8


class EquilibriumClass(enum.Enum):
    STRICT_SADDLE = "StrictSaddle"
    ATTRACTING = "Attracting"
    REPELLING = "Repelling"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class SpectrumReport:
    """Eigen-spectrum of D omega at a critical point.

    ``n_neg``/``n_pos`` count real parts below -tau / above +tau;
    ``n_marginal`` the rest. The counts always sum to the dimension.
    """

    jacobian: np.ndarray
    eigenvalues: np.ndarray
    n_neg: int
    n_pos: int
    n_marginal: int
    classification: EquilibriumClass
    tau: float
    h: float | None = None

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [{"re": float(e.real), "im": float(e.imag)}
                            for e in self.eigenvalues],
            "classification": self.classification.value,
            "n_neg": self.n_neg,
            "n_pos": self.n_pos,
            "n_marginal": self.n_marginal,
            "h": self.h,
            "tau": self.tau,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def numerical_jacobian(game: LQGame, policy: JointPolicy,
                       h: float = DEFAULT_H) -> np.ndarray:
    """Central-difference Jacobian of omega at a stabilizing policy.

    Column j uses the coordinate-scaled step ``h * (1 + |x_j|)``. Raises
    :class:`PerturbationDestabilizes` if a probe point leaves the
    stabilizing set (retry with smaller h).
    """
    x = policy.stack()
    n = x.size
    J = np.empty((n, n))
    for j in range(n):
        hj = h * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += hj
        xm[j] -= hj
        try:
            wp = omega_at(game, xp)
            wm = omega_at(game, xm)
        except UnstableSystem as e:
            raise PerturbationDestabilizes(j, hj) from e
        J[:, j] = (wp - wm) / (2.0 * hj)
    return J


def _check_conjugate_pairing(ev: np.ndarray):
    complex_ev = sorted(
        (e for e in ev if abs(e.imag) > PAIRING_TOL),
        key=lambda e: (e.real, abs(e.imag), e.imag),
    )
    # sorted this way, conjugate partners land adjacent
    for a, b in zip(complex_ev[::2], complex_ev[1::2]):
        if abs(a - np.conj(b)) > PAIRING_TOL * (1.0 + abs(a)):
            raise NumericalFailure(
                f"complex eigenvalues {a} and {b} do not pair as conjugates"
            )
    if len(complex_ev) % 2:
        raise NumericalFailure("odd number of non-real eigenvalues")


def spectrum(J: np.ndarray, tau: float = DEFAULT_TAU,
             h: float | None = None) -> SpectrumReport:
    """Classify a real Jacobian by its eigenvalue real parts."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError(f"Jacobian must be square, got {J.shape}")
    try:
        ev = np.linalg.eigvals(J)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"eigensolver failed: {e}") from e
    _check_conjugate_pairing(ev)
    re = ev.real
    n_neg = int(np.sum(re < -tau))
    n_pos = int(np.sum(re > tau))
    n_marginal = len(ev) - n_neg - n_pos
    if n_marginal > 0:
        cls = EquilibriumClass.MARGINAL
    elif n_neg >= 1 and n_pos >= 1:
        cls = EquilibriumClass.STRICT_SADDLE
    elif n_neg == 0:
        cls = EquilibriumClass.ATTRACTING
    else:
        cls = EquilibriumClass.REPELLING
    return SpectrumReport(jacobian=J, eigenvalues=ev, n_neg=n_neg,
                          n_pos=n_pos, n_marginal=n_marginal,
                          classification=cls, tau=tau, h=h)


def classify_equilibrium(game: LQGame, cert: NashCertificate,
                         h: float = DEFAULT_H,
                         tau: float = DEFAULT_TAU) -> SpectrumReport:
    """Jacobian spectrum at a converged certificate's policy."""
    if not cert.converged:
        raise ValueError("certificate is not converged; classification "
                         "is only meaningful at a critical point")
    J = numerical_jacobian(game, cert.policy, h=h)
    return spectrum(J, tau=tau, h=h)
