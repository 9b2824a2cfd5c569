"""Exception hierarchy for the lqgame package.

Every error raised by the library derives from :class:`LQGameError`, so
callers can catch one base class. Solver failures carry enough context
(iteration counts, offending indices) to be tallied by the sweep harness
without re-running the solve.
"""


class LQGameError(Exception):
    """Base class for all lqgame errors."""


class DimensionMismatch(LQGameError):
    """Matrix dimensions of a game or policy are inconsistent."""


class NotStabilizable(LQGameError):
    """A required (A, B) pair fails the PBH stabilizability test."""


class UnstableSystem(LQGameError):
    """An operation requiring a stable closed loop was called with
    spectral radius >= 1 (within margin)."""

    def __init__(self, msg="closed loop is not stabilizing", radius=None):
        super().__init__(msg if radius is None else f"{msg} (rho={radius:.6g})")
        self.radius = radius


class SolveFailure(LQGameError):
    """A linear solve inside a Lyapunov/Riccati computation failed
    (singular or numerically unusable system)."""


class NoConvergence(LQGameError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, msg, iterations=None, last_delta=None):
        super().__init__(msg)
        self.iterations = iterations
        self.last_delta = last_delta


class DestabilizedDuringIteration(LQGameError):
    """A policy iterate left the stabilizing set mid-solve."""

    def __init__(self, iteration):
        super().__init__(f"iterate destabilized during sweep {iteration}")
        self.iteration = iteration


class PerturbationDestabilizes(LQGameError):
    """A finite-difference probe point is non-stabilizing; retry with a
    smaller step."""

    def __init__(self, coordinate, step):
        super().__init__(
            f"perturbation of coordinate {coordinate} by {step:.3g} "
            "destabilizes the closed loop; use a smaller h"
        )
        self.coordinate = coordinate
        self.step = step


class NumericalFailure(LQGameError):
    """An eigensolver or other numerical routine failed to converge."""
