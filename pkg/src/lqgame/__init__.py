"""Discrete-time N-player general-sum LQ games.

Nash equilibria via coupled-Riccati Lyapunov iterations, exact
policy-gradient fields, equilibrium classification through the
gradient-field Jacobian spectrum, simultaneous gradient-play
simulation with limit-cycle detection, and a Monte-Carlo
counterexample-search harness.
"""

from ._backend import backend_name
from .core import (STABILITY_MARGIN, TOL_LYAP, Cost, closed_loop, cost,
                   gradient_field, is_stabilizing, omega_at, solve_bellman,
                   solve_discrete_lyapunov, spectral_radius, state_covariance)
from .errors import (DestabilizedDuringIteration, DimensionMismatch,
                     LQGameError, NoConvergence, NotStabilizable,
                     NumericalFailure, PerturbationDestabilizes, SolveFailure,
                     UnstableSystem)
from .game import (InitialStateModel, JointPolicy, LQGame, load_fixture,
                   pbh_stabilizable)
from .harness import (PointResult, SweepResult, SweepSpec, load_result,
                      run_point, run_sweep, sample_game, summarize,
                      wilson_interval)
from .jacobian import (EquilibriumClass, SpectrumReport, classify_equilibrium,
                       numerical_jacobian, spectrum)
from .nash import (MAX_SWEEPS, TOL_NASH, NashCertificate, auto_initial_policy,
                   best_response, lyapunov_iterations, multi_init_diagnostic,
                   solve_dare, sweep_once, verify_nash)
from .pgsim import (TOL_CRITICAL, CycleReport, SimConfig, SimStatus,
                    SimTrajectory, detect_cycle, pg_step, sample_near,
                    simulate, time_average, write_trajectory_csv)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    # core
    "STABILITY_MARGIN", "TOL_LYAP", "Cost", "closed_loop", "cost",
    "gradient_field", "is_stabilizing", "omega_at", "solve_bellman",
    "solve_discrete_lyapunov", "spectral_radius", "state_covariance",
    # errors
    "LQGameError", "DimensionMismatch", "NotStabilizable", "UnstableSystem",
    "SolveFailure", "NoConvergence", "DestabilizedDuringIteration",
    "PerturbationDestabilizes", "NumericalFailure",
    # game types
    "InitialStateModel", "JointPolicy", "LQGame", "load_fixture",
    "pbh_stabilizable",
    # nash
    "MAX_SWEEPS", "TOL_NASH", "NashCertificate", "auto_initial_policy",
    "best_response", "lyapunov_iterations", "multi_init_diagnostic",
    "solve_dare", "sweep_once", "verify_nash",
    # jacobian
    "EquilibriumClass", "SpectrumReport", "classify_equilibrium",
    "numerical_jacobian", "spectrum",
    # pgsim
    "TOL_CRITICAL", "CycleReport", "SimConfig", "SimStatus", "SimTrajectory",
    "detect_cycle", "pg_step", "sample_near", "simulate", "time_average",
    "write_trajectory_csv",
    # harness
    "PointResult", "SweepResult", "SweepSpec", "load_result", "run_point",
    "run_sweep", "sample_game", "summarize", "wilson_interval",
]
