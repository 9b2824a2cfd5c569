"""Backend selection: compiled kernels when available, pure python
otherwise.

The compiled extension accelerates the two-player / two-state /
scalar-input shape that dominates sweeps and long simulations. Set
``LQGAME_FORCE_PY=1`` to force the pure-python kernels (used by the
benchmark script and as an escape hatch).
"""

import os

from . import _kernels_py

py_kernels = _kernels_py
c_kernels = None

if not os.environ.get("LQGAME_FORCE_PY"):
    try:
        from . import _speedups as c_kernels  # type: ignore
    except ImportError:
        c_kernels = None

kernels = c_kernels if c_kernels is not None else py_kernels
backend_name = "c" if c_kernels is not None else "python"


def eligible(game) -> bool:
    """Whether the fast-path kernels apply to this game shape."""
    return game.N == 2 and game.m == 2 and game.d == (1, 1)


def game_args(game):
    """Unpack the kernel argument tuple (A, B1, B2, Q1, Q2, R1, R2, S0)."""
    return (game.A, game.B[0], game.B[1], game.Q[0], game.Q[1],
            game.R[0], game.R[1], game.init.sigma0)


def omega_stacked(game, x):
    """Fast gradient-field evaluation; None if the game is not eligible
    or the closed loop is unstable (caller decides how to handle)."""
    if not eligible(game):
        return None
    ok, w, _, _ = kernels.omega2(*game_args(game), x)
    return w if ok else None
