"""Monte-Carlo counterexample search over a three-parameter family of
two-player games.

The family fixes B_1 = [1; 1], Q_1 = diag(0.01, 1), R_1 = 0.01 and
varies b (second player's input coupling, B_2 = [b; 1]), q (second
diagonal entry of Q_2), and r (R_2). Dynamics matrices are sampled
entrywise Uniform(0,1) and rejected until (A, B_1) is stabilizable.
Each sampled game is solved for Nash, its equilibrium classified by the
gradient-field Jacobian spectrum, and outcomes tallied per grid point.

Every game gets its own counter-based RNG substream keyed by
(seed, grid index, sample index), so results are independent of
evaluation order and grid points can run in separate processes.
Output files contain no timestamps: the same spec always produces
byte-identical artifacts.
"""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import (DestabilizedDuringIteration, LQGameError, NoConvergence,
                     NotStabilizable, NumericalFailure,
                     PerturbationDestabilizes)
from .game import InitialStateModel, LQGame, pbh_stabilizable
from .jacobian import classify_equilibrium
from .nash import lyapunov_iterations

__all__ = [
    "SweepSpec",
    "PointResult",
    "SweepResult",
    "sample_game",
    "run_point",
    "run_sweep",
    "summarize",
    "wilson_interval",
    "load_result",
]

PARAMS = ("b", "q", "r")
# z_0 is [1,1] or [1,1.1] with equal probability
INIT_ATOMS = (((1.0, 1.0), 0.5), ((1.0, 1.1), 0.5))

CSV_COLUMNS = ("param_value", "n", "strict_saddle", "attracting",
               "repelling", "marginal", "solve_failed", "freq",
               "ci_lo", "ci_hi")

OUTCOMES = ("strict_saddle", "attracting", "repelling", "marginal",
            "nash_solve_failed", "destabilized")

_CLASS_TO_OUTCOME = {
    "StrictSaddle": "strict_saddle",
    "Attracting": "attracting",
    "Repelling": "repelling",
    "Marginal": "marginal",
}


@dataclass(frozen=True)
class SweepSpec:
    varied_param: str
    grid: tuple
    fixed: dict
    n_samples: int
    seed: int
    out_path: str | None = None

    def __post_init__(self):
        if self.varied_param not in PARAMS:
            raise ValueError(f"varied_param must be one of {PARAMS}")
        if len(self.grid) == 0:
            raise ValueError("grid must be nonempty")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        others = [p for p in PARAMS if p != self.varied_param]
        missing = [p for p in others if p not in self.fixed]
        if missing:
            raise ValueError(f"fixed must supply {missing}")
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        object.__setattr__(
            self, "fixed", {p: float(self.fixed[p]) for p in others})

    def params_at(self, idx: int) -> dict:
        vals = dict(self.fixed)
        vals[self.varied_param] = self.grid[idx]
        return vals

    def to_dict(self) -> dict:
        return {
            "varied_param": self.varied_param,
            "grid": list(self.grid),
            "fixed": dict(self.fixed),
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PointResult:
    param_value: float
    n: int
    counts: dict
    saddles: tuple = ()
    failures: tuple = ()

    @property
    def freq(self) -> float:
        return self.counts["strict_saddle"] / self.n

    @property
    def ci(self) -> tuple:
        return wilson_interval(self.counts["strict_saddle"], self.n)

    def csv_row(self) -> list:
        c = self.counts
        lo, hi = self.ci
        return [self.param_value, self.n, c["strict_saddle"],
                c["attracting"], c["repelling"], c["marginal"],
                c["nash_solve_failed"] + c["destabilized"],
                self.freq, lo, hi]


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for pt in self.points:
            buf.write(",".join(_cell(v) for v in pt.csv_row()) + "\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "backend": _backend.backend_name,
            "sigma0": [[1.0, 1.05], [1.05, 1.105]],
            "points": [
                {
                    "param_value": pt.param_value,
                    "n": pt.n,
                    "counts": dict(pt.counts),
                    "freq": pt.freq,
                    "ci": list(pt.ci),
                    "failures": [dict(f) for f in pt.failures],
                    "n_counterexamples": len(pt.saddles),
                }
                for pt in self.points
            ],
        }

    def write(self, out_path) -> None:
        """CSV at out_path, JSON summary beside it, and one sidecar JSON
        per strict-saddle game under <stem>_counterexamples/."""
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(self.to_csv())
        out.with_suffix(".json").write_text(
            json.dumps(self.to_dict(), indent=2) + "\n")
        side = out.parent / (out.stem + "_counterexamples")
        for pt in self.points:
            for entry in pt.saddles:
                side.mkdir(parents=True, exist_ok=True)
                name = f"{pt.param_value:g}_{entry['sample_index']}.json"
                (side / name).write_text(json.dumps(entry, indent=2) + "\n")


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _substream(seed: int, grid_idx: int, sample_idx: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF,
                    ((grid_idx & 0xFFFFFFFF) << 32) | (sample_idx & 0xFFFFFFFF)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_game(b: float, q: float, r: float, rng: np.random.Generator) -> LQGame:
    """Draw one game from the search family.

    A is entrywise Uniform(0,1), resampled until (A, B_1) passes the
    stabilizability test; all other matrices are the fixed family
    values.
    """
    if q <= 0 or r <= 0:
        raise ValueError("q and r must be positive")
    B1 = np.array([[1.0], [1.0]])
    for _ in range(10_000):
        A = rng.uniform(0.0, 1.0, size=(2, 2))
        if pbh_stabilizable(A, B1):
            break
    else:
        raise NumericalFailure("could not sample a stabilizable A")
    return LQGame(
        A=A,
        B=(B1, np.array([[float(b)], [1.0]])),
        Q=(np.diag([0.01, 1.0]), np.diag([1.0, float(q)])),
        R=(np.array([[0.01]]), np.array([[float(r)]])),
        init=InitialStateModel.from_atoms(INIT_ATOMS),
    )


def _evaluate_game(game: LQGame):
    """(outcome, sidecar-or-None, reason-or-None) for one game."""
    try:
        cert = lyapunov_iterations(game)
    except DestabilizedDuringIteration:
        return "destabilized", None, "destabilized_during_iteration"
    except (NoConvergence, NotStabilizable) as exc:
        return "nash_solve_failed", None, type(exc).__name__
    try:
        report = classify_equilibrium(game, cert)
    except (PerturbationDestabilizes, NumericalFailure, LQGameError) as exc:
        return "nash_solve_failed", None, f"classification:{type(exc).__name__}"
    outcome = _CLASS_TO_OUTCOME[report.classification.value]
    sidecar = None
    if outcome == "strict_saddle":
        sidecar = {
            "game": game.to_dict(),
            "policy": cert.policy.to_dict(),
            "grad_norm": cert.grad_norm,
            "iterations": cert.iterations,
            "spectrum": report.to_dict(),
        }
    return outcome, sidecar, None


def run_point(spec: SweepSpec, grid_idx: int) -> PointResult:
    """Sample and evaluate all games of one grid point."""
    vals = spec.params_at(grid_idx)
    counts = {k: 0 for k in OUTCOMES}
    saddles = []
    failures = []
    for s in range(spec.n_samples):
        rng = _substream(spec.seed, grid_idx, s)
        game = sample_game(vals["b"], vals["q"], vals["r"], rng)
        outcome, sidecar, reason = _evaluate_game(game)
        counts[outcome] += 1
        if sidecar is not None:
            sidecar["sample_index"] = s
            sidecar["param"] = {"name": spec.varied_param,
                                "value": spec.grid[grid_idx]}
            saddles.append(sidecar)
        if reason is not None:
            failures.append({"sample_index": s, "reason": reason})
    return PointResult(param_value=spec.grid[grid_idx], n=spec.n_samples,
                       counts=counts, saddles=tuple(saddles),
                       failures=tuple(failures))


def _n_workers(n_points: int) -> int:
    env = os.environ.get("LQGAME_THREADS", "").strip()
    cap = int(env) if env else 1
    return max(1, min(cap, n_points))


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate every grid point; persist to spec.out_path when set.

    Grid points run in separate processes when LQGAME_THREADS exceeds
    one. Each game's RNG stream depends only on (seed, grid index,
    sample index), so the result is identical either way.
    """
    workers = _n_workers(len(spec.grid))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(run_point, [spec] * len(spec.grid),
                                   range(len(spec.grid))))
    else:
        points = [run_point(spec, g) for g in range(len(spec.grid))]
    result = SweepResult(spec=spec, points=tuple(points))
    if spec.out_path is not None:
        result.write(spec.out_path)
    return result


def load_result(path) -> SweepResult:
    """Rebuild a SweepResult from the JSON summary written by
    SweepResult.write (counterexample sidecars are not reloaded)."""
    data = json.loads(Path(path).read_text())
    spec = SweepSpec(out_path=None, **data["spec"])
    points = tuple(
        PointResult(param_value=p["param_value"], n=p["n"],
                    counts=dict(p["counts"]),
                    failures=tuple(p.get("failures", ())))
        for p in data["points"])
    return SweepResult(spec=spec, points=points)


def summarize(results) -> dict:
    """Frequency-vs-parameter table plus per-sweep mean frequency."""
    if not results:
        raise ValueError("no results to summarize")
    sweeps = []
    for res in results:
        rows = []
        for pt in res.points:
            lo, hi = pt.ci
            rows.append({"param_value": pt.param_value, "freq": pt.freq,
                         "ci_lo": lo, "ci_hi": hi})
        sweeps.append({
            "varied_param": res.spec.varied_param,
            "rows": rows,
            "mean_freq": sum(r["freq"] for r in rows) / len(rows),
        })
    return {"sweeps": sweeps}


def _cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)
