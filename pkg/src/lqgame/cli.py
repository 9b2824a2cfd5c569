"""Command-line front end.

Subcommands: nash, classify, simulate, sweep, verify, export.
Exit codes: 0 success, 1 input error, 2 solver non-convergence,
3 invalid experiment precondition.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _backend, harness
from .errors import (DestabilizedDuringIteration, LQGameError, NoConvergence,
                     PerturbationDestabilizes, UnstableSystem)
from .game import JointPolicy, LQGame
from .jacobian import classify_equilibrium
from .nash import NashCertificate, lyapunov_iterations, verify_nash
from .pgsim import (SimConfig, detect_cycle, sample_near, simulate,
                    time_average, write_trajectory_csv)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_PRECONDITION = 3


class _CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load_game(path) -> LQGame:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _CliError(EXIT_INPUT, f"cannot read {path}: {exc}")
    try:
        return LQGame.from_json(text)
    except (ValueError, KeyError, TypeError, LQGameError) as exc:
        raise _CliError(EXIT_INPUT, f"invalid game file {path}: {exc}")


def _load_certificate(path) -> NashCertificate:
    try:
        data = json.loads(Path(path).read_text())
        return NashCertificate.from_dict(data)
    except OSError as exc:
        raise _CliError(EXIT_INPUT, f"cannot read {path}: {exc}")
    except (ValueError, KeyError, TypeError) as exc:
        raise _CliError(EXIT_INPUT, f"invalid certificate file {path}: {exc}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"))


def _solve(game) -> NashCertificate:
    try:
        return lyapunov_iterations(game)
    except (NoConvergence, DestabilizedDuringIteration) as exc:
        raise _CliError(EXIT_NO_CONVERGENCE, f"Nash solve failed: {exc}")
    except LQGameError as exc:
        raise _CliError(EXIT_INPUT, str(exc))


def cmd_nash(args) -> int:
    game = _load_game(args.game)
    cert = _solve(game)
    _emit(cert.to_json(), args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    game = _load_game(args.game)
    if args.cert is not None:
        cert = _load_certificate(args.cert)
    else:
        cert = _solve(game)
    try:
        report = classify_equilibrium(game, cert, h=args.fd_step, tau=args.tau)
    except PerturbationDestabilizes as exc:
        raise _CliError(EXIT_PRECONDITION, f"cannot classify: {exc}")
    out = report.to_dict()
    out["grad_norm"] = cert.grad_norm
    _emit(json.dumps(out, indent=2), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    game = _load_game(args.game)
    cert = _load_certificate(args.cert)
    report = verify_nash(game, cert.policy, seed=args.seed)
    _emit(json.dumps(report, indent=2), args.out)
    ok = report["is_critical"] and report["directional_probe"] <= 1e-8
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def cmd_simulate(args) -> int:
    game = _load_game(args.game)
    if args.init_from_certificate is not None:
        center = _load_certificate(args.init_from_certificate).policy
    else:
        center = _solve(game).policy

    gammas = list(args.gamma)
    if len(gammas) == 1:
        gammas = gammas * game.N
    if len(gammas) != game.N:
        raise _CliError(EXIT_INPUT,
                        f"--gamma takes 1 or {game.N} values, got {len(gammas)}")
    init = sample_near(center, args.init_radius, args.seed)
    cfg = SimConfig(step_sizes=tuple(gammas), max_iters=args.iters,
                    record_every=args.record_every,
                    init_radius=args.init_radius, seed=args.seed)
    try:
        traj = simulate(game, init, cfg)
    except UnstableSystem:
        print("sampled initial policy is not stabilizing", file=sys.stderr)
        return EXIT_PRECONDITION

    config_echo = {
        "game": str(args.game),
        "step_sizes": gammas,
        "max_iters": args.iters,
        "record_every": args.record_every,
        "init_radius": args.init_radius,
        "seed": args.seed,
        "init": [float(v) for v in init.stack()],
        "backend": _backend.backend_name,
    }
    if args.out is not None:
        write_trajectory_csv(traj, args.out, config_echo)

    report = detect_cycle(traj).to_dict()
    report["status"] = str(traj.status)
    report["n_steps"] = traj.n_steps
    c = center.stack()
    report["dist_start"] = float(np.linalg.norm(init.stack() - c))
    report["dist_end"] = float(np.linalg.norm(traj.final - c))
    if len(traj) > 1:
        avg = time_average(traj, burn_in=len(traj) // 2)
        report["dist_time_avg"] = float(np.linalg.norm(avg[-1] - c))
    _emit(json.dumps(report, indent=2), args.cycle_out)
    return EXIT_OK


def _parse_grid(text: str) -> list:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise _CliError(EXIT_INPUT, "grid range must be start:step:stop")
        a, s, b = (float(p) for p in parts)
        if s <= 0:
            raise _CliError(EXIT_INPUT, "grid step must be positive")
        n = int(round((b - a) / s)) + 1
        return [a + k * s for k in range(n) if a + k * s <= b + 1e-9]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise _CliError(EXIT_INPUT, f"bad grid: {exc}")


def cmd_sweep(args) -> int:
    fixed = {}
    defaults = {"b": 0.0, "q": 0.01, "r": 0.1}
    for p in harness.PARAMS:
        given = getattr(args, p)
        if p == args.param:
            if given is not None:
                raise _CliError(
                    EXIT_INPUT, f"--{p} conflicts with --param {p}")
            continue
        fixed[p] = defaults[p] if given is None else given
    try:
        spec = harness.SweepSpec(
            varied_param=args.param, grid=tuple(_parse_grid(args.grid)),
            fixed=fixed, n_samples=args.n, seed=args.seed,
            out_path=args.out)
    except ValueError as exc:
        raise _CliError(EXIT_INPUT, str(exc))
    result = harness.run_sweep(spec)
    print(f"{'param':>12} {'n':>6} {'strict_saddle':>14} "
          f"{'freq':>8} {'ci_lo':>8} {'ci_hi':>8}")
    for pt in result.points:
        lo, hi = pt.ci
        print(f"{pt.param_value:>12g} {pt.n:>6d} "
              f"{pt.counts['strict_saddle']:>14d} "
              f"{pt.freq:>8.4f} {lo:>8.4f} {hi:>8.4f}")
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        results = [harness.load_result(p) for p in args.results]
    except OSError as exc:
        raise _CliError(EXIT_INPUT, f"cannot read sweep result: {exc}")
    except (ValueError, KeyError, TypeError) as exc:
        raise _CliError(EXIT_INPUT, f"invalid sweep result: {exc}")
    summary = harness.summarize(results)
    _emit(json.dumps(summary, indent=2), args.out)
    if args.csv is not None:
        lines = ["varied_param,param_value,freq,ci_lo,ci_hi"]
        for sw in summary["sweeps"]:
            for row in sw["rows"]:
                lines.append(
                    f"{sw['varied_param']},{row['param_value']:.12g},"
                    f"{row['freq']:.12g},{row['ci_lo']:.12g},"
                    f"{row['ci_hi']:.12g}")
        Path(args.csv).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lqgame",
        description="N-player LQ games: Nash solving, equilibrium "
                    "classification, gradient-play simulation, and "
                    "counterexample sweeps.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("nash", help="solve a game file for Nash")
    p.add_argument("game")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_nash)

    p = sub.add_parser("classify",
                       help="solve (or load) a Nash point and classify it")
    p.add_argument("game")
    p.add_argument("--cert", help="reuse an existing certificate file")
    p.add_argument("--fd-step", type=float, default=1e-5)
    p.add_argument("--tau", type=float, default=1e-6)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="check a certificate against its game")
    p.add_argument("game")
    p.add_argument("--cert", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run simultaneous gradient play")
    p.add_argument("game")
    p.add_argument("--init-from-certificate",
                   help="center the initial draw on this certificate's "
                        "policy instead of solving")
    p.add_argument("--init-radius", type=float, default=0.0)
    p.add_argument("--gamma", type=float, nargs="+", default=[0.05])
    p.add_argument("--iters", type=int, default=100_000)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--cycle-out", help="cycle report JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte-Carlo parameter sweep")
    p.add_argument("--param", required=True, choices=list(harness.PARAMS))
    p.add_argument("--grid", required=True,
                   help="start:step:stop or comma-separated values")
    p.add_argument("--b", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (JSON + sidecars written beside)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export",
                       help="merge sweep result JSONs into a summary")
    p.add_argument("results", nargs="+")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_export)
    return ap


def entry(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; fold into the input-error code
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except LQGameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(entry())


if __name__ == "__main__":
    main()
