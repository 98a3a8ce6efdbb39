"""``sparserec`` command line.

Subcommands: ``analyze`` (power-law fit of DCT magnitudes), ``recover``
(one sensing + recovery run), ``sweep`` (MSE over m = k, 2k, ...) and
``matrix`` (coherence, RIP and measurement-bound analysis).

CSV goes to ``--out`` (default stdout); human-readable summaries go to
stderr. Exit codes: 0 ok, 2 usage, 3 I/O, 4 numerical degeneracy, 5 solver
failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np
from scipy import fft

from sparserec import experiment as ex
from sparserec import sensing
from sparserec.errors import (
    DegenerateFitError,
    InfeasibleFactorizationError,
    InstanceTooLargeError,
    InvalidArgumentError,
    InvalidInputError,
)
from sparserec.solvers import INFEASIBLE, RecoveryProblem, SolverConfig
from sparserec.transforms import Signal, dct_forward, dct_matrix, fit_power_law, sorted_magnitudes

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC, EXIT_SOLVER = 0, 2, 3, 4, 5
DEFAULT_SEED = 42
SEED_ENV = "SPARSEREC_SEED"

SYNTH_DEFAULTS = {"n": 2048, "c": 46.97, "q": 1.45, "seed": 0}


class UsageError(Exception):
    pass


def _keyvals(items: Sequence[str], allowed: dict, flag: str) -> dict:
    out = dict(allowed)
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or key not in allowed:
            raise UsageError(f"{flag}: expected KEY=VALUE with KEY in {sorted(allowed)}, got {item!r}")
        try:
            out[key] = type(allowed[key])(float(value)) if isinstance(allowed[key], int) else float(value)
        except ValueError:
            raise UsageError(f"{flag}: {key} needs a number, got {value!r}") from None
    return out


def _seed_type(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed_type, default=None,
                        help=f"64-bit seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--wav", help="16-bit PCM WAV input")
    source.add_argument("--offset", type=int, default=0, help="first sample of the WAV segment")
    source.add_argument("--n", type=int, default=None, help="segment / signal length (default 2048)")
    source.add_argument("--synth", nargs="*", metavar="KEY=VALUE",
                        help="synthetic power-law signal, keys n, c, q, seed")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--k", type=int, default=128, help="sparsity level")
    solver.add_argument("--matrix", default="gaussian", choices=sensing.KINDS)
    solver.add_argument("--scale", type=float, default=ex.DEFAULT_SCALE, help="entry standard deviation")
    solver.add_argument("--solver", default="bp", choices=ex.SOLVERS)
    solver.add_argument("--max-iters", type=int, default=SolverConfig.max_iters)
    solver.add_argument("--abs-tol", type=float, default=SolverConfig.abs_tol)
    solver.add_argument("--rel-tol", type=float, default=SolverConfig.rel_tol)
    solver.add_argument("--penalty", type=float, default=SolverConfig.penalty)
    solver.add_argument("--support-tol", type=float, default=SolverConfig.support_tol)
    solver.add_argument("--rounds", type=int, default=4, help="reweighted-l1 rounds")

    parser = argparse.ArgumentParser(prog="sparserec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common, source], help="power-law fit of sorted DCT magnitudes")
    p.add_argument("--fit-range", nargs=2, type=int, metavar=("LO", "HI"))

    p = sub.add_parser("recover", parents=[common, source, solver], help="recover one signal")
    p.add_argument("--m", type=int, default=512, help="number of measurements")
    p.add_argument("--matrix-file", help="read Phi from a CSMX file instead of generating it")

    p = sub.add_parser("sweep", parents=[common, source, solver], help="MSE sweep over m = multiples of k")
    p.add_argument("--m-multiples", nargs="+", type=int, default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--meta", help="metadata sidecar path (default OUT.meta when --out is given)")

    p = sub.add_parser("matrix", parents=[common], help="coherence / RIP / bound analysis")
    p.add_argument("--kind", default="gaussian", choices=sensing.KINDS + ("dct", "spike", "dct-vs-spike"))
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--scale", type=float, default=None, help="entry standard deviation (default 1/sqrt(m))")
    p.add_argument("--normalize-columns", action="store_true")
    p.add_argument("--coherence-with", choices=("dct", "spike"))
    p.add_argument("--rip-k", type=int)
    p.add_argument("--rip-trials", type=int, default=1000)
    p.add_argument("--rip-canonical", action="store_true", help="signed canonical test vectors (k = 1)")
    p.add_argument("--bound", nargs="*", metavar="KEY=VALUE", help="measurement bound, keys mu, k, n, c")
    p.add_argument("--dump", help="write the matrix in CSMX binary layout")
    return parser


@contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return _seed_type(env)
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"${SEED_ENV} is not a valid 64-bit seed: {env!r}") from None
    return DEFAULT_SEED


def _signal(args) -> tuple:
    """Returns ``(Signal, description dict)`` for the single configured source."""
    if args.wav is not None and args.synth is not None:
        raise UsageError("give exactly one of --wav and --synth")
    if args.wav is not None:
        n = args.n or 2048
        return ex.load_wav_segment(args.wav, args.offset, n), {"source": "wav", "wav_path": args.wav,
                                                               "wav_offset": args.offset, "n": n}
    params = _keyvals(args.synth or [], SYNTH_DEFAULTS, "--synth")
    if args.n is not None:
        params["n"] = args.n
    sig = ex.synth_compressible(params["n"], params["c"], params["q"], params["seed"])
    return sig, {"source": "synthetic", "n": params["n"], "synth_c": params["c"], "synth_q": params["q"],
                 "signal_seed": params["seed"]}


def _solver_config(args) -> SolverConfig:
    return SolverConfig(max_iters=args.max_iters, abs_tol=args.abs_tol, rel_tol=args.rel_tol,
                        penalty=args.penalty, support_tol=args.support_tol)


def _experiment_config(args, src: dict, seed: int, **extra) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(k=args.k, matrix_kind=args.matrix, matrix_scale=args.scale, seed=seed,
                               solver=args.solver, solver_config=_solver_config(args),
                               reweight_rounds=args.rounds, **src, **extra)


def cmd_analyze(args) -> int:
    sig, _ = _signal(args)
    theta = dct_forward(sig)
    fit = fit_power_law(theta, tuple(args.fit_range) if args.fit_range else None)
    with _output(args.out) as fh:
        fh.write("rank,magnitude\n")
        for rank, mag in enumerate(sorted_magnitudes(theta), start=1):
            fh.write(f"{rank},{mag:.17g}\n")
    print(f"fit c={fit.c:.17g} q={fit.q:.17g} residual_rms={fit.residual_rms:.17g} "
          f"ranks={fit.rank_range[0]}-{fit.rank_range[1]}", file=sys.stderr)
    return EXIT_OK


def cmd_recover(args) -> int:
    sig, src = _signal(args)
    seed = _resolve_seed(args)
    n = sig.n
    if not 1 <= args.m <= n:
        raise InvalidArgumentError(f"--m must satisfy 1 <= m <= n={n}")
    cfg = _experiment_config(args, src, seed, m_multiples=(1,))
    if args.matrix_file:
        phi = sensing.load_matrix(args.matrix_file)
        if phi.n != n:
            raise InvalidArgumentError(f"matrix file has n={phi.n}, signal has n={n}")
        result, x_hat = _recover_with(phi, sig, cfg)
    else:
        _, _, result = ex.run_recovery(sig, cfg, args.m, seed)
        x_hat = ex.dct_inverse(result.theta_hat)
    mse = float(np.mean((sig.samples - x_hat.samples) ** 2))
    with _output(args.out) as fh:
        fh.write("index,original,recovered\n")
        for i, (a, b) in enumerate(zip(sig.samples, x_hat.samples)):
            fh.write(f"{i},{a:.17g},{b:.17g}\n")
    mse_tc = ex.transform_coding_mse(sig, min(args.k, n))
    print(f"mse={mse:.6g} mse_tc={mse_tc:.6g} iterations={result.iterations} "
          f"residual={result.primal_residual:.6g} status={result.status}", file=sys.stderr)
    return EXIT_OK


def _recover_with(phi, sig: Signal, cfg: ex.ExperimentConfig):
    A = fft.dct(phi.entries, type=2, norm="ortho", axis=1)
    y = sensing.measure(phi, sig)
    result = ex.solve(RecoveryProblem(A, y), cfg)
    return result, ex.dct_inverse(result.theta_hat)


def cmd_sweep(args) -> int:
    sig, src = _signal(args)
    seed = _resolve_seed(args)
    cfg = _experiment_config(args, src, seed, m_multiples=tuple(args.m_multiples), trials_per_m=args.trials)
    report = ex.sweep(sig, cfg, workers=max(1, args.workers))
    with _output(args.out) as fh:
        fh.write(report.to_csv())
    meta_path = args.meta or (f"{args.out}.meta" if args.out else None)
    if meta_path:
        with open(meta_path, "w") as fh:
            fh.write(report.metadata_text())
    print("m,median_mse_cs,median_mse_tc", file=sys.stderr)
    for m, (cs, tc) in report.medians().items():
        print(f"{m},{cs:.6g},{tc:.6g}", file=sys.stderr)
    if any(r.status == INFEASIBLE for r in report.rows):
        print("error: at least one trial had a rank-deficient measurement operator", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _basis(name: str, n: int) -> np.ndarray:
    """Basis vectors as columns."""
    return dct_matrix(n).T if name == "dct" else np.eye(n)


def cmd_matrix(args) -> int:
    seed = _resolve_seed(args)
    lines = []
    kind = args.kind
    if kind == "dct-vs-spike":
        kind, args.coherence_with = "spike", "dct"
    mat = None
    if args.n is not None:
        n = args.n
        if n < 1:
            raise InvalidArgumentError("--n must be positive")
        if kind in ("dct", "spike"):
            if args.m not in (None, n):
                raise InvalidArgumentError(f"--kind {kind} is square; --m must equal --n")
            mat = _basis(kind, n).T  # sensing vectors as rows
        else:
            m = args.m if args.m is not None else n
            scale = args.scale if args.scale is not None else 1.0 / math.sqrt(m)
            mat = sensing.generate_matrix(kind, m, n, seed, scale).entries
        if args.normalize_columns:
            mat = mat / np.linalg.norm(mat, axis=0, keepdims=True)
        lines.append(f"kind={args.kind}")
        lines.append(f"m={mat.shape[0]}")
        lines.append(f"n={mat.shape[1]}")

    mu = None
    if args.coherence_with:
        if mat is None:
            raise InvalidArgumentError("--coherence-with needs a matrix (--n)")
        psi = _basis(args.coherence_with, mat.shape[1])
        if mat.shape[0] == mat.shape[1]:
            res = sensing.mutual_coherence(mat, psi)
            lines.append(f"mu={res.mu:.17g}")
        else:
            res = sensing.coherence_rectangular(mat, psi)
            lines.append(f"mu_rectangular={res.mu:.17g}")
        lines.append(f"argmax_pair={res.argmax_pair[0]},{res.argmax_pair[1]}")
        mu = res.mu

    if args.rip_k is not None:
        if mat is None:
            raise InvalidArgumentError("--rip-k needs a matrix (--n)")
        est = sensing.estimate_rip(mat, args.rip_k, args.rip_trials, seed, canonical=args.rip_canonical)
        lines.append(f"rip_k={est.k}")
        lines.append(f"rip_trials={est.trials}")
        lines.append(f"delta_lower={est.delta_lower:.17g}")

    if args.bound is not None:
        defaults = {"mu": mu if mu is not None else 1.0, "k": args.rip_k or 1,
                    "n": mat.shape[1] if mat is not None else 2, "c": 1.0}
        params = _keyvals(args.bound, {"mu": 1.0, "k": 1, "n": 1, "c": 1.0}, "--bound")
        given = {item.partition("=")[0] for item in args.bound}
        for key in defaults:
            if key not in given:
                params[key] = defaults[key]
        bound = sensing.measurement_bound(params["mu"], int(params["k"]), int(params["n"]), params["c"])
        lines.append(f"measurement_bound={bound}")

    if args.dump:
        if mat is None:
            raise InvalidArgumentError("--dump needs a matrix (--n)")
        sensing.save_matrix(mat, args.dump)

    if not lines:
        raise UsageError("nothing to do: give --n, --coherence-with, --rip-k or --bound")
    with _output(args.out) as fh:
        fh.write("".join(line + "\n" for line in lines))
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "recover": cmd_recover, "sweep": cmd_sweep, "matrix": cmd_matrix}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidArgumentError, InvalidInputError, InstanceTooLargeError) as exc:
        print(f"sparserec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sparserec {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DegenerateFitError as exc:
        print(f"sparserec {args.command}: degenerate fit: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InfeasibleFactorizationError as exc:
        print(f"sparserec {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
