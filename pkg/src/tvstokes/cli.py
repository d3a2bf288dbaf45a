"""Command-line denoising runs and trace CSV serialization."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .driver import Trace, denoise
from .pgm import PgmError, read_pgm, write_pgm
from .solvers import InvalidParamsError, Params
from .synth import SyntheticSpec, add_noise, psnr, synth

TRACE_COLUMNS = ("k", "stage", "H", "g1", "g2", "l1", "l2",
                 "gradmap1", "gradmap2", "primal_change", "psnr")
MIN_SYNTH_SIZE = 4
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation: exactly one input source plus run settings."""

    input_path: str | None
    synthetic: SyntheticSpec | None
    out_path: str
    trace_path: str | None
    params: Params
    sigma: float
    seed: int
    clean_path: str | None
    maxval: int

    def __post_init__(self):
        if (self.input_path is None) == (self.synthetic is None):
            raise ValueError("exactly one of --input and --synthetic is required")
        if self.sigma < 0:
            raise ValueError("--sigma must be nonnegative")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError("--seed must fit in 64 unsigned bits")
        if self.synthetic is not None and (self.synthetic.height < MIN_SYNTH_SIZE
                                           or self.synthetic.width < MIN_SYNTH_SIZE):
            raise ValueError(f"synthetic images must be at least {MIN_SYNTH_SIZE}x{MIN_SYNTH_SIZE}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_trace_csv(trace: Trace) -> str:
    """Render a trace as CSV: fixed columns, 17 significant digits, LF endings."""
    lines = [",".join(TRACE_COLUMNS)]
    for r in trace.records:
        lines.append(",".join([
            _fmt(r.k), r.stage, _fmt(r.H), _fmt(r.g1), _fmt(r.g2), _fmt(r.l1),
            _fmt(r.l2), _fmt(r.gradmap1), _fmt(r.gradmap2), _fmt(r.primal_change),
            "" if r.psnr is None else _fmt(r.psnr),
        ]))
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: Trace, path) -> None:
    Path(path).write_bytes(format_trace_csv(trace).encode("ascii"))


def parse_synthetic(text: str) -> SyntheticSpec:
    """Parse KIND:HxW[:LEVELS], e.g. staircase:32x32:4."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"synthetic spec must be KIND:HxW[:LEVELS], got {text!r}")
    kind = parts[0]
    size = parts[1].lower().split("x")
    if len(size) != 2:
        raise ValueError(f"size must be HxW, got {parts[1]!r}")
    try:
        height, width = int(size[0]), int(size[1])
        levels = int(parts[2]) if len(parts) == 3 else 4
    except ValueError:
        raise ValueError(f"non-integer size or levels in {text!r}") from None
    return SyntheticSpec(kind=kind, height=height, width=width, levels=levels)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvstokes",
        description="Denoise an image with the coupled TV-Stokes model.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", metavar="PATH", help="input PGM image (P2 or P5)")
    source.add_argument("--synthetic", metavar="KIND:HxW[:LEVELS]",
                        help="generate the input: staircase, ramp, or disk")
    parser.add_argument("--out", metavar="PATH", required=True, help="output PGM path")
    parser.add_argument("--trace", metavar="PATH", help="write the per-iteration trace CSV here")
    parser.add_argument("--alpha", type=float, default=0.05, help="second-order TV weight")
    parser.add_argument("--beta", type=float, default=0.05, help="image TV / coupling weight")
    parser.add_argument("--eta1", type=float, default=1.0, help="gradient-field fidelity weight")
    parser.add_argument("--eta2", type=float, default=1.0, help="image fidelity weight")
    parser.add_argument("--tau-p", type=float, default=1.0 / 64.0, help="dual step size for p")
    parser.add_argument("--tau-q", type=float, default=0.25, help="dual step size for q")
    parser.add_argument("--tau-s", type=float, default=0.125, help="dual step size for s")
    parser.add_argument("--inner-iters", type=int, default=300, help="dual sweep budget per block solve")
    parser.add_argument("--inner-tol", type=float, default=1e-6, help="dual change stop threshold")
    parser.add_argument("--outer-iters", type=int, default=100, help="outer iteration budget")
    parser.add_argument("--outer-tol", type=float, default=1e-5, help="relative image change stop threshold")
    parser.add_argument("--sigma", type=float, default=0.0, help="Gaussian noise level to add")
    parser.add_argument("--seed", type=int, default=0, help="noise seed (64-bit unsigned)")
    parser.add_argument("--clean", metavar="PATH", help="clean reference for PSNR reporting")
    parser.add_argument("--maxval", type=int, choices=(255, 65535), default=255,
                        help="output quantisation")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    params = Params(alpha=args.alpha, beta=args.beta, eta1=args.eta1, eta2=args.eta2,
                    tau_p=args.tau_p, tau_q=args.tau_q, tau_s=args.tau_s,
                    inner_iters=args.inner_iters, inner_tol=args.inner_tol,
                    outer_iters=args.outer_iters, outer_tol=args.outer_tol)
    synthetic = parse_synthetic(args.synthetic) if args.synthetic else None
    return RunConfig(input_path=args.input, synthetic=synthetic, out_path=args.out,
                     trace_path=args.trace, params=params, sigma=args.sigma,
                     seed=args.seed, clean_path=args.clean, maxval=args.maxval)


def run_config(config: RunConfig) -> int:
    """Execute one denoising run; returns a process exit code."""
    if config.input_path is not None:
        clean = None
        f = read_pgm(config.input_path)
    else:
        clean = synth(config.synthetic)
        f = clean
    if config.clean_path is not None:
        clean = read_pgm(config.clean_path)
    f = add_noise(f, config.sigma, config.seed)

    u, _, trace = denoise(config.params, f, clean=clean)
    write_pgm(config.out_path, u, maxval=config.maxval)
    if config.trace_path is not None:
        write_trace_csv(trace, config.trace_path)

    last = trace.records[-1]
    print(f"wrote {config.out_path}")
    print(f"outer iterations: {int(last.k)}")
    print(f"final energy: {_fmt(last.H)}")
    if clean is not None:
        print(f"psnr: input {psnr(f, clean):.2f} dB -> output {last.psnr:.2f} dB")
    return 0


def run_cli(argv) -> int:
    """Parse argv and run; exit code 0 on success, 2 on bad flags, 1 on failure."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _config_from_args(args)
    except (InvalidParamsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_config(config)
    except (OSError, PgmError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
