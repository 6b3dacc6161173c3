"""Command-line front end.

Five subcommands over the library:

* ``gen``         — write a permutation stream (file or stdout).
* ``estimate``    — pairwise-case uniformity estimate, fused generation or
  an existing stream file; emits a CSV ratio table and a JSON summary.
* ``brute``       — full N!-cell chi-square over a stream (n <= 8).
* ``order-check`` — exact k-th order conditional check over a stream file.
* ``exact-dist``  — exact rational output distribution of a shuffle.

Exit codes: 0 = uniform verdict / order holds; 2 = bias detected (chi-square
tail probability < 0.05) / order fails or is degenerate; 1 = any error.
Reports go to stdout (or --out files); verdict and throughput lines go to
stderr so stdout stays pipeable.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import BinaryIO, Iterator

from .errors import PermauditError
from .estimator import DEFAULT_ALPHAS, VERDICT_THRESHOLD, EstimatorReport
from .exact import check_order_k, exact_distribution
from .permfile import read_multiset
from .pipeline import (
    brute_file,
    estimate_file,
    generate_file,
    run_brute,
    run_pipeline,
)
from .rng import KINDS, BitSource, Tape
from .shuffle import ALGORITHMS, ShuffleSpec
from .stats import format_probability

_HEX_SEED = re.compile(r"^[0-9a-fA-F]{32}$")
DEFAULT_SEED = "0" * 32


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; 2 means "bias detected" here, so
    remap usage errors to the generic error code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed_value(text: str) -> int:
    if not _HEX_SEED.match(text):
        raise argparse.ArgumentTypeError(
            f"seed must be exactly 32 hex digits, got {text!r}"
        )
    return int(text, 16)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


@contextmanager
def _binary_out(path: str) -> Iterator[BinaryIO]:
    if path == "-":
        yield sys.stdout.buffer
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as fp:
            yield fp


@contextmanager
def _binary_in(path: str) -> Iterator[BinaryIO]:
    if path == "-":
        yield sys.stdin.buffer
    else:
        with open(path, "rb") as fp:
            yield fp


def _add_generation_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--algo", choices=ALGORITHMS, required=required,
                   help="shuffle algorithm")
    p.add_argument("--n", type=_positive_int, required=required,
                   help="permutation size")
    p.add_argument("--bits", type=int, default=0,
                   help="bits per draw (1..32; ignored by fy-ideal)")
    p.add_argument("--rng", choices=KINDS, default="aes128",
                   help="bit source kind (default aes128)")
    p.add_argument("--seed", type=_seed_value, default=DEFAULT_SEED,
                   metavar="HEX32",
                   help="128-bit seed as exactly 32 hex digits (default all zero)")
    p.add_argument("--count", type=_positive_int, required=required,
                   metavar="M", help="number of permutations")
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="worker threads (identical output for any value)")


def _build_spec(args: argparse.Namespace) -> ShuffleSpec:
    return ShuffleSpec(args.algo, args.n, args.bits)


def _build_source(args: argparse.Namespace, spec: ShuffleSpec) -> BitSource:
    if args.rng == "tape":
        # One enumeration assignment per permutation; seed does not apply.
        return BitSource.from_tape(Tape(spec.bits, spec.n - 1))
    return BitSource(args.rng, args.seed)


def _threads(args: argparse.Namespace) -> int:
    return 1 if args.rng == "tape" else args.threads


def _load_alpha_file(path: str) -> tuple[float, ...]:
    tokens = Path(path).read_text().split()
    if not tokens:
        raise ValueError(f"alpha file {path} is empty")
    return tuple(float(t) for t in tokens)


def _require_no_generation_flags(args: argparse.Namespace) -> None:
    if args.algo is not None or args.count is not None:
        raise ValueError("--in replaces the generation flags; drop --algo/--count")


def _require_generation_flags(p_name: str, args: argparse.Namespace) -> None:
    if args.algo is None or args.n is None or args.count is None:
        raise ValueError(
            f"{p_name} needs either --in FILE or --algo/--n/--count generation flags"
        )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args: argparse.Namespace) -> int:
    spec = _build_spec(args)
    src = _build_source(args, spec)
    started = time.perf_counter()
    with _binary_out(args.out) as fp:
        generate_file(spec, src, args.count, fp, threads=_threads(args))
    elapsed = time.perf_counter() - started
    print(
        f"wrote {args.count} permutations of n={spec.n} "
        f"in {elapsed:.2f} s ({args.count / max(elapsed, 1e-9):.0f} perms/s)",
        file=sys.stderr,
    )
    return 0


def _emit_report(report: EstimatorReport, out: str | None, fmt: str) -> None:
    if out:
        base = re.sub(r"\.(csv|json)$", "", out)
        Path(base + ".csv").write_text(report.to_csv())
        Path(base + ".json").write_text(report.to_json())
        print(f"wrote {base}.csv and {base}.json", file=sys.stderr)
    elif fmt == "json":
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(report.to_csv())


def cmd_estimate(args: argparse.Namespace) -> int:
    thresholds = (
        _load_alpha_file(args.alpha_file) if args.alpha_file else DEFAULT_ALPHAS
    )
    started = time.perf_counter()
    if args.infile:
        _require_no_generation_flags(args)
        with _binary_in(args.infile) as fp:
            report = estimate_file(
                fp, thresholds, args.reduce, reduce_seed=args.seed
            )
    else:
        _require_generation_flags("estimate", args)
        spec = _build_spec(args)
        src = _build_source(args, spec)
        report = run_pipeline(
            spec, src, args.count, thresholds, args.reduce, threads=_threads(args)
        )
    elapsed = time.perf_counter() - started
    _emit_report(report, args.out, args.report)
    print(
        f"chi-square Q={report.q:.6g} dof={report.dof} "
        f"tail probability {format_probability(report.tail)} "
        f"-> {report.verdict} ({elapsed:.2f} s)",
        file=sys.stderr,
    )
    return 2 if report.biased else 0


def cmd_brute(args: argparse.Namespace) -> int:
    if args.infile:
        _require_no_generation_flags(args)
        with _binary_in(args.infile) as fp:
            samples, tail = brute_file(fp)
    else:
        _require_generation_flags("brute", args)
        spec = _build_spec(args)
        src = _build_source(args, spec)
        samples, tail = run_brute(spec, src, args.count, threads=_threads(args))
    cells = math.factorial(samples.n)
    biased = tail < VERDICT_THRESHOLD
    verdict = "biased" if biased else "uniform"
    print(
        f"cells={cells} dof={cells - 1} samples={samples.total} "
        f"support={len(samples)} tail_probability={format_probability(tail)} "
        f"verdict={verdict}"
    )
    return 2 if biased else 0


def cmd_order_check(args: argparse.Namespace) -> int:
    with _binary_in(args.infile) as fp:
        samples = read_multiset(fp)
    result = check_order_k(samples, args.k)
    target = Fraction(1, samples.n - args.k + 1)
    if result.holds and not result.degenerate:
        print(f"order k={args.k}: HOLDS (all conditionals = {target})")
        return 0
    if result.witness is not None:
        inp, outp, conditional = result.witness
        print(
            f"order k={args.k}: FAILS — inputs {inp} -> outputs {outp} "
            f"have conditional {conditional}, expected {target}"
        )
    elif result.holds:
        print(
            f"order k={args.k}: DEGENERATE — some conditions have zero "
            f"probability; the surviving conditionals all equal {target}"
        )
    else:
        print(
            f"order k={args.k}: FAILS (and some conditions are degenerate)"
        )
    return 2


def cmd_exact_dist(args: argparse.Namespace) -> int:
    spec = _build_spec(args)
    dist = exact_distribution(spec)
    lines = ["permutation,numerator,denominator"]
    for perm in sorted(dist.probs, key=lambda p: p.mapping):
        pr = dist.probs[perm]
        mapping = " ".join(str(v) for v in perm.mapping)
        lines.append(f"{mapping},{pr.numerator},{pr.denominator}")
    text = "\n".join(lines) + "\n"
    if args.out and args.out != "-":
        Path(args.out).write_text(text)
        print(f"wrote {args.out} ({dist.support_size} support rows)", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="permaudit",
        description="Generate permutation streams and audit their uniformity.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a permutation stream")
    _add_generation_flags(p, required=True)
    p.add_argument("--out", default="-", help="output file ('-' = stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("estimate", help="pairwise-case uniformity estimate")
    _add_generation_flags(p, required=False)
    p.add_argument("--in", dest="infile", default=None,
                   help="existing stream file instead of fused generation")
    p.add_argument("--reduce", type=_positive_int, default=1, metavar="FACTOR",
                   help="track a 1/FACTOR case subset (power of two)")
    p.add_argument("--alpha-file", default=None,
                   help="override confidence levels, one per line")
    p.add_argument("--out", default=None,
                   help="write PATH.csv and PATH.json instead of stdout")
    p.add_argument("--report", choices=("csv", "json"), default="csv",
                   help="stdout format when --out is absent")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("brute", help="full N!-cell chi-square (n <= 8)")
    _add_generation_flags(p, required=False)
    p.add_argument("--in", dest="infile", default=None,
                   help="existing stream file instead of fused generation")
    p.set_defaults(func=cmd_brute)

    p = sub.add_parser("order-check", help="exact k-th order conditional check")
    p.add_argument("--in", dest="infile", default="-",
                   help="stream file ('-' = stdin, the default)")
    p.add_argument("--k", type=_positive_int, required=True,
                   help="order to check (1..n-1)")
    p.set_defaults(func=cmd_order_check)

    p = sub.add_parser("exact-dist", help="exact rational output distribution")
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--bits", type=int, default=0,
                   help="bits per draw (1..32; ignored by fy-ideal)")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_exact_dist)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except PermauditError as exc:
        print(f"permaudit: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"permaudit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
