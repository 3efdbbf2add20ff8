"""Command-line entry points.

Subcommands: ``denoise`` (CSV in, denoised CSV out), ``bench`` (run an
experiment config, write a report CSV), ``synth`` (render a synthetic
record to CSV). Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

import argparse
import sys

import numpy as np

from .beats import BeatBoundaries, read_onsets, read_signal_csv, reassemble_signal, segment_beats, write_signal_csv
from .bench import run_experiment
from .errors import DataError, HkfError, NumericalError
from .pipeline import PipelineConfig, denoise_record
from .synth import generate_synthetic_ecg
from . import bench

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="hkf", description="Hierarchical Kalman filter denoising")
    sub = parser.add_subparsers(dest="command", required=True)

    den = sub.add_parser("denoise", help="denoise a CSV signal")
    den.add_argument("--input", required=True, help="signal CSV (header row of channel names)")
    group = den.add_mutually_exclusive_group(required=True)
    group.add_argument("--onsets", help="file with one beat onset index per line")
    group.add_argument("--period", type=int, help="fixed beat period in samples")
    den.add_argument("--beat-len", type=int, default=300, help="intra-beat grid length T")
    den.add_argument("--order", type=int, default=2, help="Taylor expansion order K")
    den.add_argument("--window", default="1,1", help="window extents L1,L2")
    den.add_argument("--em-iters", type=int, default=10)
    den.add_argument("--warmup", type=int, default=20, help="number of warm-up beats")
    den.add_argument("--alpha", type=float, default=0.9, help="inter-beat noise smoothing factor")
    den.add_argument("--seed", type=int, default=0)
    den.add_argument("--output", required=True, help="denoised signal CSV")

    ben = sub.add_parser("bench", help="run an experiment config")
    ben.add_argument("--config", required=True)
    ben.add_argument("--report", required=True, help="report CSV path")

    syn = sub.add_parser("synth", help="generate a synthetic record")
    syn.add_argument("--spec", required=True, help="config file with a [synthetic] section")
    syn.add_argument("--output", required=True, help="signal CSV path")
    return parser


def _cmd_denoise(args):
    signal = read_signal_csv(args.input)
    if args.onsets:
        bounds = read_onsets(args.onsets)
    else:
        bounds = BeatBoundaries.from_period(args.period)
    try:
        left, right = (int(v) for v in args.window.split(","))
    except ValueError:
        raise _UsageError(f"--window must be 'L1,L2', got {args.window!r}") from None
    config = PipelineConfig(
        order=args.order,
        window_left=left,
        window_right=right,
        warmup_beats=args.warmup,
        em_iters=args.em_iters,
        alpha=args.alpha,
        seed=args.seed,
    )
    tensor = segment_beats(signal, bounds, args.beat_len)
    denoised = denoise_record(tensor, config)
    write_signal_csv(reassemble_signal(denoised), args.output)
    return EXIT_OK


def _cmd_bench(args):
    report = run_experiment(args.config)
    report.write_csv(args.report)
    return EXIT_OK


def _cmd_synth(args):
    parser, _ = bench._read_config(args.spec)
    if not parser.has_section("synthetic"):
        raise DataError("malformed spec: missing [synthetic] section")
    spec = bench.parse_synthetic_section(parser["synthetic"], seed=0)
    _, signal = generate_synthetic_ecg(spec)
    write_signal_csv(signal, args.output)
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"hkf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    commands = {"denoise": _cmd_denoise, "bench": _cmd_bench, "synth": _cmd_synth}
    try:
        return commands[args.command](args)
    except _UsageError as exc:
        print(f"hkf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"hkf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        print(f"hkf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataError as exc:
        print(f"hkf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, HkfError) as exc:
        print(f"hkf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
