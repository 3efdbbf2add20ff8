"""Experiment harness: load or generate clean data, inject noise at a target
SNR, run the requested methods, and report MSE (dB) plus wall-clock time.

Config files are flat ``key = value`` text with one section per concern
(``[experiment]``, a data section, optional per-method sections), parsed
with :mod:`configparser` so they stay diffable.
"""

import configparser
import csv
import hashlib
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .beats import (
    BeatBoundaries,
    NoiseSpec,
    add_gaussian_noise,
    mse_db,
    read_onsets,
    read_signal_csv,
    segment_beats,
)
from .errors import DataError
from .pipeline import PipelineConfig, denoise_record, kf_inter_denoise, ks_intra_denoise
from .synth import SyntheticEcgSpec, generate_synthetic_ecg, parse_kernel_spec

METHODS = ("hkf", "ks-intra", "kf-inter", "noisy")


@dataclass(frozen=True)
class ReportRow:
    method: str
    mse_db: float
    runtime_ms: float
    config_digest: str
    seed: int


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "mse_db", "runtime_ms", "config_digest", "seed"])
            for row in self.rows:
                writer.writerow(
                    [
                        row.method,
                        repr(row.mse_db),
                        f"{row.runtime_ms:.3f}",
                        row.config_digest,
                        row.seed,
                    ]
                )


def _read_config(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing config file: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise DataError(f"malformed config file: {exc}") from exc
    digest = hashlib.sha256(path.read_bytes()).hexdigest()[:12]
    return parser, digest


def parse_synthetic_section(section, seed):
    kernels = None
    num_channels = section.getint("channels", 2)
    keyed = {
        int(key.rsplit("_", 1)[1]): parse_kernel_spec(section[key])
        for key in section
        if key.startswith("kernels_")
    }
    if keyed:
        kernels = tuple(keyed.get(ch, ()) for ch in range(num_channels))
    return SyntheticEcgSpec(
        num_beats=section.getint("num_beats", 200),
        beat_length=section.getint("beat_length", 300),
        num_channels=num_channels,
        kernels=kernels,
        beat_jitter=section.getfloat("jitter", 0.05),
        seed=section.getint("seed", seed),
    )


def _empty_section():
    parser = configparser.ConfigParser()
    parser.add_section("defaults")
    return parser["defaults"]


def pipeline_config_from_section(section, seed=0):
    """Build a pipeline config from a ``key = value`` section (all optional)."""
    if section is None:
        section = _empty_section()
    window = section.get("window", "1,1")
    try:
        left, right = (int(v) for v in window.split(","))
    except ValueError:
        raise DataError(f"malformed config: window must be 'L1,L2', got {window!r}") from None
    return PipelineConfig(
        order=section.getint("order", 2),
        window_left=left,
        window_right=right,
        warmup_beats=section.getint("warmup", 20),
        em_iters=section.getint("em_iters", 10),
        alpha=section.getfloat("alpha", 0.9),
        q_mode=section.get("q_mode", "full"),
        literal_em=section.getboolean("literal_em", False),
        seed=seed,
    )


def _load_clean(parser, seed):
    exp = parser["experiment"]
    source = exp.get("data", "synthetic")
    if source == "synthetic":
        section = parser["synthetic"] if parser.has_section("synthetic") else exp
        tensor, _ = generate_synthetic_ecg(parse_synthetic_section(section, seed))
        return tensor
    if source == "csv":
        if not parser.has_section("csv"):
            raise DataError("malformed config: data=csv requires a [csv] section")
        section = parser["csv"]
        signal = read_signal_csv(section["input"])
        if section.get("onsets"):
            bounds = read_onsets(section["onsets"])
        elif section.get("period"):
            bounds = BeatBoundaries.from_period(section.getint("period"))
        else:
            raise DataError("malformed config: [csv] needs onsets or period")
        return segment_beats(signal, bounds, section.getint("beat_length", 300))
    raise DataError(f"malformed config: unknown data source {source!r}")


def run_experiment(config_path):
    """Execute one experiment config and return its report."""
    parser, digest = _read_config(config_path)
    if not parser.has_section("experiment"):
        raise DataError("malformed config: missing [experiment] section")
    exp = parser["experiment"]
    seed = exp.getint("seed", 0)
    snr_db = exp.getfloat("snr_db", 0.0)
    methods = [m.strip() for m in exp.get("methods", "hkf,noisy").split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise DataError(f"malformed config: unknown methods {unknown}")

    clean = _load_clean(parser, seed)
    noisy = add_gaussian_noise(clean, NoiseSpec(snr_db=snr_db, seed=seed))

    runners = {
        "hkf": denoise_record,
        "ks-intra": ks_intra_denoise,
        "kf-inter": kf_inter_denoise,
        "noisy": lambda tensor, config: tensor,
    }
    rows = []
    for method in methods:
        section = parser[method] if parser.has_section(method) else None
        config = pipeline_config_from_section(section, seed)
        start = time.perf_counter()
        denoised = runners[method](noisy, config)
        elapsed_ms = (time.perf_counter() - start) * 1e3
        rows.append(
            ReportRow(
                method=method,
                mse_db=mse_db(denoised, clean),
                runtime_ms=elapsed_ms,
                config_digest=digest,
                seed=seed,
            )
        )
    return ExperimentReport(rows=tuple(rows))
