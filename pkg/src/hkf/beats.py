"""Signal containers, beat segmentation, noise injection, and error metrics.

A record is an m-channel sample stream. Segmentation cuts it at beat onsets
and linearly resamples every inter-onset interval onto a common grid of T
samples, producing a beats-by-channels-by-time tensor that the filtering
stages operate on. The inverse map restores the original per-beat lengths.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

MSE_DB_FLOOR = -120.0


@dataclass(frozen=True)
class MultiChannelSignal:
    """Raw multichannel recording: ``samples`` is channels x total samples."""

    samples: np.ndarray
    sample_rate_hz: float = 1.0
    channel_names: tuple = ()

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise DataError("invalid signal: expected a 2-D channels x samples array")
        m, length = samples.shape
        if m < 1 or length < 2:
            raise DataError("invalid signal: need at least 1 channel and 2 samples")
        if not np.all(np.isfinite(samples)):
            raise DataError("invalid signal: non-finite samples")
        if not self.sample_rate_hz > 0:
            raise DataError("invalid signal: sample rate must be positive")
        names = tuple(self.channel_names) or tuple(f"ch{i}" for i in range(m))
        if len(names) != m:
            raise DataError("invalid signal: channel name count mismatch")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel_names", names)

    @property
    def num_channels(self):
        return self.samples.shape[0]

    @property
    def num_samples(self):
        return self.samples.shape[1]


@dataclass(frozen=True)
class BeatBoundaries:
    """Beat onsets, either explicit sample indices or a fixed period.

    An onset equal to the signal length is allowed: it closes the final
    beat without starting a new one.
    """

    onsets: tuple = ()
    period: int = 0

    @classmethod
    def from_onsets(cls, onsets):
        return cls(onsets=tuple(int(o) for o in onsets))

    @classmethod
    def from_period(cls, period):
        period = int(period)
        if period < 2:
            raise DataError("invalid boundaries: period must be >= 2 samples")
        return cls(period=period)

    def resolve(self, num_samples):
        """Concrete onset indices for a signal of the given length."""
        if self.period:
            onsets = np.arange(0, num_samples + 1, self.period)
        else:
            onsets = np.asarray(self.onsets, dtype=int)
        if onsets.size < 2:
            raise DataError("insufficient beats: need at least 2 onsets")
        if onsets[0] < 0 or onsets[-1] > num_samples:
            raise DataError("invalid boundaries: onset out of range")
        gaps = np.diff(onsets)
        if np.any(gaps < 2):
            raise DataError("invalid boundaries: onsets must increase by >= 2 samples")
        return onsets


@dataclass(frozen=True)
class HeartbeatTensor:
    """Stack of beats on a common grid: ``beats`` is N x m x T."""

    beats: np.ndarray
    original_lengths: np.ndarray = field(default=None)
    sample_rate_hz: float = 1.0
    channel_names: tuple = ()

    def __post_init__(self):
        beats = np.asarray(self.beats, dtype=float)
        if beats.ndim != 3:
            raise DataError("invalid tensor: expected beats x channels x time")
        n, m, t = beats.shape
        if n < 1 or m < 1 or t < 1:
            raise DataError("invalid tensor: empty axis")
        if not np.all(np.isfinite(beats)):
            raise DataError("invalid tensor: non-finite entries")
        lengths = self.original_lengths
        if lengths is None:
            lengths = np.full(n, t, dtype=int)
        lengths = np.asarray(lengths, dtype=int)
        if lengths.shape != (n,) or np.any(lengths < 2):
            raise DataError("invalid tensor: bad original_lengths")
        names = tuple(self.channel_names) or tuple(f"ch{i}" for i in range(m))
        if len(names) != m:
            raise DataError("invalid tensor: channel name count mismatch")
        object.__setattr__(self, "beats", beats)
        object.__setattr__(self, "original_lengths", lengths)
        object.__setattr__(self, "channel_names", names)

    @property
    def num_beats(self):
        return self.beats.shape[0]

    @property
    def num_channels(self):
        return self.beats.shape[1]

    @property
    def beat_length(self):
        return self.beats.shape[2]

    def with_beats(self, beats):
        """Same metadata, new beat values (shape-preserving)."""
        return HeartbeatTensor(
            beats=beats,
            original_lengths=self.original_lengths.copy(),
            sample_rate_hz=self.sample_rate_hz,
            channel_names=self.channel_names,
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise at a target SNR, seeded for replay."""

    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise DataError("invalid noise spec: snr_db must be finite")


def _resample_linear(values, length):
    """Linearly resample a (m, g) block onto ``length`` uniform points,
    preserving both endpoints."""
    g = values.shape[1]
    if g == length:
        return values.copy()
    grid = np.linspace(0.0, g - 1.0, length)
    base = np.arange(g, dtype=float)
    return np.stack([np.interp(grid, base, row) for row in values])


def segment_beats(signal, bounds, beat_length):
    """Cut a signal at beat onsets and resample each beat to a fixed length.

    Every inter-onset interval is mapped onto ``beat_length`` uniform points
    by linear interpolation; whatever trails the last onset is discarded.
    """
    if beat_length < 4:
        raise DataError("invalid boundaries: beat length must be >= 4")
    onsets = bounds.resolve(signal.num_samples)
    n = len(onsets) - 1
    beats = np.empty((n, signal.num_channels, beat_length))
    lengths = np.empty(n, dtype=int)
    for i in range(n):
        chunk = signal.samples[:, onsets[i] : onsets[i + 1]]
        beats[i] = _resample_linear(chunk, beat_length)
        lengths[i] = chunk.shape[1]
    return HeartbeatTensor(
        beats=beats,
        original_lengths=lengths,
        sample_rate_hz=signal.sample_rate_hz,
        channel_names=signal.channel_names,
    )


def reassemble_signal(tensor):
    """Invert :func:`segment_beats`: resample each beat back to its original
    length and concatenate in order."""
    chunks = [
        _resample_linear(tensor.beats[i], int(tensor.original_lengths[i]))
        for i in range(tensor.num_beats)
    ]
    return MultiChannelSignal(
        samples=np.concatenate(chunks, axis=1),
        sample_rate_hz=tensor.sample_rate_hz,
        channel_names=tensor.channel_names,
    )


def channel_power(tensor):
    """Empirical mean square per channel over all beats."""
    return np.mean(tensor.beats**2, axis=(0, 2))


def add_gaussian_noise(tensor, spec):
    """Add i.i.d. zero-mean Gaussian noise per channel at the requested SNR.

    The noise variance for channel c is ``P_c * 10**(-snr_db/10)`` with
    ``P_c`` the channel's empirical mean square over the clean tensor.
    Identical seeds produce bit-identical output.
    """
    power = channel_power(tensor)
    if np.any(power <= 0):
        raise DataError("degenerate channel: zero signal power")
    sigma = np.sqrt(power * 10.0 ** (-spec.snr_db / 10.0))
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(tensor.beats.shape) * sigma[None, :, None]
    return tensor.with_beats(tensor.beats + noise)


def mse_db(estimate, truth):
    """Mean squared error between two tensors, in dB, floored at -120."""
    if estimate.beats.shape != truth.beats.shape:
        raise DataError("dimension error: tensor shapes differ")
    mse = float(np.mean((estimate.beats - truth.beats) ** 2))
    if mse <= 10.0 ** (MSE_DB_FLOOR / 10.0):
        return MSE_DB_FLOOR
    return max(10.0 * np.log10(mse), MSE_DB_FLOOR)


def read_signal_csv(path):
    """Read a signal CSV: header row of channel names, one sample per row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = [c.strip() for c in next(reader)]
        except StopIteration:
            raise DataError(f"invalid signal file: {path} is empty") from None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise DataError(f"invalid signal file: row {line_no} has {len(row)} columns")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"invalid signal file: non-numeric value on row {line_no}") from None
    if len(rows) < 2:
        raise DataError("invalid signal file: need at least 2 samples")
    return MultiChannelSignal(samples=np.asarray(rows).T, channel_names=tuple(names))


def write_signal_csv(signal, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(signal.channel_names)
        for col in signal.samples.T:
            writer.writerow([repr(float(v)) for v in col])


def read_onsets(path):
    """Read a boundaries file: one onset sample index per line."""
    onsets = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                onsets.append(int(line))
            except ValueError:
                raise DataError(f"invalid boundaries file: line {line_no} is not an integer") from None
    if not onsets:
        raise DataError("invalid boundaries file: no onsets")
    return BeatBoundaries.from_onsets(onsets)
