"""Synthetic quasi-periodic test signals built from Gaussian kernels.

Each channel's beat template is a sum of Gaussian bumps on the unit phase
interval; per-beat amplitude and width jitter makes consecutive beats
similar but not identical, which is what the inter-beat stage exploits.
"""

from dataclasses import dataclass

import numpy as np

from .beats import HeartbeatTensor, MultiChannelSignal
from .errors import DataError

# P-QRS-T style template: (center phase, width, amplitude)
DEFAULT_KERNELS = (
    (0.16, 0.035, 0.18),
    (0.295, 0.010, -0.22),
    (0.32, 0.014, 1.00),
    (0.35, 0.010, -0.28),
    (0.58, 0.055, 0.38),
)
# distinct per-channel scaling so channels are correlated but not identical
CHANNEL_SCALES = (1.0, 0.7, 1.3, 0.85)


@dataclass(frozen=True)
class SyntheticEcgSpec:
    """Kernel-template beat generator settings.

    ``kernels`` is one list of (center, width, amplitude) triples per
    channel; ``None`` selects the default template scaled per channel, an
    explicitly empty list yields a silent channel. ``beat_jitter`` is the
    relative standard deviation applied to both amplitudes and widths,
    drawn per beat and kernel (shared across channels, like a common
    underlying rhythm).
    """

    num_beats: int = 200
    beat_length: int = 300
    num_channels: int = 2
    kernels: tuple = None
    beat_jitter: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.num_beats < 1 or self.beat_length < 1 or self.num_channels < 1:
            raise DataError("invalid synthetic spec: sizes must be >= 1")
        if self.beat_jitter < 0:
            raise DataError("invalid synthetic spec: jitter must be nonnegative")
        kernels = self.kernels
        if kernels is None:
            kernels = tuple(
                tuple(
                    (c, w, a * CHANNEL_SCALES[ch % len(CHANNEL_SCALES)])
                    for c, w, a in DEFAULT_KERNELS
                )
                for ch in range(self.num_channels)
            )
        else:
            kernels = tuple(tuple((float(c), float(w), float(a)) for c, w, a in ch) for ch in kernels)
            if len(kernels) != self.num_channels:
                raise DataError("invalid synthetic spec: one kernel list per channel")
            for ch in kernels:
                for center, width, _ in ch:
                    if not 0.0 <= center < 1.0:
                        raise DataError("invalid synthetic spec: centers must lie in [0, 1)")
                    if width <= 0:
                        raise DataError("invalid synthetic spec: widths must be positive")
        object.__setattr__(self, "kernels", kernels)


def generate_synthetic_ecg(spec):
    """Render the spec into a clean beat tensor and its concatenated signal.

    Deterministic per seed: the same spec always produces the same arrays.
    """
    rng = np.random.default_rng(spec.seed)
    phases = np.arange(spec.beat_length) / spec.beat_length
    n_kernels = max((len(ch) for ch in spec.kernels), default=0)

    beats = np.zeros((spec.num_beats, spec.num_channels, spec.beat_length))
    # jitter factors shared across channels: (beats, kernels)
    amp_jit = 1.0 + spec.beat_jitter * rng.standard_normal((spec.num_beats, n_kernels))
    width_jit = 1.0 + spec.beat_jitter * rng.standard_normal((spec.num_beats, n_kernels))
    width_jit = np.maximum(width_jit, 0.2)

    for ch, ch_kernels in enumerate(spec.kernels):
        for k, (center, width, amp) in enumerate(ch_kernels):
            a = amp * amp_jit[:, k]
            w = width * width_jit[:, k]
            beats[:, ch, :] += a[:, None] * np.exp(
                -((phases[None, :] - center) ** 2) / (2.0 * w[:, None] ** 2)
            )

    tensor = HeartbeatTensor(
        beats=beats,
        sample_rate_hz=float(spec.beat_length),
        channel_names=tuple(f"ch{i}" for i in range(spec.num_channels)),
    )
    signal = MultiChannelSignal(
        samples=np.concatenate(list(beats), axis=1),
        sample_rate_hz=float(spec.beat_length),
        channel_names=tensor.channel_names,
    )
    return tensor, signal


def parse_kernel_spec(text):
    """Parse ``center:width:amplitude`` triples separated by semicolons."""
    kernels = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        pieces = part.split(":")
        if len(pieces) != 3:
            raise DataError(f"invalid kernel spec: {part!r} (want center:width:amplitude)")
        kernels.append(tuple(float(p) for p in pieces))
    if not kernels:
        raise DataError("invalid kernel spec: empty")
    return tuple(kernels)
