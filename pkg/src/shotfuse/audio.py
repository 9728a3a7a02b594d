"""Audio shot-likelihood pipeline: front FIR filter, frame energy, peak function.

The microphone stream is filtered, cut into short non-overlapping
microframes whose energy is summed, and each frame's energy is compared
against the mean of its surrounding macroframe. The resulting peak function
is a 100 Hz likelihood series that spikes at impact sounds; adding the
model bias and thresholding at zero turns it into a detector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import ShotEvent
from .series import FirKernel, SampleSeries, fir_convolve

__all__ = [
    "DEFAULT_FILTER_TAPS",
    "AudioConfig",
    "FilterModel",
    "LabeledAudioWindow",
    "short_time_energy",
    "apf",
    "audio_likelihood",
    "detect_audio",
]

DEFAULT_FILTER_TAPS = 23


@dataclass(frozen=True)
class AudioConfig:
    """Frame geometry of the audio front end.

    Defaults: 8 kHz input, 10 ms microframes (80 samples), and a macroframe
    of 5 microframes of context on each side (11 total, 110 ms).
    """

    sample_rate: int = 8000
    microframe_ms: int = 10
    macroframe_half: int = 5

    def __post_init__(self):
        if self.sample_rate <= 0 or self.microframe_ms <= 0:
            raise ValueError("sample_rate and microframe_ms must be positive")
        if (self.sample_rate * self.microframe_ms) % 1000 != 0:
            raise ValueError("microframe must span a whole number of samples")
        if self.macroframe_half < 1:
            raise ValueError("macroframe_half must be at least 1")

    @property
    def microframe_samples(self) -> int:
        return self.sample_rate * self.microframe_ms // 1000

    @property
    def frame_rate(self) -> float:
        """Rate of the energy / likelihood series (100 Hz by default)."""
        return 1000.0 / self.microframe_ms

    @property
    def macroframe_frames(self) -> int:
        return 2 * self.macroframe_half + 1


@dataclass(frozen=True, eq=False)
class FilterModel:
    """Trainable audio front end: FIR weights plus the decision bias."""

    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        arr = np.array(self.weights, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if not (np.all(np.isfinite(arr)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "weights", arr)

    def kernel(self) -> FirKernel:
        return FirKernel(self.weights)


@dataclass(frozen=True, eq=False)
class LabeledAudioWindow:
    """An audio snippet with a binary shot label.

    The snippet must be long enough to produce at least one full-context
    likelihood value; training uses the value at its center microframe.
    """

    samples: np.ndarray = field(default_factory=lambda: np.empty(0))
    label: int = 0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)


def short_time_energy(x: SampleSeries, cfg: AudioConfig = AudioConfig()) -> SampleSeries:
    """Sum of squared samples per non-overlapping microframe.

    A trailing partial microframe is discarded. Each output value is
    timestamped at the center of its microframe.
    """
    if x.rate != cfg.sample_rate:
        raise ValueError("sample rate mismatch")
    n = cfg.microframe_samples
    if len(x) < n:
        raise ValueError("insufficient samples")
    frames = len(x) // n
    blocks = x.values[: frames * n].reshape(frames, n)
    energy = np.sum(blocks * blocks, axis=1)
    return SampleSeries(cfg.frame_rate, x.start_time + cfg.microframe_ms / 2.0, energy)


def apf(energy: SampleSeries, cfg: AudioConfig = AudioConfig()) -> SampleSeries:
    """Frame energy minus the mean energy of its centered macroframe.

    Only indices with a full macroframe of context are emitted, so the
    output is shorter by 2 * macroframe_half frames and starts
    macroframe_half frames later (50 ms of inherent lookahead by default).
    """
    m = cfg.macroframe_frames
    h = cfg.macroframe_half
    if len(energy) < m:
        raise ValueError("insufficient context")
    window_mean = np.convolve(energy.values, np.ones(m) / m, mode="valid")
    out = energy.values[h : len(energy) - h] - window_mean
    return SampleSeries(energy.rate, energy.start_time + h * energy.period_ms, out)


def audio_likelihood(
    x: SampleSeries, model: FilterModel, cfg: AudioConfig = AudioConfig()
) -> SampleSeries:
    """Likelihood series of the filtered stream; the bias is not applied here.

    Downstream consumers (synchronizer, fusion) want the raw peak function;
    only :func:`detect_audio` folds in the decision bias.
    """
    return apf(short_time_energy(fir_convolve(x, model.kernel()), cfg), cfg)


def detect_audio(
    x: SampleSeries, model: FilterModel, cfg: AudioConfig = AudioConfig()
) -> list[ShotEvent]:
    """One event per microframe whose biased likelihood is strictly positive."""
    likelihood = audio_likelihood(x, model, cfg)
    scores = likelihood.values + model.bias
    hits = np.flatnonzero(scores > 0.0)
    times = likelihood.start_time + hits * likelihood.period_ms
    return [ShotEvent(float(t), float(s)) for t, s in zip(times, scores[hits])]
