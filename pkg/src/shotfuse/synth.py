"""Synthetic paired streams with ground truth.

Stands in for real recordings in tests and the evaluation harness: shots
are short band-limited audio bursts over a pink-noise floor, co-located
with half-sine bumps on the radial acceleration and tangential angular
velocity. Distractor events exercise each modality alone. The IMU stream
runs on its own clock, offset from the audio clock by a configurable
amount, which is what the synchronizer must recover.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import LabelSet
from .imu import ACCEL_RANGE_G, GYRO_RANGE_DPS, ImuRecord
from .series import SampleSeries

__all__ = ["SynthConfig", "synthesize"]

AUDIO_RATE = 8000
IMU_RATE = 100.0
NOISE_RMS = 0.005
BURST_MS = 10.0
BURST_F0_HZ = 1000.0
BURST_F1_HZ = 3000.0
BUMP_MS = 150.0
BUMP_ACCEL_RANGE_G = (2.0, 4.0)
BUMP_GYRO_RANGE_DPS = (300.0, 800.0)
GYRO_NOISE_SCALE = 200.0  # deg/s of gyro noise per g of accel noise
AX_BASELINE_G = 0.5
EVENT_MIN_GAP_MS = 1000.0
EDGE_MARGIN_MS = 1000.0


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float = 60.0
    shot_count: int = 20
    audio_snr_db: float = 20.0
    imu_noise_g: float = 0.05
    injected_offset_ms: float = 0.0
    distractor_rate_per_min: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.shot_count < 0 or self.distractor_rate_per_min < 0:
            raise ValueError("counts and rates must be non-negative")
        if self.imu_noise_g < 0:
            raise ValueError("imu_noise_g must be non-negative")
        if self.shot_count * (EVENT_MIN_GAP_MS / 1000.0) > self.duration_s:
            raise ValueError("shot_count does not fit the duration")


def _pink_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """1/f-shaped Gaussian noise, unit RMS."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    f = np.fft.rfftfreq(n)
    scale = np.zeros_like(f)
    scale[1:] = 1.0 / np.sqrt(f[1:])
    shaped = np.fft.irfft(spectrum * scale, n)
    return shaped / np.sqrt(np.mean(shaped**2))


def _burst(rng: np.random.Generator) -> np.ndarray:
    """Windowed 1-3 kHz chirp of one microframe length, unit RMS."""
    n = int(round(BURST_MS / 1000.0 * AUDIO_RATE))
    t = np.arange(n) / AUDIO_RATE
    sweep = (BURST_F1_HZ - BURST_F0_HZ) / (2.0 * BURST_MS / 1000.0)
    phase = 2.0 * np.pi * (BURST_F0_HZ * t + sweep * t**2) + rng.uniform(0.0, 2.0 * np.pi)
    wave = np.hanning(n) * np.sin(phase)
    return wave / np.sqrt(np.mean(wave**2))


def _place_events(rng: np.random.Generator, count: int, duration_ms: float) -> np.ndarray:
    """Sorted event times >= EVENT_MIN_GAP_MS apart, away from the stream edges."""
    if count == 0:
        return np.empty(0)
    span = duration_ms - 2.0 * EDGE_MARGIN_MS
    slack = span - (count - 1) * EVENT_MIN_GAP_MS
    if span <= 0 or slack < 0:
        raise ValueError("cannot place shots")
    offsets = np.sort(rng.uniform(0.0, slack, size=count))
    return EDGE_MARGIN_MS + offsets + np.arange(count) * EVENT_MIN_GAP_MS


def _add_bump(values: np.ndarray, center_idx: int, peak: float) -> None:
    n = int(round(BUMP_MS / 1000.0 * IMU_RATE))
    bump = peak * np.sin(np.pi * (np.arange(n) + 0.5) / n)
    start = center_idx - n // 2
    lo = max(start, 0)
    hi = min(start + n, values.size)
    if lo < hi:
        values[lo:hi] += bump[lo - start : hi - start]


def synthesize(cfg: SynthConfig) -> tuple[SampleSeries, list[ImuRecord], LabelSet]:
    """Generate (audio, imu records, labels), fully determined by cfg.seed.

    Labels are shot times on the audio clock. IMU record timestamps run on
    the IMU clock: a physical event at audio time T lands at IMU timestamp
    T + injected_offset_ms, so the synchronizer should recover
    injected_offset_ms as its (IMU minus audio) offset. Distractor events
    carry only one modality each and are absent from the labels.
    """
    rng = np.random.default_rng(cfg.seed)
    duration_ms = cfg.duration_s * 1000.0
    n_distract = int(round(cfg.distractor_rate_per_min * cfg.duration_s / 60.0))

    total = cfg.shot_count + 2 * n_distract
    times = _place_events(rng, total, duration_ms)
    order = rng.permutation(total)
    shot_times = np.sort(times[order[: cfg.shot_count]])
    audio_only_times = np.sort(times[order[cfg.shot_count : cfg.shot_count + n_distract]])
    imu_only_times = np.sort(times[order[cfg.shot_count + n_distract :]])

    # Audio stream (audio clock starts at 0).
    n_audio = int(round(cfg.duration_s * AUDIO_RATE))
    audio = NOISE_RMS * _pink_noise(n_audio, rng)
    burst_rms = NOISE_RMS * 10.0 ** (cfg.audio_snr_db / 20.0)
    for t in np.concatenate([shot_times, audio_only_times]):
        wave = burst_rms * _burst(rng)
        start = int(round(t / 1000.0 * AUDIO_RATE)) - wave.size // 2
        lo, hi = max(start, 0), min(start + wave.size, n_audio)
        if lo < hi:
            audio[lo:hi] += wave[lo - start : hi - start]
    audio = np.clip(audio, -1.0, 1.0)

    # IMU stream on its own clock.
    n_imu = int(round(cfg.duration_s * IMU_RATE))
    ax = AX_BASELINE_G + rng.normal(0.0, cfg.imu_noise_g, n_imu)
    ay = rng.normal(0.0, cfg.imu_noise_g, n_imu)
    az = rng.normal(0.0, cfg.imu_noise_g, n_imu)
    gyro_noise = GYRO_NOISE_SCALE * cfg.imu_noise_g
    gx = rng.normal(0.0, gyro_noise, n_imu)
    gy = rng.normal(0.0, gyro_noise, n_imu)
    gz = rng.normal(0.0, gyro_noise, n_imu)
    for t in np.concatenate([shot_times, imu_only_times]):
        center = int(round((t + cfg.injected_offset_ms) / 1000.0 * IMU_RATE))
        accel_peak = rng.uniform(*BUMP_ACCEL_RANGE_G)
        gyro_peak = rng.uniform(*BUMP_GYRO_RANGE_DPS)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        _add_bump(ax, center, accel_peak)
        _add_bump(gy, center, gyro_peak * np.cos(angle))
        _add_bump(gz, center, gyro_peak * np.sin(angle))

    np.clip(ax, -ACCEL_RANGE_G, ACCEL_RANGE_G, out=ax)
    np.clip(ay, -ACCEL_RANGE_G, ACCEL_RANGE_G, out=ay)
    np.clip(az, -ACCEL_RANGE_G, ACCEL_RANGE_G, out=az)
    np.clip(gx, -GYRO_RANGE_DPS, GYRO_RANGE_DPS, out=gx)
    np.clip(gy, -GYRO_RANGE_DPS, GYRO_RANGE_DPS, out=gy)
    np.clip(gz, -GYRO_RANGE_DPS, GYRO_RANGE_DPS, out=gz)

    period = 1000.0 / IMU_RATE
    records = [
        ImuRecord(k * period, ax[k], ay[k], az[k], gx[k], gy[k], gz[k])
        for k in range(n_imu)
    ]
    return (
        SampleSeries(AUDIO_RATE, 0.0, audio),
        records,
        LabelSet(shot_times),
    )
