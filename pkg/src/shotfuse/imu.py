"""Motion shot-likelihood pipeline: axis decomposition, low-pass, peak function.

A swing is roughly circular motion of the forearm, so the x axis (along the
forearm) carries radial acceleration and the y/z magnitude the tangential
part; the same split applies to angular velocity. The peak function is the
product of the macroframe-mean-subtracted radial acceleration and
tangential angular velocity, which spikes at impacts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import SampleSeries, design_lowpass, iir_filter

__all__ = [
    "ACCEL_RANGE_G",
    "GYRO_RANGE_DPS",
    "IMU_RATE_HZ",
    "LOWPASS_CUTOFF_HZ",
    "IPF_WINDOW",
    "ImuRecord",
    "ImuComponents",
    "decompose",
    "prepare_components",
    "ipf",
    "imu_likelihood",
]

ACCEL_RANGE_G = 8.0
GYRO_RANGE_DPS = 2000.0
IMU_RATE_HZ = 100.0
LOWPASS_CUTOFF_HZ = 10.0
#: Macroframe of the peak function: 4 past samples, self, 5 future samples.
IPF_WINDOW = 10


@dataclass(frozen=True)
class ImuRecord:
    """One IMU sample: timestamp (ms), acceleration (g), angular velocity (deg/s)."""

    t: float
    ax: float
    ay: float
    az: float
    gx: float
    gy: float
    gz: float

    def __post_init__(self):
        fields = (self.t, self.ax, self.ay, self.az, self.gx, self.gy, self.gz)
        if not all(np.isfinite(v) for v in fields):
            raise ValueError("record values must be finite")
        if max(abs(self.ax), abs(self.ay), abs(self.az)) > ACCEL_RANGE_G:
            raise ValueError(f"acceleration exceeds +/-{ACCEL_RANGE_G:g} g")
        if max(abs(self.gx), abs(self.gy), abs(self.gz)) > GYRO_RANGE_DPS:
            raise ValueError(f"angular velocity exceeds +/-{GYRO_RANGE_DPS:g} deg/s")


@dataclass(frozen=True, eq=False)
class ImuComponents:
    """Radial/tangential split of the IMU stream, one series per component."""

    a_rad: SampleSeries
    a_tan: SampleSeries
    w_rad: SampleSeries
    w_tan: SampleSeries

    def __post_init__(self):
        first = self.a_rad
        for s in (self.a_tan, self.w_rad, self.w_tan):
            if s.rate != first.rate or s.start_time != first.start_time or len(s) != len(first):
                raise ValueError("component series must share rate, start and length")


def _regrid(t: np.ndarray, columns: np.ndarray, rate: float) -> np.ndarray:
    """Snap jittered timestamps onto an exact grid by nearest-sample assignment."""
    if t.size == 1:
        return columns
    period = 1000.0 / rate
    n = int(round((t[-1] - t[0]) / period)) + 1
    grid = t[0] + np.arange(n) * period
    right = np.searchsorted(t, grid)
    right = np.clip(right, 1, t.size - 1)
    left = right - 1
    pick = np.where(np.abs(t[left] - grid) <= np.abs(t[right] - grid), left, right)
    return columns[:, pick]


def decompose(records: list[ImuRecord], rate_hz: float = IMU_RATE_HZ) -> ImuComponents:
    """Split records into radial/tangential acceleration and angular velocity.

    Radial terms are the x-axis readings; tangential terms are the y/z
    magnitudes (hence non-negative). Timestamps must be strictly increasing
    with inter-sample gaps inside [period/2, 2*period].
    """
    if not records:
        raise ValueError("empty stream")
    t = np.array([r.t for r in records], dtype=float)
    period = 1000.0 / rate_hz
    if t.size > 1:
        gaps = np.diff(t)
        if np.any(gaps <= 0):
            raise ValueError("unordered stream")
        if np.any(gaps > 2 * period) or np.any(gaps < period / 2):
            raise ValueError("stream gap")

    cols = np.array(
        [[r.ax for r in records], [r.ay for r in records], [r.az for r in records],
         [r.gx for r in records], [r.gy for r in records], [r.gz for r in records]]
    )
    ax, ay, az, gx, gy, gz = _regrid(t, cols, rate_hz)

    start = float(t[0])
    return ImuComponents(
        a_rad=SampleSeries(rate_hz, start, ax),
        a_tan=SampleSeries(rate_hz, start, np.hypot(ay, az)),
        w_rad=SampleSeries(rate_hz, start, gx),
        w_tan=SampleSeries(rate_hz, start, np.hypot(gy, gz)),
    )


def prepare_components(
    records: list[ImuRecord],
    rate_hz: float = IMU_RATE_HZ,
    cutoff_hz: float = LOWPASS_CUTOFF_HZ,
) -> ImuComponents:
    """Decompose and low-pass the two components the peak function consumes.

    Only a_rad and w_tan are filtered; a_tan and w_rad stay raw for the
    fusion feature extractor.
    """
    comps = decompose(records, rate_hz)
    lp = design_lowpass(cutoff_hz, rate_hz)
    return ImuComponents(
        a_rad=iir_filter(comps.a_rad, lp),
        a_tan=comps.a_tan,
        w_rad=comps.w_rad,
        w_tan=iir_filter(comps.w_tan, lp),
    )


def ipf(components: ImuComponents) -> SampleSeries:
    """Product of mean-subtracted a_rad and w_tan over a 10-sample macroframe.

    The window at index i spans samples i-4 .. i+5; only indices with the
    full window are emitted, so the output is 9 samples shorter and starts
    4 sample periods later. Callers are expected to pass low-passed a_rad
    and w_tan (see :func:`prepare_components`).
    """
    a = components.a_rad.values
    w = components.w_tan.values
    n = a.size
    if n < IPF_WINDOW:
        raise ValueError("insufficient context")
    kernel = np.ones(IPF_WINDOW) / IPF_WINDOW
    mean_a = np.convolve(a, kernel, mode="valid")
    mean_w = np.convolve(w, kernel, mode="valid")
    lead = IPF_WINDOW // 2 - 1  # 4 past samples
    out = (a[lead : n - 5] - mean_a) * (w[lead : n - 5] - mean_w)
    src = components.a_rad
    return SampleSeries(src.rate, src.start_time + lead * src.period_ms, out)


def imu_likelihood(records: list[ImuRecord], rate_hz: float = IMU_RATE_HZ) -> SampleSeries:
    """Full motion pipeline: decompose, low-pass at 10 Hz, peak function."""
    return ipf(prepare_components(records, rate_hz))
