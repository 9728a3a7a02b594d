"""Uniform sample series and the shared DSP primitives.

Every signal in the pipeline (raw audio, frame energies, likelihood
functions, IMU components) is a :class:`SampleSeries`: a uniformly sampled
scalar sequence with a rate and a start timestamp. Sample ``k`` of a series
is located at ``start_time + 1000 * k / rate`` milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as _sig

__all__ = [
    "SampleSeries",
    "FirKernel",
    "IirCoefficients",
    "TRIANGLE_TAPS",
    "fir_convolve",
    "design_lowpass",
    "iir_filter",
    "triangle_smooth",
    "cross_correlate",
]


def _readonly_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SampleSeries:
    """Immutable uniformly sampled scalar time series.

    rate is in Hz, start_time in milliseconds since the stream epoch.
    """

    rate: float
    start_time: float = 0.0
    values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        object.__setattr__(self, "values", _readonly_array(self.values, "values"))

    def __len__(self) -> int:
        return self.values.size

    @property
    def period_ms(self) -> float:
        return 1000.0 / self.rate

    @property
    def end_time(self) -> float:
        """Timestamp one sample period past the last sample."""
        return self.start_time + len(self) * self.period_ms

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) * self.period_ms

    def index_at(self, t_ms: float) -> int:
        """Nearest sample index for a timestamp (may fall outside the series)."""
        return int(round((t_ms - self.start_time) / self.period_ms))

    def with_values(self, values, start_time: float | None = None) -> "SampleSeries":
        start = self.start_time if start_time is None else start_time
        return SampleSeries(self.rate, start, values)

    def shifted(self, delta_ms: float) -> "SampleSeries":
        """Same samples relocated in time by delta_ms."""
        return SampleSeries(self.rate, self.start_time + delta_ms, self.values)

    def slice_time(self, t0_ms: float, t1_ms: float) -> "SampleSeries":
        """Sub-series of samples with timestamps in [t0_ms, t1_ms)."""
        eps = 1e-9
        i0 = int(np.ceil((t0_ms - self.start_time) / self.period_ms - eps))
        i1 = int(np.ceil((t1_ms - self.start_time) / self.period_ms - eps))
        i0 = max(i0, 0)
        i1 = min(max(i1, i0), len(self))
        return SampleSeries(self.rate, self.start_time + i0 * self.period_ms, self.values[i0:i1])


@dataclass(frozen=True, eq=False)
class FirKernel:
    """Finite impulse response filter taps (tap 0 multiplies the current sample)."""

    taps: np.ndarray

    def __post_init__(self):
        arr = _readonly_array(self.taps, "taps")
        if arr.size < 1:
            raise ValueError("kernel needs at least one tap")
        object.__setattr__(self, "taps", arr)

    def __len__(self) -> int:
        return self.taps.size


@dataclass(frozen=True, eq=False)
class IirCoefficients:
    """Rational filter coefficients; feedback[0] is normalized to 1."""

    feedforward: np.ndarray
    feedback: np.ndarray

    def __post_init__(self):
        b = np.array(self.feedforward, dtype=float)
        a = np.array(self.feedback, dtype=float)
        if a.size < 1 or a[0] == 0.0:
            raise ValueError("feedback must have a nonzero leading coefficient")
        b, a = b / a[0], a / a[0]
        object.__setattr__(self, "feedforward", _readonly_array(b, "feedforward"))
        object.__setattr__(self, "feedback", _readonly_array(a, "feedback"))

    def is_stable(self) -> bool:
        """True iff all feedback-polynomial roots lie strictly inside the unit circle."""
        if len(self.feedback) == 1:
            return True
        return bool(np.all(np.abs(np.roots(self.feedback)) < 1.0))


#: Peak-spreading kernel used before stream alignment, normalized to unit sum.
TRIANGLE_TAPS = np.array([1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0]) / 16.0


def fir_convolve(x: SampleSeries, w: FirKernel) -> SampleSeries:
    """Causal convolution, "same" length: out[k] = sum_t taps[t] * x[k - t].

    Samples before the start of the series are treated as zero; rate and
    start_time carry over, so indexes stay aligned with timestamps.
    """
    if len(x) == 0:
        raise ValueError("empty signal")
    out = np.convolve(x.values, w.taps)[: len(x)]
    return x.with_values(out)


def design_lowpass(cutoff_hz: float, rate_hz: float, order: int = 2) -> IirCoefficients:
    """Butterworth low-pass design (2nd order by default); unity DC gain."""
    if not 0.0 < cutoff_hz < rate_hz / 2.0:
        raise ValueError("invalid cutoff")
    b, a = _sig.butter(order, cutoff_hz, btype="low", fs=rate_hz)
    return IirCoefficients(b, a)


def iir_filter(x: SampleSeries, c: IirCoefficients) -> SampleSeries:
    """Direct-form recursion with zero initial state; length preserved."""
    if len(x) == 0:
        raise ValueError("empty signal")
    if not c.is_stable():
        raise ValueError("unstable filter")
    out = _sig.lfilter(c.feedforward, c.feedback, x.values)
    return x.with_values(out)


def triangle_smooth(x: SampleSeries) -> SampleSeries:
    """Centered convolution with the normalized (1,2,3,4,3,2,1) kernel.

    Zero padding at the edges; a constant series is preserved in the interior.
    """
    if len(x) == 0:
        raise ValueError("empty signal")
    half = len(TRIANGLE_TAPS) // 2
    full = np.convolve(x.values, TRIANGLE_TAPS)
    return x.with_values(full[half : half + len(x)])


def _normalized_correlation(u: np.ndarray, v: np.ndarray) -> float:
    du = u - u.mean()
    dv = v - v.mean()
    denom = np.sqrt(np.dot(du, du) * np.dot(dv, dv))
    if denom == 0.0:
        # A constant segment carries no alignment information.
        return 0.0
    return float(np.dot(du, dv) / denom)


def cross_correlate(
    a: SampleSeries, b: SampleSeries, max_lag: int
) -> list[tuple[int, float]]:
    """Normalized correlation of a[k] against b[k + lag] for each lag.

    Returns (lag, correlation) pairs for every integer lag in
    [-max_lag, +max_lag], in lag order. Each overlap window is zero-meaned
    and unit-normed, so correlations lie in [-1, 1]; a zero-variance window
    yields 0. If ``b`` is ``a`` delayed by k samples, the maximum sits at
    lag k.
    """
    if a.rate != b.rate:
        raise ValueError("rate mismatch")
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty signal")
    if max_lag < 0 or max_lag >= min(len(a), len(b)):
        raise ValueError("max_lag must be smaller than both series")
    out = []
    for lag in range(-max_lag, max_lag + 1):
        i0 = max(0, -lag)
        i1 = min(len(a), len(b) - lag)
        sa = a.values[i0:i1]
        sb = b.values[i0 + lag : i1 + lag]
        out.append((lag, _normalized_correlation(sa, sb)))
    return out
