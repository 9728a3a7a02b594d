"""Cross-modal stream alignment from the two likelihood series.

Sensor handlers come up at different times, so the audio and IMU streams
disagree by an unknown offset (typically a few hundred ms). Both
likelihood series are quantized to five levels, spread with a triangle
kernel so misalignment is penalized gradually, and cross-correlated; the
lag of the correlation peak is the offset. A fresh window re-estimate
validates the lock before the synchronizer is cut off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import SampleSeries, cross_correlate, triangle_smooth

__all__ = [
    "QUANT_LEVELS",
    "QuantizerModel",
    "OffsetEstimate",
    "fit_quantizer",
    "self_calibrate_quantizer",
    "quantize",
    "estimate_offset",
    "validate_offset",
]

QUANT_LEVELS = 5
MIN_OVERLAP_SECONDS = 5.0
VALIDATION_OFFSET_TOLERANCE_MS = 50.0
VALIDATION_MIN_CORRELATION = 0.4


def _quantile_boundaries(values, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size < QUANT_LEVELS:
        raise ValueError("insufficient calibration data")
    # Linear-interpolation percentiles, fixed so boundaries are reproducible.
    b = np.percentile(v, [20.0, 40.0, 60.0, 80.0])
    if np.any(np.diff(b) <= 0):
        raise ValueError("degenerate distribution")
    return b


@dataclass(frozen=True, eq=False)
class QuantizerModel:
    """Per-modality level boundaries splitting values into 5 quantized levels."""

    apf_boundaries: np.ndarray
    ipf_boundaries: np.ndarray

    def __post_init__(self):
        for name in ("apf_boundaries", "ipf_boundaries"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (QUANT_LEVELS - 1,):
                raise ValueError(f"{name} must hold exactly 4 values")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly ascending")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class OffsetEstimate:
    """Estimated clock offset: IMU time minus audio time, in milliseconds."""

    offset_ms: float
    peak_correlation: float
    window_seconds: float


def fit_quantizer(apf_peak_values, ipf_peak_values) -> QuantizerModel:
    """Quintile boundaries from shot-conditional peak value samples.

    Boundaries are the 20/40/60/80 percentiles of each empirical
    distribution. Needs at least 5 values per modality and a non-degenerate
    spread.
    """
    return QuantizerModel(
        _quantile_boundaries(apf_peak_values, "apf"),
        _quantile_boundaries(ipf_peak_values, "ipf"),
    )


def self_calibrate_quantizer(
    apf: SampleSeries, ipf: SampleSeries, top_fraction: float = 0.1
) -> QuantizerModel:
    """Quintiles of the upper decile of each live series.

    Used when no labeled shots are available: the strongest values of a
    snippet stand in for the shot-conditional peak distribution.
    """

    def upper(values: np.ndarray) -> np.ndarray:
        cut = np.percentile(values, 100.0 * (1.0 - top_fraction))
        return values[values >= cut]

    return QuantizerModel(
        _quantile_boundaries(upper(apf.values), "apf"),
        _quantile_boundaries(upper(ipf.values), "ipf"),
    )


def quantize(x: SampleSeries, boundaries) -> SampleSeries:
    """Map each value to its level in {0..4}; intervals are right-closed.

    Level k collects values in (b[k-1], b[k]] with b[-1] = -inf and
    b[4] = +inf, so a value equal to a boundary takes the lower level.
    """
    b = np.asarray(boundaries, dtype=float)
    levels = np.searchsorted(b, x.values, side="left").astype(float)
    return x.with_values(levels)


def estimate_offset(
    apf: SampleSeries,
    ipf: SampleSeries,
    q: QuantizerModel,
    max_lag_ms: float = 2000.0,
) -> OffsetEstimate:
    """Offset of the IMU stream relative to the audio stream.

    Both series are quantized and triangle-smoothed, then cross-correlated
    over lags within max_lag_ms. Ties between equal correlation maxima
    break toward the smallest |lag| (the clocks are near-aligned a priori).
    The differing series start times are folded into the reported offset.
    """
    if apf.rate != ipf.rate:
        raise ValueError("rate mismatch")
    overlap_ms = min(apf.end_time, ipf.end_time) - max(apf.start_time, ipf.start_time)
    # One period of slack so sub-period start misalignment cannot trip the check.
    if overlap_ms < MIN_OVERLAP_SECONDS * 1000.0 - apf.period_ms:
        raise ValueError("snippet too short")

    qa = triangle_smooth(quantize(apf, q.apf_boundaries))
    qi = triangle_smooth(quantize(ipf, q.ipf_boundaries))
    max_lag = int(round(max_lag_ms / apf.period_ms))
    max_lag = min(max_lag, min(len(qa), len(qi)) - 1)

    correlations = cross_correlate(qa, qi, max_lag)
    best_lag, best_corr = min(
        correlations, key=lambda lc: (-lc[1], abs(lc[0]), lc[0])
    )
    offset_ms = best_lag * apf.period_ms + (ipf.start_time - apf.start_time)
    return OffsetEstimate(float(offset_ms), float(best_corr), overlap_ms / 1000.0)


def validate_offset(
    apf: SampleSeries,
    ipf: SampleSeries,
    q: QuantizerModel,
    candidate: OffsetEstimate,
    validation_seconds: float = 5.0,
    max_lag_ms: float = 2000.0,
) -> bool:
    """Re-estimate on the window following the estimation snippet.

    True iff the fresh estimate lands within +/-50 ms of the candidate and
    its correlation peak reaches 0.4. Requires both streams to extend
    validation_seconds past the snippet used for the candidate.
    """
    t0 = max(apf.start_time, ipf.start_time) + candidate.window_seconds * 1000.0
    t1 = t0 + validation_seconds * 1000.0
    if min(apf.end_time, ipf.end_time) < t1:
        raise ValueError("validation window unavailable")
    fresh = estimate_offset(apf.slice_time(t0, t1), ipf.slice_time(t0, t1), q, max_lag_ms)
    return (
        abs(fresh.offset_ms - candidate.offset_ms) <= VALIDATION_OFFSET_TOLERANCE_MS
        and fresh.peak_correlation >= VALIDATION_MIN_CORRELATION
    )
