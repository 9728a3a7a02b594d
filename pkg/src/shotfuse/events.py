"""Shot events, ground-truth labels, and tolerance-based evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ShotEvent", "LabelSet", "EvalReport", "dedup", "evaluate"]


@dataclass(frozen=True)
class ShotEvent:
    """A detected (or hypothesized) shot: timestamp in ms plus a score.

    Scores from the fused classifier are vote fractions in [0, 1]; the
    audio-only path emits raw thresholded likelihood values instead.
    """

    time_ms: float
    score: float


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Ground-truth shot timestamps (ms), strictly ascending and non-negative."""

    shots: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        arr = np.array(self.shots, dtype=float)
        if arr.ndim != 1:
            raise ValueError("shots must be one-dimensional")
        if arr.size and arr[0] < 0:
            raise ValueError("shot timestamps must be non-negative")
        if arr.size > 1 and not np.all(np.diff(arr) > 0):
            raise ValueError("shot timestamps must be strictly ascending")
        arr.flags.writeable = False
        object.__setattr__(self, "shots", arr)

    def __len__(self) -> int:
        return self.shots.size


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f_score: float
    true_positives: int
    false_positives: int
    false_negatives: int
    match_tolerance_ms: float

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "match_tolerance_ms": self.match_tolerance_ms,
        }


def dedup(events: list[ShotEvent], window_ms: float = 500.0) -> list[ShotEvent]:
    """Keep the first of any run of events closer than window_ms.

    An event is dropped iff it falls within window_ms after the previously
    kept event; the first event is always kept.
    """
    kept: list[ShotEvent] = []
    last_time = None
    for e in events:
        if last_time is not None and e.time_ms < last_time:
            raise ValueError("unordered events")
        last_time = e.time_ms
        if kept and e.time_ms - kept[-1].time_ms <= window_ms:
            continue
        kept.append(e)
    return kept


def evaluate(
    events: list[ShotEvent], labels: LabelSet, tolerance_ms: float = 100.0
) -> EvalReport:
    """Score detections against labels with greedy one-to-one matching.

    Labels are processed in time order; each label claims the nearest
    still-unmatched event within +/- tolerance_ms (ties go to the earlier
    event). Matched pairs count as true positives, leftover events as false
    positives, leftover labels as false negatives. Precision is 1 when there
    are no events and recall 1 when there are no labels (vacuous truth).
    """
    times = np.array([e.time_ms for e in events], dtype=float)
    order = np.argsort(times, kind="stable")
    times = times[order]
    matched = np.zeros(times.size, dtype=bool)

    tp = 0
    for t in labels.shots:
        free = np.flatnonzero(~matched)
        if free.size == 0:
            break
        dist = np.abs(times[free] - t)
        k = int(np.argmin(dist))
        if dist[k] <= tolerance_ms:
            matched[free[k]] = True
            tp += 1

    fp = times.size - tp
    fn = len(labels) - tp
    precision = tp / (tp + fp) if times.size else 1.0
    recall = tp / (tp + fn) if len(labels) else 1.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(precision, recall, f_score, tp, fp, fn, tolerance_ms)
