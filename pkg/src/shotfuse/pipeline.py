"""End-to-end workflows: training data preparation, sync, detection, evaluation.

These functions are the substance behind the CLI subcommands; they work on
in-memory objects plus paths and return plain dicts where the CLI needs
something to print.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioConfig, FilterModel, LabeledAudioWindow, audio_likelihood
from .dataio import (
    ensure_dir,
    load_filter_model,
    load_forest_model,
    read_imu_csv,
    read_labels_csv,
    read_wav,
    save_filter_model,
    save_forest_model,
    write_events_csv,
    write_series_csv,
)
from .events import LabelSet, ShotEvent, dedup, evaluate
from .forest import classify, train_forest
from .fusion import (
    NEIGHBORHOOD_MS,
    Candidate,
    audio_only_events,
    detect_shots,
    extract_features,
    select_candidates,
)
from .imu import ipf, prepare_components
from .series import SampleSeries
from .sync import (
    OffsetEstimate,
    QuantizerModel,
    estimate_offset,
    fit_quantizer,
    self_calibrate_quantizer,
    validate_offset,
)
from .training import TrainConfig, train_filter, window_score

__all__ = [
    "PipelineOptions",
    "windows_from_labels",
    "shuffle_split",
    "window_metrics",
    "shot_peak_values",
    "labeled_quantizer",
    "synchronize",
    "candidate_dataset",
    "calibrate_ipf_threshold",
    "train_filter_workflow",
    "train_forest_workflow",
    "run_pipeline",
]

#: Candidates within this distance of a ground-truth shot count as positive.
CANDIDATE_LABEL_TOLERANCE_MS = 150.0
#: Shortest snippet the offset estimator accepts.
MIN_SYNC_WINDOW_SECONDS = 5.0
#: Search window around a label when collecting APF peak values.
LABEL_PEAK_WINDOW_MS = 500.0
#: Wider IPF search window: the IMU clock may be off by a few hundred ms.
UNSYNCED_PEAK_WINDOW_MS = 1500.0


def windows_from_labels(
    audio: SampleSeries,
    labels: LabelSet,
    audio_cfg: AudioConfig = AudioConfig(),
    window_frames: int = 21,
    negatives_per_positive: float = 20.0,
    min_label_distance_ms: float = 500.0,
    seed: int = 0,
) -> list[LabeledAudioWindow]:
    """Cut labeled training windows out of a recorded stream.

    One positive window per label, centered on the stream microframe that
    contains it; windows snap to the stream's own frame grid so training
    sees exactly the frame phases the live detector will see. Negative
    windows are sampled uniformly at least min_label_distance_ms away from
    every label, negatives_per_positive of them per positive.
    """
    rng = np.random.default_rng(seed)
    frame_len = audio_cfg.microframe_samples
    span = window_frames * frame_len
    half = window_frames // 2
    n_frames = len(audio) // frame_len

    def cut(center_ms: float) -> np.ndarray | None:
        frame = int((center_ms - audio.start_time) / audio_cfg.microframe_ms)
        start_frame = frame - half
        if start_frame < 0 or start_frame + window_frames > n_frames:
            return None
        start = start_frame * frame_len
        return audio.values[start : start + span]

    windows = []
    for t in labels.shots:
        samples = cut(float(t))
        if samples is not None:
            windows.append(LabeledAudioWindow(samples, 1))
    n_pos = len(windows)
    if n_pos == 0:
        return windows

    wanted = int(round(negatives_per_positive * n_pos))
    half_ms = span / 2 / audio_cfg.sample_rate * 1000.0
    lo = audio.start_time + half_ms
    hi = audio.end_time - half_ms
    attempts = 0
    negatives = 0
    while negatives < wanted and attempts < 100 * wanted:
        attempts += 1
        t = rng.uniform(lo, hi)
        if len(labels) and np.min(np.abs(labels.shots - t)) < min_label_distance_ms:
            continue
        samples = cut(t)
        if samples is None:
            continue
        windows.append(LabeledAudioWindow(samples, 0))
        negatives += 1
    return windows


def shuffle_split(items: list, fraction: float = 0.8, seed: int = 0) -> tuple[list, list]:
    """Seeded shuffle split; first part gets round(fraction * n) items."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(items))
    cut = int(round(fraction * len(items)))
    return [items[i] for i in order[:cut]], [items[i] for i in order[cut:]]


def window_metrics(
    model: FilterModel, windows: list[LabeledAudioWindow], audio_cfg: AudioConfig = AudioConfig()
) -> dict:
    """Window-level precision/recall/F of the biased-threshold classifier."""
    tp = fp = fn = 0
    for w in windows:
        predicted = window_score(w.samples, model.weights, model.bias, audio_cfg) > 0.0
        if predicted and w.label == 1:
            tp += 1
        elif predicted and w.label == 0:
            fp += 1
        elif not predicted and w.label == 1:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return {"precision": precision, "recall": recall, "f_score": f_score, "windows": len(windows)}


def shot_peak_values(series: SampleSeries, labels: LabelSet, window_ms: float) -> np.ndarray:
    """Maximum series value within +/-window_ms/2 of each label."""
    half = window_ms / 2.0
    peaks = []
    for t in labels.shots:
        sub = series.slice_time(t - half, t + half)
        if len(sub):
            peaks.append(float(sub.values.max()))
    return np.array(peaks)


def labeled_quantizer(
    apf_series: SampleSeries,
    ipf_series: SampleSeries,
    labels: LabelSet,
) -> QuantizerModel:
    """Quintile calibration from the peak values around each labeled shot.

    The IPF search window is wider than the APF one because the IMU clock
    is not yet aligned when calibration runs.
    """
    return fit_quantizer(
        shot_peak_values(apf_series, labels, LABEL_PEAK_WINDOW_MS),
        shot_peak_values(ipf_series, labels, UNSYNCED_PEAK_WINDOW_MS),
    )


def synchronize(
    apf_series: SampleSeries,
    ipf_series: SampleSeries,
    q: QuantizerModel,
    window_seconds: float | None = None,
    validation_seconds: float = 5.0,
    max_lag_ms: float = 2000.0,
) -> tuple[OffsetEstimate, bool]:
    """Estimate the offset on a leading snippet and validate it on fresh data.

    Returns (estimate, validated). Correlation sync needs enough coincident
    events in the window, so by default the estimate uses the whole overlap
    minus a reserved validation tail; pass an explicit window_seconds for
    event-dense snippets. Validation is skipped (False) when the streams do
    not extend past the estimation window.
    """
    t0 = max(apf_series.start_time, ipf_series.start_time)
    t1 = min(apf_series.end_time, ipf_series.end_time)
    have_seconds = (t1 - t0) / 1000.0
    if window_seconds is None:
        window_seconds = have_seconds - validation_seconds
        if window_seconds < MIN_SYNC_WINDOW_SECONDS:
            window_seconds = have_seconds
    window = min(window_seconds, have_seconds)
    est = estimate_offset(
        apf_series.slice_time(t0, t0 + window * 1000.0),
        ipf_series.slice_time(t0, t0 + window * 1000.0),
        q,
        max_lag_ms,
    )
    validated = False
    if have_seconds >= est.window_seconds + validation_seconds:
        validated = validate_offset(apf_series, ipf_series, q, est, validation_seconds, max_lag_ms)
    return est, validated


def candidate_dataset(
    apf_series: SampleSeries,
    ipf_common: SampleSeries,
    a_rad: SampleSeries,
    a_tan: SampleSeries,
    w_rad: SampleSeries,
    labels: LabelSet,
    label_tolerance_ms: float = CANDIDATE_LABEL_TOLERANCE_MS,
    neighborhood_ms: float = NEIGHBORHOOD_MS,
) -> list[tuple[Candidate, int]]:
    """Candidates with features and proximity-derived labels.

    All series must share the common (audio) clock. A candidate is positive
    iff it lies within label_tolerance_ms of some ground-truth shot.
    """
    out = []
    for t in select_candidates(ipf_common, neighborhood_ms):
        c = extract_features(t, apf_series, ipf_common, a_rad, a_tan, w_rad, neighborhood_ms)
        positive = len(labels) > 0 and np.min(np.abs(labels.shots - t)) <= label_tolerance_ms
        out.append((c, int(positive)))
    return out


def calibrate_ipf_threshold(
    ipf_common: SampleSeries,
    labels: LabelSet,
    tolerance_ms: float = 100.0,
    neighborhood_ms: float = NEIGHBORHOOD_MS,
) -> float:
    """Threshold on IPF candidate values that maximizes F against labels.

    Used to give the motion-only baseline a fair, training-data-derived
    decision rule. Ties prefer the higher threshold.
    """
    times = select_candidates(ipf_common, neighborhood_ms)
    values = np.array([ipf_common.values[ipf_common.index_at(t)] for t in times])
    uniq = np.unique(values)
    cuts = [uniq.max() + 1.0]
    cuts += [(uniq[i] + uniq[i + 1]) / 2.0 for i in range(uniq.size - 1)]
    cuts += [uniq.min() - 1.0]
    best_f = -1.0
    best_cut = 0.0
    for cut in cuts:
        events = dedup(
            [ShotEvent(float(t), float(v)) for t, v in zip(times, values) if v > cut],
            neighborhood_ms,
        )
        f = evaluate(events, labels, tolerance_ms).f_score
        if f > best_f or (f == best_f and cut > best_cut):
            best_f = f
            best_cut = cut
    return float(best_cut)


def train_filter_workflow(
    data_dir,
    out_path,
    train_cfg: TrainConfig = TrainConfig(),
    audio_cfg: AudioConfig = AudioConfig(),
    window_frames: int = 21,
    split_fraction: float = 0.8,
) -> dict:
    """train-filter subcommand: windows from labels, 80/20 split, fit, save."""
    data_dir = Path(data_dir)
    audio = read_wav(data_dir / "audio.wav", audio_cfg.sample_rate)
    labels = read_labels_csv(data_dir / "labels.csv")
    windows = windows_from_labels(
        audio,
        labels,
        audio_cfg,
        window_frames=window_frames,
        negatives_per_positive=train_cfg.neg_pos_ratio,
        seed=train_cfg.seed,
    )
    train_set, val_set = shuffle_split(windows, split_fraction, train_cfg.seed)
    model = train_filter(train_set, train_cfg, audio_cfg)
    save_filter_model(out_path, model, audio_cfg)
    metrics = window_metrics(model, val_set, audio_cfg)
    metrics["model_path"] = str(out_path)
    return metrics


def _synced_series(audio, records, filter_model, audio_cfg, window_seconds,
                   validation_seconds, max_lag_ms):
    # The live snippet calibrates its own quantizer: dense quantized trains
    # correlate far better than sparse shot-peak quintiles (see ledger).
    apf_series = audio_likelihood(audio, filter_model, audio_cfg)
    comps = prepare_components(records)
    ipf_raw = ipf(comps)
    q = self_calibrate_quantizer(apf_series, ipf_raw)
    est, validated = synchronize(apf_series, ipf_raw, q, window_seconds, validation_seconds, max_lag_ms)
    shift = -est.offset_ms
    return {
        "apf": apf_series,
        "ipf": ipf_raw.shifted(shift),
        "a_rad": comps.a_rad.shifted(shift),
        "a_tan": comps.a_tan.shifted(shift),
        "w_rad": comps.w_rad.shifted(shift),
        "offset": est,
        "validated": validated,
    }


def train_forest_workflow(
    data_dir,
    filter_path,
    out_path,
    tree_count: int = 50,
    seed: int = 0,
    split_fraction: float = 0.8,
    window_seconds: float | None = None,
    validation_seconds: float = 5.0,
    max_lag_ms: float = 2000.0,
) -> dict:
    """train-forest subcommand: sync the streams, label candidates, fit, save."""
    data_dir = Path(data_dir)
    if not os.path.exists(filter_path):
        raise FileNotFoundError(f"model not found: {filter_path}")
    filter_model, audio_cfg = load_filter_model(filter_path)
    audio = read_wav(data_dir / "audio.wav", audio_cfg.sample_rate)
    records = read_imu_csv(data_dir / "imu.csv")
    labels = read_labels_csv(data_dir / "labels.csv")

    synced = _synced_series(audio, records, filter_model, audio_cfg,
                            window_seconds, validation_seconds, max_lag_ms)
    dataset = candidate_dataset(
        synced["apf"], synced["ipf"], synced["a_rad"], synced["a_tan"], synced["w_rad"], labels
    )
    train_set, val_set = shuffle_split(dataset, split_fraction, seed)
    model = train_forest(train_set, tree_count, seed)
    save_forest_model(out_path, model)

    correct = sum(1 for c, label in val_set if classify(model, c)[0] == label)
    return {
        "offset_ms": synced["offset"].offset_ms,
        "peak_correlation": synced["offset"].peak_correlation,
        "validated": synced["validated"],
        "candidates": len(dataset),
        "validation_accuracy": correct / len(val_set) if val_set else 1.0,
        "model_path": str(out_path),
    }


@dataclass(frozen=True)
class PipelineOptions:
    out_dir: str = "."
    labels_path: str | None = None
    audio_only: bool = False
    tolerance_ms: float = 100.0
    sync_window_seconds: float | None = None
    validation_seconds: float = 5.0
    max_lag_ms: float = 2000.0
    emit_series: bool = False


def run_pipeline(
    audio_path,
    imu_path,
    filter_model_path,
    forest_model_path,
    options: PipelineOptions = PipelineOptions(),
) -> dict:
    """detect subcommand: ingest, synchronize, fuse, evaluate, write artifacts.

    Writes detections.csv (time_ms,score) and, unless running audio-only,
    sync.json to options.out_dir; optionally the likelihood series as CSVs.
    Returns a result dict mirroring what lands on disk.
    """
    required_models = [filter_model_path]
    if not options.audio_only:
        required_models.append(forest_model_path)
    for path in required_models:
        if path is None or not os.path.exists(path):
            raise FileNotFoundError(f"model not found: {path}")

    filter_model, audio_cfg = load_filter_model(filter_model_path)
    audio = read_wav(audio_path, audio_cfg.sample_rate)
    labels = read_labels_csv(options.labels_path) if options.labels_path else None
    out_dir = ensure_dir(options.out_dir)
    result: dict = {}

    if options.audio_only:
        events = audio_only_events(audio, filter_model, audio_cfg)
    else:
        records = read_imu_csv(imu_path)
        synced = _synced_series(
            audio, records, filter_model, audio_cfg,
            options.sync_window_seconds, options.validation_seconds, options.max_lag_ms,
        )
        forest_model = load_forest_model(forest_model_path)
        events = detect_shots(
            audio, records, filter_model, forest_model, synced["offset"], audio_cfg
        )
        sync_payload = {
            "offset_ms": synced["offset"].offset_ms,
            "peak_correlation": synced["offset"].peak_correlation,
            "validated": synced["validated"],
            "window_seconds": synced["offset"].window_seconds,
        }
        sync_path = out_dir / "sync.json"
        with open(sync_path, "w") as fh:
            json.dump(sync_payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        result["sync"] = sync_payload
        result["sync_path"] = str(sync_path)
        if options.emit_series:
            write_series_csv(out_dir / "apf.csv", synced["apf"])
            write_series_csv(out_dir / "ipf.csv", synced["ipf"])

    detections_path = out_dir / "detections.csv"
    write_events_csv(detections_path, events)
    result["detections_path"] = str(detections_path)
    result["event_count"] = len(events)

    if labels is not None:
        result["report"] = evaluate(events, labels, options.tolerance_ms).to_dict()
    return result
