"""Command-line interface: synth, train-filter, train-forest, sync, detect, eval."""

from __future__ import annotations

import argparse
import json
import sys

from .audio import audio_likelihood
from .dataio import (
    ensure_dir,
    load_filter_model,
    read_events_csv,
    read_imu_csv,
    read_labels_csv,
    read_wav,
    write_imu_csv,
    write_labels_csv,
    write_wav,
)
from .events import evaluate
from .imu import ipf, prepare_components
from .sync import self_calibrate_quantizer
from .pipeline import (
    PipelineOptions,
    run_pipeline,
    synchronize,
    train_filter_workflow,
    train_forest_workflow,
)
from .synth import SynthConfig, synthesize
from .training import TrainConfig


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_synth(args) -> int:
    with open(args.config) as fh:
        cfg = SynthConfig(**json.load(fh))
    audio, records, labels = synthesize(cfg)
    out = ensure_dir(args.out_dir)
    write_wav(out / "audio.wav", audio)
    write_imu_csv(out / "imu.csv", records)
    write_labels_csv(out / "labels.csv", labels)
    _emit(
        {
            "out_dir": str(out),
            "duration_s": cfg.duration_s,
            "shots": len(labels),
            "imu_records": len(records),
            "audio_samples": len(audio),
        }
    )
    return 0


def cmd_train_filter(args) -> int:
    cfg = TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        neg_pos_ratio=args.neg_pos_ratio,
        seed=args.seed,
    )
    metrics = train_filter_workflow(args.data, args.out, cfg, window_frames=args.window_frames)
    _emit(metrics)
    return 0


def cmd_train_forest(args) -> int:
    metrics = train_forest_workflow(
        args.data, args.filter, args.out, tree_count=args.trees, seed=args.seed
    )
    _emit(metrics)
    return 0


def cmd_sync(args) -> int:
    filter_model, audio_cfg = load_filter_model(args.filter)
    audio = read_wav(args.audio, audio_cfg.sample_rate)
    records = read_imu_csv(args.imu)
    apf_series = audio_likelihood(audio, filter_model, audio_cfg)
    ipf_series = ipf(prepare_components(records))
    q = self_calibrate_quantizer(apf_series, ipf_series)
    est, validated = synchronize(
        apf_series, ipf_series, q, args.window_seconds, args.validation_seconds, args.max_lag_ms
    )
    _emit(
        {
            "offset_ms": est.offset_ms,
            "peak_correlation": est.peak_correlation,
            "validated": validated,
            "window_seconds": est.window_seconds,
        }
    )
    return 0


def cmd_detect(args) -> int:
    if not args.audio_only and (args.imu is None or args.forest is None):
        raise ValueError("detect needs --imu and --forest unless --audio-only is given")
    options = PipelineOptions(
        out_dir=args.out_dir,
        labels_path=args.labels,
        audio_only=args.audio_only,
        tolerance_ms=args.tolerance_ms,
        sync_window_seconds=args.window_seconds,
        validation_seconds=args.validation_seconds,
        max_lag_ms=args.max_lag_ms,
        emit_series=args.emit_series,
    )
    result = run_pipeline(args.audio, args.imu, args.filter, args.forest, options)
    _emit(result)
    return 0


def cmd_eval(args) -> int:
    events = read_events_csv(args.events)
    labels = read_labels_csv(args.labels)
    report = evaluate(events, labels, args.tolerance_ms)
    _emit(report.to_dict())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shotfuse",
        description="Shot detection for racquet sports from fused microphone and IMU streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--config", required=True, help="JSON file of generator settings")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-filter", help="train the audio front filter")
    p.add_argument("--data", required=True, help="directory with audio.wav and labels.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--neg-pos-ratio", type=float, default=20.0)
    p.add_argument("--window-frames", type=int, default=21)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_filter)

    p = sub.add_parser("train-forest", help="train the fusion classifier")
    p.add_argument("--data", required=True, help="directory with audio.wav, imu.csv, labels.csv")
    p.add_argument("--filter", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_forest)

    p = sub.add_parser("sync", help="estimate the IMU-vs-audio clock offset")
    p.add_argument("--audio", required=True)
    p.add_argument("--imu", required=True)
    p.add_argument("--filter", required=True)
    p.add_argument("--window-seconds", type=float, default=None,
                   help="sync estimation window (default: full overlap minus validation)")
    p.add_argument("--validation-seconds", type=float, default=5.0)
    p.add_argument("--max-lag-ms", type=float, default=2000.0)
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("detect", help="run the full detection pipeline")
    p.add_argument("--audio", required=True)
    p.add_argument("--imu")
    p.add_argument("--filter", required=True)
    p.add_argument("--forest")
    p.add_argument("--labels")
    p.add_argument("--audio-only", action="store_true")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--tolerance-ms", type=float, default=100.0)
    p.add_argument("--window-seconds", type=float, default=None,
                   help="sync estimation window (default: full overlap minus validation)")
    p.add_argument("--validation-seconds", type=float, default=5.0)
    p.add_argument("--max-lag-ms", type=float, default=2000.0)
    p.add_argument("--emit-series", action="store_true")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score a detections file against labels")
    p.add_argument("--events", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--tolerance-ms", type=float, default=100.0)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
