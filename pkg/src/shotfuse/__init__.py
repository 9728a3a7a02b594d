"""Shot detection for racquet sports from fused wrist-worn microphone and IMU data."""

from .audio import (
    AudioConfig,
    FilterModel,
    LabeledAudioWindow,
    apf,
    audio_likelihood,
    detect_audio,
    short_time_energy,
)
from .events import EvalReport, LabelSet, ShotEvent, dedup, evaluate
from .forest import ForestModel, classify, train_forest
from .fusion import (
    Candidate,
    audio_only_events,
    detect_shots,
    extract_features,
    imu_only_events,
    select_candidates,
)
from .imu import ImuComponents, ImuRecord, decompose, imu_likelihood, ipf, prepare_components
from .series import (
    FirKernel,
    IirCoefficients,
    SampleSeries,
    cross_correlate,
    design_lowpass,
    fir_convolve,
    iir_filter,
    triangle_smooth,
)
from .sync import (
    OffsetEstimate,
    QuantizerModel,
    estimate_offset,
    fit_quantizer,
    quantize,
    self_calibrate_quantizer,
    validate_offset,
)
from .synth import SynthConfig, synthesize
from .training import TrainConfig, train_filter

__version__ = "0.1.0"

__all__ = [
    "AudioConfig",
    "Candidate",
    "EvalReport",
    "FilterModel",
    "FirKernel",
    "ForestModel",
    "IirCoefficients",
    "ImuComponents",
    "ImuRecord",
    "LabelSet",
    "LabeledAudioWindow",
    "OffsetEstimate",
    "QuantizerModel",
    "SampleSeries",
    "ShotEvent",
    "SynthConfig",
    "TrainConfig",
    "apf",
    "audio_likelihood",
    "audio_only_events",
    "classify",
    "cross_correlate",
    "decompose",
    "dedup",
    "design_lowpass",
    "detect_audio",
    "detect_shots",
    "estimate_offset",
    "evaluate",
    "extract_features",
    "fir_convolve",
    "fit_quantizer",
    "iir_filter",
    "imu_likelihood",
    "imu_only_events",
    "ipf",
    "prepare_components",
    "quantize",
    "select_candidates",
    "self_calibrate_quantizer",
    "short_time_energy",
    "synthesize",
    "train_filter",
    "train_forest",
    "triangle_smooth",
    "validate_offset",
]
