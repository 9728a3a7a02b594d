import numpy as np
import pytest

from shotfuse import (
    ForestModel,
    OffsetEstimate,
    SampleSeries,
    detect_shots,
    extract_features,
    select_candidates,
)
from shotfuse.forest import DecisionTree
from shotfuse.imu import ImuRecord


def series(values, start=0.0, rate=100.0):
    return SampleSeries(rate, start, np.asarray(values, dtype=float))


# --- select_candidates -------------------------------------------------------


def test_single_isolated_peak():
    v = np.zeros(200)
    v[90] = 5.0
    times = select_candidates(series(v))
    assert np.array_equal(times, [900.0])


def test_dominated_peak_is_not_candidate():
    v = np.zeros(200)
    v[100] = 2.0
    v[120] = 1.0  # 200 ms later: the taller peak sits inside its +/-250 ms window
    times = select_candidates(series(v))
    assert np.array_equal(times, [1000.0])


def test_peaks_beyond_window_are_both_candidates():
    v = np.zeros(200)
    v[100] = 2.0
    v[130] = 1.0  # 300 ms apart: outside each other's +/-250 ms windows
    times = select_candidates(series(v))
    assert np.array_equal(times, [1000.0, 1300.0])


def test_two_separated_peaks():
    v = np.zeros(200)
    v[50] = 1.0
    v[110] = 1.0  # 600 ms apart, windows do not overlap
    times = select_candidates(series(v))
    assert np.array_equal(times, [500.0, 1100.0])


def test_constant_series_has_no_candidates():
    assert select_candidates(series(np.full(100, 3.0))).size == 0


def test_plateau_has_no_candidates():
    v = np.zeros(120)
    v[60:62] = 2.0
    assert select_candidates(series(v)).size == 0


def test_boundary_peak_uses_truncated_window():
    v = np.zeros(100)
    v[2] = 1.0
    assert 20.0 in select_candidates(series(v))


def test_scaling_invariance_property():
    rng = np.random.default_rng(19)
    for _ in range(100):
        v = rng.standard_normal(300)
        alpha = float(rng.uniform(0.01, 50.0))
        base = select_candidates(series(v))
        scaled = select_candidates(series(alpha * v))
        assert np.array_equal(base, scaled)


# --- extract_features -----------------------------------------------------------


def five_series(apf=None, ipf=None, a_rad=None, a_tan=None, w_rad=None, n=100):
    def mk(v):
        return series(np.full(n, 0.0) if v is None else v)

    return mk(apf), mk(ipf), mk(a_rad), mk(a_tan), mk(w_rad)


def test_constant_series_features():
    ss = tuple(series(np.full(100, 4.2)) for _ in range(5))
    c = extract_features(500.0, *ss)
    assert np.allclose(c.features, 4.2)


def test_impulse_in_window_is_captured():
    apf = np.zeros(100)
    apf[60] = 7.0  # 100 ms after the candidate, inside +/-250 ms
    ss = five_series(apf=apf)
    c = extract_features(500.0, *ss)
    assert c.features[0] == 7.0


def test_features_match_window_scan(rng):
    arrays = [rng.standard_normal(200) for _ in range(5)]
    ss = tuple(series(a) for a in arrays)
    t = 700.0
    c = extract_features(t, *ss)
    for k, a in enumerate(arrays):
        lo = int(np.ceil((t - 250.0) / 10.0))
        hi = int(np.floor((t + 250.0) / 10.0)) + 1
        assert c.features[k] == pytest.approx(np.max(a[lo:hi]), rel=1e-12)


def test_partial_window_at_edge(rng):
    arrays = [rng.standard_normal(100) for _ in range(5)]
    ss = tuple(series(a) for a in arrays)
    c = extract_features(30.0, *ss)  # window [  -220, 280 ] truncates at 0
    for k, a in enumerate(arrays):
        assert c.features[k] == pytest.approx(np.max(a[:29]), rel=1e-12)


def test_candidate_out_of_range():
    ss = five_series()
    with pytest.raises(ValueError, match="candidate out of range"):
        extract_features(99999.0, *ss)


# --- detect_shots ------------------------------------------------------------------


def leaf(cls):
    return DecisionTree([-1], [0.0], [-1], [-1], [cls])


def apf_threshold_forest(threshold):
    """Single stump voting shot iff the APF feature exceeds threshold."""
    stump = DecisionTree([0, -1, -1], [threshold, 0.0, 0.0], [1, -1, -1], [2, -1, -1], [-1, 0, 1])
    return ForestModel((stump,), tree_count=1, seed=0)


def silence_and_stillness(duration_s=10.0):
    n_audio = int(duration_s * 8000)
    n_imu = int(duration_s * 100)
    audio = series(np.zeros(n_audio), rate=8000.0)
    records = [ImuRecord(10.0 * k, 0, 0, 0, 0, 0, 0) for k in range(n_imu)]
    return audio, records


def test_detect_shots_empty_on_silence(identity_model):
    audio, records = silence_and_stillness()
    forest = apf_threshold_forest(0.5)
    offset = OffsetEstimate(0.0, 1.0, 5.0)
    assert detect_shots(audio, records, identity_model, forest, offset) == []


def test_detect_shots_synthetic_game(identity_model):
    import shotfuse as sf
    from shotfuse.imu import ipf, prepare_components
    from shotfuse.pipeline import candidate_dataset, synchronize
    from shotfuse.sync import self_calibrate_quantizer

    cfg = sf.SynthConfig(duration_s=60.0, shot_count=20, injected_offset_ms=-180.0, seed=77)
    audio, records, labels = sf.synthesize(cfg)
    apf_s = sf.audio_likelihood(audio, identity_model)
    comps = prepare_components(records)
    ipf_s = ipf(comps)
    q = self_calibrate_quantizer(apf_s, ipf_s)
    est, _ = synchronize(apf_s, ipf_s, q)
    shift = -est.offset_ms
    ds = candidate_dataset(apf_s, ipf_s.shifted(shift), comps.a_rad.shifted(shift),
                           comps.a_tan.shifted(shift), comps.w_rad.shifted(shift), labels)
    forest = sf.train_forest(ds, tree_count=15, seed=4)

    events = detect_shots(audio, records, identity_model, forest, est)
    assert len(events) == 20
    for e in events:
        assert np.min(np.abs(labels.shots - e.time_ms)) <= 100.0


def _trained_forest(identity_model, seed=77):
    import shotfuse as sf
    from shotfuse.imu import ipf, prepare_components
    from shotfuse.pipeline import candidate_dataset, synchronize
    from shotfuse.sync import self_calibrate_quantizer

    cfg = sf.SynthConfig(duration_s=60.0, shot_count=20, injected_offset_ms=0.0,
                         distractor_rate_per_min=4.0, seed=seed)
    audio, records, labels = sf.synthesize(cfg)
    apf_s = sf.audio_likelihood(audio, identity_model)
    comps = prepare_components(records)
    ipf_s = ipf(comps)
    q = self_calibrate_quantizer(apf_s, ipf_s)
    est, _ = synchronize(apf_s, ipf_s, q)
    shift = -est.offset_ms
    ds = candidate_dataset(apf_s, ipf_s.shifted(shift), comps.a_rad.shifted(shift),
                           comps.a_tan.shifted(shift), comps.w_rad.shifted(shift), labels)
    return sf.train_forest(ds, tree_count=15, seed=4)


def test_detect_shots_suppresses_audio_only_distractors(identity_model):
    import shotfuse as sf

    forest = _trained_forest(identity_model)
    # bursts but no swings: every IPF candidate is noise-level and gets rejected
    cfg = sf.SynthConfig(duration_s=30.0, shot_count=0, injected_offset_ms=0.0,
                         distractor_rate_per_min=10.0, seed=13)
    audio, records, labels = sf.synthesize(cfg)
    assert len(labels) == 0
    offset = OffsetEstimate(0.0, 1.0, 5.0)
    events = detect_shots(audio, records, identity_model, forest, offset)
    assert events == []


def test_detect_shots_events_are_candidate_times(identity_model):
    import shotfuse as sf
    from shotfuse.imu import ipf, prepare_components

    cfg = sf.SynthConfig(duration_s=30.0, shot_count=10, injected_offset_ms=0.0, seed=21)
    audio, records, labels = sf.synthesize(cfg)
    forest = apf_threshold_forest(0.0)
    offset = OffsetEstimate(0.0, 1.0, 5.0)
    events = detect_shots(audio, records, identity_model, forest, offset)
    candidates = select_candidates(ipf(prepare_components(records)))
    assert len(events) > 0
    for e in events:
        assert e.time_ms in candidates


def test_detect_shots_deterministic(identity_model):
    import shotfuse as sf

    cfg = sf.SynthConfig(duration_s=30.0, shot_count=10, injected_offset_ms=-100.0, seed=23)
    audio, records, _ = sf.synthesize(cfg)
    forest = apf_threshold_forest(1e-4)
    offset = OffsetEstimate(-100.0, 0.9, 10.0)
    a = detect_shots(audio, records, identity_model, forest, offset)
    b = detect_shots(audio, records, identity_model, forest, offset)
    assert a == b
