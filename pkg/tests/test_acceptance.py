"""Acceptance gate: one test per criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -s` to see the PASS/FAIL lines.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

import shotfuse as sf
from shotfuse import (
    FilterModel,
    LabeledAudioWindow,
    LabelSet,
    ShotEvent,
    SynthConfig,
    TrainConfig,
)
from shotfuse.audio import AudioConfig, apf, short_time_energy
from shotfuse.imu import ImuRecord, decompose, ipf, prepare_components
from shotfuse.pipeline import (
    calibrate_ipf_threshold,
    candidate_dataset,
    shuffle_split,
    synchronize,
    window_metrics,
    windows_from_labels,
)
from shotfuse.series import SampleSeries, fir_convolve, FirKernel
from shotfuse.sync import estimate_offset, quantize, self_calibrate_quantizer
from shotfuse.training import total_gradients, total_loss, train_filter, window_score
from shotfuse.forest import classify, train_forest
from shotfuse.events import dedup, evaluate

CFG = AudioConfig()


def verdict(number, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number} {status}: {detail}")
    assert ok, detail


# --- 1. formula oracles -------------------------------------------------------


def test_criterion_1_formula_oracles():
    rng = np.random.default_rng(101)
    t0 = time.time()
    worst = 0.0

    for _ in range(100):
        # short-time energy vs per-frame loop
        x = rng.standard_normal(400)
        ste = short_time_energy(SampleSeries(8000.0, 0.0, x), CFG).values
        for i in range(5):
            expected = sum(float(v) ** 2 for v in x[80 * i : 80 * (i + 1)])
            worst = max(worst, abs(ste[i] - expected) / max(abs(expected), 1e-300))

        # audio peak function vs direct formula
        e = rng.uniform(0.0, 5.0, 20)
        out = apf(SampleSeries(100.0, 0.0, e), CFG).values
        for j in range(out.size):
            i = j + 5
            expected = e[i] - sum(e[i - 5 : i + 6]) / 11.0
            worst = max(worst, abs(out[j] - expected) / max(abs(expected), 1e-12))

        # axis decomposition vs per-sample formula
        a = rng.uniform(-2.0, 2.0, (12, 3))
        g = rng.uniform(-500.0, 500.0, (12, 3))
        records = [ImuRecord(10.0 * k, *a[k], *g[k]) for k in range(12)]
        comps = decompose(records)
        for k in range(12):
            worst = max(worst, abs(comps.a_rad.values[k] - a[k, 0]))
            expected = float(np.sqrt(a[k, 1] ** 2 + a[k, 2] ** 2))
            worst = max(worst, abs(comps.a_tan.values[k] - expected) / max(expected, 1e-12))
            worst = max(worst, abs(comps.w_rad.values[k] - g[k, 0]))
            expected = float(np.sqrt(g[k, 1] ** 2 + g[k, 2] ** 2))
            worst = max(worst, abs(comps.w_tan.values[k] - expected) / max(expected, 1e-12))

        # motion peak function (mean convention) vs direct formula
        ar = rng.uniform(-2.0, 2.0, 25)
        wt = rng.uniform(0.0, 500.0, 25)
        zero = SampleSeries(100.0, 0.0, np.zeros(25))
        out = ipf(
            sf.ImuComponents(
                SampleSeries(100.0, 0.0, ar), zero, zero, SampleSeries(100.0, 0.0, wt)
            )
        ).values
        for j in range(out.size):
            i = j + 4
            expected = (ar[i] - np.mean(ar[i - 4 : i + 6])) * (wt[i] - np.mean(wt[i - 4 : i + 6]))
            worst = max(worst, abs(out[j] - expected) / max(abs(expected), 1e-12))

    elapsed = time.time() - t0
    verdict(
        1,
        worst < 1e-12 and elapsed < 5.0,
        f"formula oracles match within {worst:.2e} relative (100 inputs each) in {elapsed:.2f}s",
    )


# --- 2. gradient check ----------------------------------------------------------


def test_criterion_2_gradient_check():
    step = 1e-4
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(2000 + seed)
        weights = rng.normal(0.0, 0.2, 23)
        bias = float(rng.normal(0.0, 0.5))
        samples = rng.standard_normal(21 * CFG.microframe_samples)
        score = window_score(samples, weights, bias, CFG)
        label = 1 if score <= 0.0 else 0  # force a nonzero loss
        windows = [LabeledAudioWindow(samples, label)]
        loss, d_w, d_b = total_gradients(windows, weights, bias, CFG)
        assert loss != 0.0

        grads = np.r_[d_w, d_b]
        for t in range(24):
            up_w, down_w = weights.copy(), weights.copy()
            up_b = down_b = bias
            if t < 23:
                up_w[t] += step
                down_w[t] -= step
            else:
                up_b = bias + step
                down_b = bias - step
            fd = (
                total_loss(windows, up_w, up_b, CFG) - total_loss(windows, down_w, down_b, CFG)
            ) / (2 * step)
            rel = abs(fd - grads[t]) / max(abs(fd), abs(grads[t]), 1e-8)
            worst = max(worst, rel)
    verdict(2, worst < 1e-4, f"analytic vs central-difference gradients: worst rel err {worst:.2e}")


# --- 3. filter training ----------------------------------------------------------


def test_criterion_3_filter_training():
    rng = np.random.default_rng(300)
    span = 21 * CFG.microframe_samples

    def burst_window():
        x = 0.002 * rng.standard_normal(span)
        tone = np.sin(2 * np.pi * 1000.0 * np.arange(80) / 8000.0)
        mid = span // 2
        x[mid - 40 : mid + 40] += tone
        return LabeledAudioWindow(x, 1)

    def noise_window():
        return LabeledAudioWindow(0.02 * rng.standard_normal(span), 0)

    corpus = [burst_window() for _ in range(30)]
    corpus += [noise_window() for _ in range(600)]  # 1:20 ratio
    train_set, held_out = shuffle_split(corpus, 0.8, seed=300)

    cfg = TrainConfig(seed=300, max_epochs=200)
    model = train_filter(train_set, cfg, CFG)

    wrong = sum(
        1
        for w in train_set
        if int(window_score(w.samples, model.weights, model.bias, CFG) > 0.0) != w.label
    )
    metrics = window_metrics(model, held_out, CFG)
    verdict(
        3,
        wrong == 0 and metrics["f_score"] >= 0.9,
        f"training misclassifications {wrong}; held-out F {metrics['f_score']:.3f}",
    )


# --- 4. synchronization -----------------------------------------------------------


def test_criterion_4_synchronization():
    rng = np.random.default_rng(400)
    model = FilterModel(np.r_[1.0, np.zeros(22)], 0.0)
    errors = []
    slowest = 0.0
    for k in range(50):
        injected = float(rng.uniform(-500.0, 500.0))
        cfg = SynthConfig(
            duration_s=20.0, shot_count=16, injected_offset_ms=injected, seed=4000 + k
        )
        t0 = time.time()
        audio, records, _ = sf.synthesize(cfg)
        apf_s = sf.audio_likelihood(audio, model)
        ipf_s = ipf(prepare_components(records))
        q = self_calibrate_quantizer(apf_s, ipf_s)
        est = estimate_offset(apf_s, ipf_s, q, 2000.0)
        slowest = max(slowest, time.time() - t0)
        errors.append(est.offset_ms - injected)
    mae = float(np.mean(np.abs(errors)))
    verdict(
        4,
        mae <= 40.0 and slowest < 1.0,
        f"offset MAE {mae:.1f} ms over 50 trials; slowest trial {slowest:.2f}s",
    )


# --- 5 + 6. end-to-end fusion and determinism ---------------------------------------


@pytest.fixture(scope="module")
def trained_models(tmp_path_factory):
    """Filter, forest, and IPF threshold trained on a separate corpus."""
    cfg = SynthConfig(
        duration_s=240.0,
        shot_count=60,
        injected_offset_ms=-150.0,
        distractor_rate_per_min=5.0,
        seed=510,
    )
    audio, records, labels = sf.synthesize(cfg)
    windows = windows_from_labels(audio, labels, CFG, seed=510)
    train_set, _ = shuffle_split(windows, 0.8, seed=510)
    filter_model = train_filter(train_set, TrainConfig(seed=510), CFG)

    apf_s = sf.audio_likelihood(audio, filter_model)
    comps = prepare_components(records)
    ipf_s = ipf(comps)
    q = self_calibrate_quantizer(apf_s, ipf_s)
    est, _ = synchronize(apf_s, ipf_s, q)
    shift = -est.offset_ms
    dataset = candidate_dataset(
        apf_s,
        ipf_s.shifted(shift),
        comps.a_rad.shifted(shift),
        comps.a_tan.shifted(shift),
        comps.w_rad.shifted(shift),
        labels,
    )
    forest = train_forest(dataset, tree_count=50, seed=510)
    threshold = calibrate_ipf_threshold(ipf_s.shifted(shift), labels)
    return filter_model, forest, threshold


def test_criterion_5_end_to_end_fusion(trained_models):
    filter_model, forest, ipf_threshold = trained_models
    corpus = SynthConfig(
        duration_s=600.0,
        shot_count=100,
        injected_offset_ms=-270.0,
        distractor_rate_per_min=5.0,
        seed=500,
    )
    audio, records, labels = sf.synthesize(corpus)

    t0 = time.time()
    apf_s = sf.audio_likelihood(audio, filter_model)
    ipf_s = ipf(prepare_components(records))
    q = self_calibrate_quantizer(apf_s, ipf_s)
    est, _ = synchronize(apf_s, ipf_s, q, validation_seconds=60.0)
    events = sf.detect_shots(audio, records, filter_model, forest, est)
    elapsed = time.time() - t0

    fused = evaluate(events, labels, 100.0)
    audio_only = evaluate(sf.audio_only_events(audio, filter_model), labels, 100.0)
    imu_only = evaluate(
        sf.imu_only_events(records, ipf_threshold, est.offset_ms), labels, 100.0
    )
    gap_audio = fused.f_score - audio_only.f_score
    gap_imu = fused.f_score - imu_only.f_score
    verdict(
        5,
        fused.f_score >= 0.95 and gap_audio >= 0.05 and gap_imu >= 0.05 and elapsed < 30.0,
        (
            f"fused F {fused.f_score:.3f} vs audio-only {audio_only.f_score:.3f} "
            f"and imu-only {imu_only.f_score:.3f} (offset {est.offset_ms:+.0f} ms) in {elapsed:.1f}s"
        ),
    )


def test_criterion_6_determinism(tmp_path):
    cli = [sys.executable, "-m", "shotfuse"]
    cfg = {
        "duration_s": 40.0,
        "shot_count": 24,
        "injected_offset_ms": -270.0,
        "distractor_rate_per_min": 2.0,
        "seed": 60,
    }
    cfg_path = tmp_path / "synth.json"
    cfg_path.write_text(json.dumps(cfg))
    data = tmp_path / "data"
    subprocess.run(
        cli + ["synth", "--config", str(cfg_path), "--out-dir", str(data)],
        check=True, capture_output=True,
    )
    filter_path = tmp_path / "filter.json"
    subprocess.run(
        cli + ["train-filter", "--data", str(data), "--out", str(filter_path),
               "--epochs", "60", "--seed", "6"],
        check=True, capture_output=True,
    )

    forest_blobs = []
    for name in ("fa.json", "fb.json"):
        out = tmp_path / name
        subprocess.run(
            cli + ["train-forest", "--data", str(data), "--filter", str(filter_path),
                   "--out", str(out), "--seed", "6"],
            check=True, capture_output=True,
        )
        forest_blobs.append(out.read_bytes())

    detect_blobs = []
    for name in ("da", "db"):
        out_dir = tmp_path / name
        subprocess.run(
            cli + ["detect", "--audio", str(data / "audio.wav"), "--imu", str(data / "imu.csv"),
                   "--filter", str(filter_path), "--forest", str(tmp_path / "fa.json"),
                   "--out-dir", str(out_dir)],
            check=True, capture_output=True,
        )
        detect_blobs.append(
            (out_dir / "detections.csv").read_bytes() + (out_dir / "sync.json").read_bytes()
        )

    verdict(
        6,
        forest_blobs[0] == forest_blobs[1] and detect_blobs[0] == detect_blobs[1],
        "repeated train-forest and detect runs are byte-identical",
    )


# --- 7. property suites -------------------------------------------------------------


def test_criterion_7_property_suites():
    rng = np.random.default_rng(700)
    checks = []

    # linearity of the front convolution
    kernel = FirKernel(rng.standard_normal(11))
    ok = True
    for _ in range(100):
        x, y = rng.standard_normal((2, 50))
        a, b = rng.standard_normal(2)
        lhs = fir_convolve(SampleSeries(100.0, 0.0, a * x + b * y), kernel).values
        rhs = (
            a * fir_convolve(SampleSeries(100.0, 0.0, x), kernel).values
            + b * fir_convolve(SampleSeries(100.0, 0.0, y), kernel).values
        )
        ok = ok and np.allclose(lhs, rhs, atol=1e-9)
    checks.append(("fir linearity", ok))

    # shift equivariance of the offset estimator
    base = np.abs(rng.normal(0.0, 0.01, 1200))
    base[rng.choice(np.arange(50, 1150), 25, replace=False)] += rng.uniform(1, 4, 25)
    s = SampleSeries(100.0, 0.0, base)
    q = self_calibrate_quantizer(s, s)
    ref = estimate_offset(s, s, q, 500.0).offset_ms
    ok = True
    for _ in range(100):
        k = int(rng.integers(-25, 26))
        moved = SampleSeries(100.0, 0.0, np.roll(base, k))
        ok = ok and estimate_offset(s, moved, q, 500.0).offset_ms == pytest.approx(ref + 10.0 * k)
    checks.append(("offset shift equivariance", ok))

    # quantization monotonicity
    ok = True
    for _ in range(100):
        bounds = np.cumsum(rng.uniform(0.1, 1.0, 4))
        x, y = np.sort(rng.uniform(-1.0, 6.0, 2))
        lx = quantize(SampleSeries(100.0, 0.0, [x]), bounds).values[0]
        ly = quantize(SampleSeries(100.0, 0.0, [y]), bounds).values[0]
        ok = ok and lx <= ly
    checks.append(("quantization monotonicity", ok))

    # dedup idempotence
    ok = True
    for _ in range(100):
        times = np.sort(rng.uniform(0, 30000, int(rng.integers(0, 50))))
        events = [ShotEvent(float(t), 1.0) for t in times]
        once = dedup(events)
        ok = ok and dedup(once) == once
    checks.append(("dedup idempotence", ok))

    # vote-majority consistency
    data = [
        (sf.Candidate(0.0, np.r_[rng.uniform(2.0, 4.0) if k % 2 else rng.uniform(-1.0, 1.0),
                                 rng.standard_normal(4)]), k % 2)
        for k in range(40)
    ]
    model = train_forest(data, tree_count=7, seed=70)
    ok = True
    for _ in range(100):
        c = sf.Candidate(0.0, rng.uniform(-2.0, 5.0, 5))
        votes = sum(t.predict(c.features) for t in model.trees)
        label, score = classify(model, c)
        ok = ok and score == votes / 7.0 and label == (1 if score > 0.5 else 0)
    checks.append(("vote-majority consistency", ok))

    # TP/FP/FN accounting
    ok = True
    for _ in range(100):
        e_times = np.sort(rng.uniform(0, 10000, int(rng.integers(0, 20))))
        l_times = np.unique(rng.uniform(0, 10000, int(rng.integers(1, 20))))
        events = [ShotEvent(float(t), 1.0) for t in e_times]
        report = evaluate(events, LabelSet(l_times), 120.0)
        ok = ok and report.true_positives + report.false_negatives == l_times.size
        ok = ok and report.true_positives + report.false_positives == e_times.size
    checks.append(("match accounting", ok))

    failing = [name for name, good in checks if not good]
    verdict(7, not failing, f"property suites (100 cases each): {len(checks)} suites, failing: {failing or 'none'}")
