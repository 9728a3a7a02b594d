"""Gradient training of the audio front filter and decision bias.

The detector is differentiable end to end: convolution -> per-frame energy
-> macroframe mean subtraction -> bias threshold. Misclassified windows
contribute the (signed) decision score as their loss; correct ones
contribute nothing. Gradients are propagated analytically through that
chain and applied with a mini-batch Adam loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio import DEFAULT_FILTER_TAPS, AudioConfig, FilterModel, LabeledAudioWindow

__all__ = [
    "TrainConfig",
    "window_score",
    "window_loss_and_gradients",
    "total_loss",
    "total_gradients",
    "train_filter",
]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for :func:`train_filter`.

    Negative windows are subsampled to neg_pos_ratio per positive (20:1 by
    default, matching the scarcity of shots in a real game). init_std
    defaults to 1/sqrt(taps) so the initial filter has unit energy on
    average.
    """

    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 200
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    init_std: float = 1.0 / math.sqrt(DEFAULT_FILTER_TAPS)
    neg_pos_ratio: float = 20.0
    seed: int = 0
    filter_taps: int = DEFAULT_FILTER_TAPS

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 0:
            raise ValueError("learning_rate, batch_size, max_epochs must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in (0, 1)")
        if self.adam_epsilon <= 0 or self.init_std <= 0:
            raise ValueError("adam_epsilon and init_std must be positive")
        if self.neg_pos_ratio < 1:
            raise ValueError("neg_pos_ratio must be at least 1")
        if self.filter_taps < 1:
            raise ValueError("filter_taps must be at least 1")


def _check_window(samples: np.ndarray, n_taps: int, cfg: AudioConfig) -> None:
    needed = cfg.macroframe_frames * cfg.microframe_samples + n_taps - 1
    if samples.size < needed:
        raise ValueError("window too short")


def _forward(samples: np.ndarray, weights: np.ndarray, cfg: AudioConfig):
    filtered = np.convolve(samples, weights)[: samples.size]
    frame_len = cfg.microframe_samples
    n_frames = samples.size // frame_len
    blocks = filtered[: n_frames * frame_len].reshape(n_frames, frame_len)
    energy = np.sum(blocks * blocks, axis=1)
    return blocks, energy, n_frames


def window_score(
    samples: np.ndarray, weights: np.ndarray, bias: float, cfg: AudioConfig = AudioConfig()
) -> float:
    """Biased likelihood at the window's center microframe."""
    _check_window(samples, weights.size, cfg)
    _, energy, n_frames = _forward(samples, weights, cfg)
    center = n_frames // 2
    h = cfg.macroframe_half
    peak = energy[center] - energy[center - h : center + h + 1].mean()
    return float(peak + bias)


def window_loss_and_gradients(
    window: LabeledAudioWindow,
    weights: np.ndarray,
    bias: float,
    cfg: AudioConfig = AudioConfig(),
) -> tuple[float, np.ndarray, float]:
    """Loss of one window and its gradients w.r.t. weights and bias.

    Loss is -(score) for a missed shot, +(score) for a false alarm, and 0
    for a correct classification (ties at score 0 count as non-shot).
    """
    samples = window.samples
    _check_window(samples, weights.size, cfg)
    blocks, energy, n_frames = _forward(samples, weights, cfg)
    center = n_frames // 2
    h = cfg.macroframe_half
    m = cfg.macroframe_frames
    peak = energy[center] - energy[center - h : center + h + 1].mean()
    score = peak + bias
    predicted = score > 0.0

    if window.label == 1 and not predicted:
        d_score = -1.0
    elif window.label == 0 and predicted:
        d_score = 1.0
    else:
        return 0.0, np.zeros_like(weights), 0.0

    loss = d_score * score
    assert loss >= 0.0

    # Backpropagate: score -> energy -> filtered signal -> weights.
    d_energy = np.zeros(n_frames)
    d_energy[center - h : center + h + 1] = -d_score / m
    d_energy[center] += d_score
    d_filtered = (2.0 * blocks * d_energy[:, None]).reshape(-1)
    # filtered[k] = sum_t weights[t] * samples[k - t]
    n_used = d_filtered.size
    d_weights = np.array(
        [np.dot(d_filtered[t:], samples[: n_used - t]) for t in range(weights.size)]
    )
    return float(loss), d_weights, d_score


def total_loss(
    windows: list[LabeledAudioWindow],
    weights: np.ndarray,
    bias: float,
    cfg: AudioConfig = AudioConfig(),
) -> float:
    """Summed loss over a window set (forward pass only)."""
    out = 0.0
    for w in windows:
        score = window_score(w.samples, weights, bias, cfg)
        if w.label == 1 and score <= 0.0:
            out -= score
        elif w.label == 0 and score > 0.0:
            out += score
    return out


def total_gradients(
    windows: list[LabeledAudioWindow],
    weights: np.ndarray,
    bias: float,
    cfg: AudioConfig = AudioConfig(),
) -> tuple[float, np.ndarray, float]:
    """Summed loss and gradients over a window set."""
    loss = 0.0
    d_w = np.zeros_like(weights)
    d_b = 0.0
    for w in windows:
        l, dw, db = window_loss_and_gradients(w, weights, bias, cfg)
        loss += l
        d_w += dw
        d_b += db
    return loss, d_w, d_b


class _Adam:
    def __init__(self, size: int, lr: float, beta1: float, beta2: float, eps: float):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_filter(
    data: list[LabeledAudioWindow],
    cfg: TrainConfig = TrainConfig(),
    audio_cfg: AudioConfig = AudioConfig(),
) -> FilterModel:
    """Fit filter weights and bias by mini-batch Adam on the decision loss.

    Weights start from N(0, init_std^2) under cfg.seed, bias from 0.
    Negatives are subsampled (without replacement, when enough exist) to
    neg_pos_ratio per positive. Training stops at max_epochs or after an
    epoch whose total loss is zero. Batch gradients are means, keeping the
    learning rate scale-free in batch size.
    """
    positives = [w for w in data if w.label == 1]
    negatives = [w for w in data if w.label == 0]
    if not positives or not negatives:
        raise ValueError("degenerate training set")
    for w in data:
        _check_window(w.samples, cfg.filter_taps, audio_cfg)

    rng = np.random.default_rng(cfg.seed)
    weights = rng.normal(0.0, cfg.init_std, cfg.filter_taps)

    wanted = int(round(cfg.neg_pos_ratio * len(positives)))
    if len(negatives) > wanted:
        picked = rng.choice(len(negatives), size=wanted, replace=False)
        negatives = [negatives[i] for i in picked]
    windows = positives + negatives

    if cfg.max_epochs == 0:
        return FilterModel(weights, 0.0)

    params = np.concatenate([weights, [0.0]])
    opt = _Adam(params.size, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon)
    for _ in range(cfg.max_epochs):
        order = rng.permutation(len(windows))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [windows[i] for i in order[start : start + cfg.batch_size]]
            loss, d_w, d_b = total_gradients(batch, params[:-1], params[-1], audio_cfg)
            epoch_loss += loss
            grad = np.concatenate([d_w, [d_b]]) / len(batch)
            params = opt.step(params, grad)
        if epoch_loss == 0.0:
            break
    return FilterModel(params[:-1], float(params[-1]))
