"""Training objectives as pure functions over images and scores.

Norms are pixel-count-normalized L2 (root mean square) so magnitudes do
not depend on resolution. The structural term is 1 - SSIM. Adversarial
scores are probabilities in (0, 1); natural logarithms throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imgcore import LinearImage
from .metrics import ssim

_SCORE_EPS = 1e-7


@dataclass(frozen=True)
class LossWeights:
    lambda_rec: float = 10.0
    lambda_con: float = 1.0
    lambda_adv: float = 2.0

    def __post_init__(self):
        for name in ("lambda_rec", "lambda_con", "lambda_adv"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class SupervisedSample:
    """Predicted and ground-truth image/component sets for one sample."""

    J_pred: LinearImage
    B_pred: LinearImage
    T_pred: LinearImage
    W_pred: np.ndarray  # per-channel triple
    J_true: LinearImage
    B_true: LinearImage
    T_true: LinearImage
    W_true: np.ndarray

    def __post_init__(self):
        shape = self.J_true.data.shape
        for name in ("J_pred", "B_pred", "T_pred", "B_true", "T_true"):
            if getattr(self, name).data.shape != shape:
                raise ValueError(f"{name} dimensions differ from J_true")
        for name in ("W_pred", "W_true"):
            w = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if w.size != 3:
                raise ValueError(f"{name} must be a per-channel triple")
            object.__setattr__(self, name, w)


def rms(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def rec_loss(samples) -> float:
    """Supervised reconstruction loss summed over samples."""
    samples = list(samples)
    if not samples:
        raise ValueError("rec_loss needs at least one sample")
    total = 0.0
    for s in samples:
        total += rms(s.J_true.data, s.J_pred.data)
        total += rms(s.B_true.data, s.B_pred.data)
        total += rms(s.T_true.data, s.T_pred.data)
        total += rms(s.W_true, s.W_pred)
        total += 1.0 - ssim(s.J_true, s.J_pred)
    return total


def con_loss(J_hat_1: LinearImage, J_hat_2: LinearImage, originals, regenerated) -> float:
    """Consistency of shared-background predictions and of re-rendered images."""
    originals = list(originals)
    regenerated = list(regenerated)
    if len(originals) != len(regenerated):
        raise ValueError("originals and regenerated lists differ in length")
    total = rms(J_hat_1.data, J_hat_2.data)
    for orig, regen in zip(originals, regenerated):
        total += rms(orig.data, regen.data)
    return total


def adv_loss(fake_inter_scores, fake_intra_scores, real_scores) -> float:
    """mean log(1-D(fake_inter)) + mean log(1-D(fake_intra)) + mean log(D(real)).

    Empty score lists contribute 0. Always <= 0.
    """

    def mean_log(values, flip: bool) -> float:
        values = np.asarray(list(values), dtype=np.float64)
        if values.size == 0:
            return 0.0
        clamped = np.clip(values, _SCORE_EPS, 1.0 - _SCORE_EPS)
        return float(np.mean(np.log(1.0 - clamped if flip else clamped)))

    return (
        mean_log(fake_inter_scores, flip=True)
        + mean_log(fake_intra_scores, flip=True)
        + mean_log(real_scores, flip=False)
    )


def total_loss(rec: float, con: float, adv: float, w: LossWeights = LossWeights()) -> float:
    return w.lambda_rec * rec + w.lambda_con * con + w.lambda_adv * adv
