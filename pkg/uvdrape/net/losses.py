"""Adversarial and masked-L1 objectives with their gradients."""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from ..config import TEMPLATES
from ..errors import NetShapeError


def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean sigmoid cross-entropy and its gradient with respect to the logits.

    Uses ``max(z, 0) - z t + log(1 + exp(-|z|))``.
    """
    z = logits.astype(np.float64)
    t = np.broadcast_to(targets, z.shape).astype(np.float64)
    loss = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    sigmoid = 0.5 * (1.0 + np.tanh(0.5 * z))
    grad = (sigmoid - t) / z.size
    return float(loss.mean()), grad.astype(logits.dtype)


def adversarial_loss(logits_fake: np.ndarray, logits_real: np.ndarray, labels_fake,
                     labels_real) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Discriminator objective: the mean of the real and fake cross-entropies.

    Labels may be scalars or arrays broadcastable to the logit grids.

    Returns:
        (loss, grad_fake, grad_real)
    """
    if logits_fake.shape != logits_real.shape:
        raise NetShapeError(f"logit grids differ: {logits_fake.shape} vs {logits_real.shape}")
    loss_real, g_real = bce_with_logits(logits_real, labels_real)
    loss_fake, g_fake = bce_with_logits(logits_fake, labels_fake)
    return 0.5 * (loss_real + loss_fake), 0.5 * g_fake, 0.5 * g_real


@dataclass(frozen=True)
class GeneratorLoss:
    total: float
    adversarial: float
    l1: float
    l1_per_template: Dict[str, float]
    grad_logits: np.ndarray
    grad_output: np.ndarray


def masked_l1(y_hat: np.ndarray, y: np.ndarray, masks: np.ndarray,
              templates: Sequence[str] = TEMPLATES) -> Tuple[float, Dict[str, float], np.ndarray]:
    """
    Mean absolute error over valid pixels of every template.

    ``y_hat``/``y`` are (B, 3T, H, W) and ``masks`` (B, T, H, W). Returns
    (l1, per-template l1, gradient with respect to ``y_hat``).
    """
    if y_hat.shape != y.shape:
        raise NetShapeError(f"prediction {y_hat.shape} and target {y.shape} differ")
    n_t = len(templates)
    if masks.shape != (y.shape[0], n_t) + y.shape[2:]:
        raise NetShapeError(f"mask shape {masks.shape} does not match {n_t} templates")
    weight = np.repeat(masks.astype(np.float64), 3, axis=1)
    count = weight.sum()
    if count == 0:
        raise ValueError("every target mask is empty")
    diff = y_hat.astype(np.float64) - y.astype(np.float64)
    l1 = float(np.sum(np.abs(diff) * weight) / count)
    per_template = {}
    for i, t in enumerate(templates):
        w_t = weight[:, 3 * i:3 * i + 3]
        c_t = w_t.sum()
        per_template[t] = float(np.sum(np.abs(diff[:, 3 * i:3 * i + 3]) * w_t) / c_t) if c_t else 0.0
    grad = np.sign(diff) * weight / count
    return l1, per_template, grad.astype(y_hat.dtype)


def generator_loss(logits_fake: np.ndarray, y_hat: np.ndarray, y: np.ndarray, masks: np.ndarray,
                   lambda_l1: float, templates: Sequence[str] = TEMPLATES) -> GeneratorLoss:
    """Non-saturating adversarial term plus ``lambda_l1`` times the masked L1."""
    adv, g_logits = bce_with_logits(logits_fake, np.ones((), dtype=np.float64))
    l1, per_template, g_l1 = masked_l1(y_hat, y, masks, templates)
    return GeneratorLoss(
        total=adv + lambda_l1 * l1,
        adversarial=adv,
        l1=l1,
        l1_per_template=per_template,
        grad_logits=g_logits,
        grad_output=(lambda_l1 * g_l1).astype(y_hat.dtype),
    )


def soft_labels(rng: np.random.Generator, shape, real: bool,
                real_range=(0.7, 1.0), fake_range=(0.0, 0.3)) -> np.ndarray:
    """Per-sample targets drawn uniformly from the real or the fake range."""
    lo, hi = real_range if real else fake_range
    return rng.uniform(lo, hi, size=shape)
