"""Adversarial training loop: one discriminator step, then one generator step, per batch."""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..config import TEMPLATES, from_section, to_plain
from ..dataset.manifest import TRAIN, Manifest
from ..dataset.samples import SampleReader, stack_samples
from ..errors import DatasetError, TrainingDivergedError
from ..tracking import LOG_NAME, RunLog, TrackingConfig
from .checkpoint import save_checkpoint
from .discriminator import DiscriminatorNet
from .generator import GeneratorNet, split_heads, stack_heads
from .losses import GeneratorLoss, adversarial_loss, bce_with_logits, generator_loss, soft_labels
from .optim import Adam

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.pxn"
LOG_COLUMNS = ("epoch", "loss_D", "loss_G") + tuple(f"L1_{t}" for t in TEMPLATES) + ("wall_time",)


@dataclass(frozen=True)
class TrainConfig:
    """``train`` section."""

    lambda_l1: float = 100.0
    lr: float = 2e-4
    epochs: int = 200
    batch_size: int = 4
    betas: Tuple[float, float] = (0.5, 0.999)
    soft_labels: bool = True
    real_range: Tuple[float, float] = (0.7, 1.0)
    fake_range: Tuple[float, float] = (0.0, 0.3)
    flip_fraction: float = 0.05
    seed: int = 0
    base_channels: int = 64
    disc_conditional: bool = True
    max_samples: int = 0

    def __post_init__(self):
        for name in ("real_range", "fake_range"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f"{name} must lie within [0, 1], got {(lo, hi)}")
        if not 0.0 <= self.flip_fraction < 0.5:
            raise ValueError(f"flip_fraction must lie in [0, 0.5), got {self.flip_fraction}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lambda_l1 < 0:
            raise ValueError("lambda_l1 must be >= 0")

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "TrainConfig":
        return from_section(cls, data, "train")


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    loss_d: float
    loss_g: float
    l1: Dict[str, float]
    wall_time: float

    @property
    def l1_mean(self) -> float:
        return float(np.mean(list(self.l1.values())))

    def row(self) -> Dict[str, float]:
        out = {"epoch": self.epoch, "loss_D": self.loss_d, "loss_G": self.loss_g, "wall_time": self.wall_time}
        out.update({f"L1_{t}": v for t, v in self.l1.items()})
        return out


@dataclass
class TrainResult:
    generator: GeneratorNet
    discriminator: DiscriminatorNet
    history: List[EpochLog] = field(default_factory=list)
    checkpoint: Optional[Path] = None
    log_path: Optional[Path] = None


def _mask_channels(masks: np.ndarray) -> np.ndarray:
    return np.repeat(masks, 3, axis=1).astype(np.float32)


class GanTrainer:
    """
    Owns both networks and their optimizers.

    ``x`` is (N, 18, H, W), ``y`` (N, 3T, H, W) and ``masks`` (N, T, H, W).
    The random stream drives shuffling, soft labels and flips, so a fixed
    seed reproduces the loss curve.
    """

    def __init__(self, config: TrainConfig, templates: Sequence[str] = TEMPLATES,
                 in_channels: int = 18):
        self.config = config
        self.templates = tuple(templates)
        self.generator = GeneratorNet(config.base_channels, self.templates, in_channels, seed=config.seed)
        self.discriminator = DiscriminatorNet(
            config.base_channels, 3 * len(self.templates), in_channels,
            conditional=config.disc_conditional, seed=config.seed + 1,
        )
        self.opt_g = Adam(self.generator, config.lr, config.betas)
        self.opt_d = Adam(self.discriminator, config.lr, config.betas)
        self.rng = np.random.default_rng(config.seed)

    def _targets(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        shape = (count, 1, 1, 1)
        if not self.config.soft_labels:
            return np.ones(shape), np.zeros(shape)
        ranges = (self.config.real_range, self.config.fake_range)
        return (soft_labels(self.rng, shape, True, *ranges),
                soft_labels(self.rng, shape, False, *ranges))

    def discriminator_step(self, x: np.ndarray, real: np.ndarray, fake: np.ndarray,
                           flip: np.ndarray) -> float:
        """Update D on masked real and generated maps. Returns loss_D."""
        d = self.discriminator
        labels_real, labels_fake = self._targets(len(x))
        swap = flip.reshape(-1, 1, 1, 1)
        labels_real, labels_fake = np.where(swap, labels_fake, labels_real), np.where(swap, labels_real, labels_fake)

        d.zero_grad()
        logits_real = d.forward(x, real)
        _, g_real = bce_with_logits(logits_real, labels_real)
        d.backward(0.5 * g_real)
        logits_fake = d.forward(x, fake)
        _, g_fake = bce_with_logits(logits_fake, labels_fake)
        d.backward(0.5 * g_fake)
        loss_d, _, _ = adversarial_loss(logits_fake, logits_real, labels_fake, labels_real)
        self.opt_d.step()
        return loss_d

    def generator_step(self, x: np.ndarray, y: np.ndarray, y_hat: np.ndarray,
                       masks: np.ndarray) -> GeneratorLoss:
        """
        Update G from its last forward pass (``y_hat``). D's weights and
        running statistics are left as they were.
        """
        g, d = self.generator, self.discriminator
        weight = _mask_channels(masks)
        g.zero_grad()
        d.hold_stats(True)
        try:
            logits = d.forward(x, y_hat * weight)
        finally:
            d.hold_stats(False)
        gl = generator_loss(logits, y_hat, y, masks, self.config.lambda_l1, self.templates)
        d_fake = d.backward(gl.grad_logits)
        d_out = gl.grad_output + d_fake * weight
        g.backward(split_heads(d_out, self.templates))
        self.opt_g.step()
        d.zero_grad()
        return gl

    def train_batch(self, x: np.ndarray, y: np.ndarray, masks: np.ndarray,
                    flip: np.ndarray) -> Tuple[float, float, Dict[str, float]]:
        """One D step then one G step. Returns (loss_D, loss_G, L1 per template)."""
        self.generator.train()
        self.discriminator.train()
        weight = _mask_channels(masks)
        y_hat = stack_heads(self.generator.forward(x), self.templates)
        loss_d = self.discriminator_step(x, y * weight, y_hat * weight, flip)
        gl = self.generator_step(x, y, y_hat, masks)
        return loss_d, gl.total, gl.l1_per_template

    def train_epoch(self, x: np.ndarray, y: np.ndarray, masks: np.ndarray,
                    epoch: int) -> Tuple[float, float, Dict[str, float]]:
        n = len(x)
        order = self.rng.permutation(n)
        flips = self.rng.random(n) < self.config.flip_fraction
        bs = self.config.batch_size
        totals_d, totals_g, weights = 0.0, 0.0, 0
        l1 = {t: 0.0 for t in self.templates}
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss_d, loss_g, l1_batch = self.train_batch(x[idx], y[idx], masks[idx], flips[idx])
            if not (np.isfinite(loss_d) and np.isfinite(loss_g)):
                raise TrainingDivergedError(epoch)
            totals_d += loss_d * len(idx)
            totals_g += loss_g * len(idx)
            for t in self.templates:
                l1[t] += l1_batch[t] * len(idx)
            weights += len(idx)
        return totals_d / weights, totals_g / weights, {t: v / weights for t, v in l1.items()}


def load_training_arrays(manifest: Manifest, max_samples: int = 0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Every train-split sample stacked into arrays, in manifest order."""
    reader = SampleReader(manifest)
    keys = reader.keys(TRAIN)
    if not keys:
        raise DatasetError("train split is empty")
    if max_samples:
        keys = keys[:max_samples]
    samples = [reader.load(a, k) for a, k in keys]
    return stack_samples(samples, manifest.templates)


def train_arrays(x: np.ndarray, y: np.ndarray, masks: np.ndarray, config: TrainConfig,
                 out_dir: Optional[Path] = None, stats_hash: str = "",
                 templates: Sequence[str] = TEMPLATES, tracking: Optional[TrackingConfig] = None,
                 quiet: bool = True) -> TrainResult:
    """
    Train on in-memory arrays. With ``out_dir`` a checkpoint is written
    after every epoch along with the CSV log.
    """
    trainer = GanTrainer(config, templates, in_channels=x.shape[1])
    result = TrainResult(trainer.generator, trainer.discriminator)
    log: Optional[RunLog] = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        result.log_path = out_dir / LOG_NAME
        log = RunLog(result.log_path, LOG_COLUMNS, tracking, run_name=out_dir.name, config=to_plain(config))
    x = x.astype(np.float32)
    y = y.astype(np.float32)
    masks = masks.astype(bool)
    start = time.time()
    try:
        for epoch in tqdm(range(1, config.epochs + 1), desc="train", unit="epoch", disable=quiet):
            try:
                loss_d, loss_g, l1 = trainer.train_epoch(x, y, masks, epoch)
            except TrainingDivergedError:
                raise TrainingDivergedError(epoch, result.checkpoint) from None
            entry = EpochLog(epoch, loss_d, loss_g, l1, time.time() - start)
            result.history.append(entry)
            logger.debug("epoch %d: loss_D=%.4f loss_G=%.4f L1=%.5f", epoch, loss_d, loss_g, entry.l1_mean)
            if log is not None:
                log.append(entry.row())
                result.checkpoint = save_checkpoint(
                    out_dir / CHECKPOINT_NAME, trainer.generator,
                    resolution=x.shape[2], stats_hash=stats_hash, config=to_plain(config), epoch=epoch,
                    discriminator=trainer.discriminator,
                    optimizers={"optG": trainer.opt_g, "optD": trainer.opt_d},
                )
    finally:
        if log is not None:
            log.close()
    trainer.generator.eval()
    return result


def train(manifest: Manifest, config: TrainConfig, out_dir: Path,
          tracking: Optional[TrackingConfig] = None, quiet: bool = False) -> TrainResult:
    x, y, masks = load_training_arrays(manifest, config.max_samples)
    logger.info("training on %d samples at %dx%d", len(x), x.shape[2], x.shape[3])
    return train_arrays(x, y, masks, config, out_dir, manifest.stats_hash, manifest.templates, tracking, quiet)
