from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..augment import AugmentConfig, augment
from ..errors import DivergenceError, ValidationError
from ..geometry import ColoredPointCloud, normalize_cloud, sample_points
from .model import Architecture, PcccModel, forward_batch, init_model, loss_and_grads
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 10000
    lr: float = 3e-4
    batch_size: int = 16
    seed: int = 0
    n_points: int = 256
    use_augment: bool = True
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    arch: Architecture = field(default_factory=Architecture)
    dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if not self.lr > 0:
            raise ValidationError("lr must be > 0")
        if self.batch_size < 1 or self.n_points < 1:
            raise ValidationError("batch_size and n_points must be >= 1")


def sample_rng(seed: int, index: int, epoch: int) -> np.random.Generator:
    """Independent stream per (run seed, sample, epoch)."""
    return np.random.default_rng([seed, index, epoch])


def prepare(pc: ColoredPointCloud, n_points: int, rng: np.random.Generator,
            aug: Optional[AugmentConfig] = None, label=None) -> np.ndarray:
    """Sample, optionally augment, then normalize; returns (n_points, 6)."""
    pc = sample_points(pc, n_points, seed=int(rng.integers(2**63)))
    if aug is not None and aug.enabled:
        pc, _ = augment(pc, label, aug, rng)
    return normalize_cloud(pc)[0].points


def train(
    samples: Sequence[tuple],
    cfg: TrainConfig,
    model: Optional[PcccModel] = None,
    callback: Optional[Callable[[int, float, PcccModel], None]] = None,
):
    """Fit a model on (cloud, illuminant) pairs.

    One Adam step per mini-batch on the batch-mean loss. Returns the model
    and the per-epoch mean training loss in radians. Runs are bit-for-bit
    reproducible for a fixed config.
    """
    if not samples:
        raise ValidationError("training set is empty")
    dtype = np.dtype(cfg.dtype)
    if model is None:
        model = init_model(cfg.arch, seed=cfg.seed, dtype=dtype)
    state = AdamState.for_model(model, lr=cfg.lr)
    labels = np.stack([np.asarray(s[1], dtype=np.float64) for s in samples])
    aug = cfg.augment if cfg.use_augment else None
    history = []
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(samples))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            x = np.stack([
                prepare(samples[i][0], cfg.n_points, sample_rng(cfg.seed, int(i), epoch), aug, labels[i])
                for i in idx
            ]).astype(dtype)
            loss, losses, grads = loss_and_grads(model, x, labels[idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            adam_step(model, grads, state)
            total += float(losses.sum())
        history.append(total / len(samples))
        if callback is not None:
            callback(epoch, history[-1], model)
        log.debug("epoch %d loss %.5f (%.1fs)", epoch, history[-1], time.perf_counter() - t0)
    model.trained = True
    return model, history


def predict(model: PcccModel, pc: ColoredPointCloud, n_points: int = 256, seed: int = 0):
    """Global illuminant estimate (unit 3-vector) for one cloud."""
    x = prepare(pc, n_points, np.random.default_rng(seed))
    return forward_batch(model, x[None].astype(model.dtype)).e_global[0]


def predict_many(model: PcccModel, clouds: Sequence[ColoredPointCloud], n_points: int = 256,
                 seed: int = 0, batch_size: int = 64) -> np.ndarray:
    out = []
    for start in range(0, len(clouds), batch_size):
        x = np.stack([prepare(pc, n_points, np.random.default_rng(seed))
                      for pc in clouds[start : start + batch_size]])
        out.append(forward_batch(model, x.astype(model.dtype)).e_global)
    return np.concatenate(out)
