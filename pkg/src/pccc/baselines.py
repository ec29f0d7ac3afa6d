"""Statistics-based illuminant estimators (Gray World family)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import EstimationError, ValidationError
from .imaging import check_linear, make_illuminant


@dataclass(frozen=True)
class BaselineConfig:
    """Estimator hyper-parameters.

    ``minkowski_p`` may be ``math.inf`` (max norm). Pixels with any channel
    at or above ``saturation_threshold * white_level`` are excluded.
    """

    minkowski_p: float = 6.0
    smoothing_sigma: float = 2.0
    derivative_order: int = 1
    saturation_threshold: float = 0.98
    white_level: float = 1.0

    def __post_init__(self):
        if not (self.minkowski_p >= 1):
            raise ValidationError(f"minkowski_p must be >= 1 or inf, got {self.minkowski_p}")
        if self.derivative_order not in (0, 1, 2):
            raise ValidationError("derivative_order must be 0, 1 or 2")
        if self.smoothing_sigma < 0:
            raise ValidationError("smoothing_sigma must be >= 0")
        if not (0 < self.saturation_threshold <= 1):
            raise ValidationError("saturation_threshold must lie in (0, 1]")


DEFAULT = BaselineConfig()


def unsaturated_mask(img: np.ndarray, cfg: BaselineConfig = DEFAULT) -> np.ndarray:
    mask = np.all(img < cfg.saturation_threshold * cfg.white_level, axis=-1)
    if not mask.any():
        raise EstimationError("every pixel is saturated")
    return mask


def _finish(v: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(v)) or not np.any(v > 0):
        raise EstimationError("estimate is zero or non-finite")
    return make_illuminant(v)


def minkowski_mean(values: np.ndarray, p: float) -> np.ndarray:
    """Per-column (mean of v**p)**(1/p) for an (n, 3) array of non-negative values."""
    if math.isinf(p):
        return values.max(axis=0)
    if p == 1:
        return values.mean(axis=0)
    # factor out the column max so large p cannot underflow
    top = values.max(axis=0)
    safe = np.where(top > 0, top, 1.0)
    return top * np.mean((values / safe) ** p, axis=0) ** (1.0 / p)


def gray_world(img: np.ndarray, cfg: BaselineConfig = DEFAULT) -> np.ndarray:
    img = check_linear(img)
    return _finish(img[unsaturated_mask(img, cfg)].mean(axis=0))


def white_patch(img: np.ndarray, cfg: BaselineConfig = DEFAULT) -> np.ndarray:
    img = check_linear(img)
    return _finish(img[unsaturated_mask(img, cfg)].max(axis=0))


def shades_of_gray(img: np.ndarray, cfg: BaselineConfig = DEFAULT) -> np.ndarray:
    img = check_linear(img)
    return _finish(minkowski_mean(img[unsaturated_mask(img, cfg)], cfg.minkowski_p))


def derivative_magnitude(channel: np.ndarray, order: int) -> np.ndarray:
    """Central-difference gradient (order 1) or Laplacian (order 2) magnitude.

    Borders use reflective padding.
    """
    f = np.pad(channel, 1, mode="symmetric")
    c = f[1:-1, 1:-1]
    if order == 1:
        dx = (f[1:-1, 2:] - f[1:-1, :-2]) / 2.0
        dy = (f[2:, 1:-1] - f[:-2, 1:-1]) / 2.0
        return np.sqrt(dx * dx + dy * dy)
    if order == 2:
        lap = f[1:-1, 2:] + f[1:-1, :-2] + f[2:, 1:-1] + f[:-2, 1:-1] - 4.0 * c
        return np.abs(lap)
    raise ValidationError(f"derivative order must be 1 or 2, got {order}")


def gray_edge(img: np.ndarray, cfg: BaselineConfig = DEFAULT) -> np.ndarray:
    """Gray Edge: Minkowski mean of smoothed per-channel derivative magnitudes."""
    img = check_linear(img)
    if cfg.derivative_order not in (1, 2):
        raise ValidationError("gray_edge needs derivative_order 1 or 2")
    mask = unsaturated_mask(img, cfg)
    grads = np.empty_like(img)
    for ch in range(3):
        plane = img[..., ch]
        if cfg.smoothing_sigma > 0:
            plane = ndimage.gaussian_filter(plane, cfg.smoothing_sigma, mode="reflect", truncate=3.0)
        grads[..., ch] = derivative_magnitude(plane, cfg.derivative_order)
    energy = grads[mask]
    if not np.any(energy > 0):
        raise EstimationError("image has no gradient energy")
    return _finish(minkowski_mean(energy, cfg.minkowski_p))


METHODS = {
    "grayworld": lambda img, cfg: gray_world(img, cfg),
    "whitepatch": lambda img, cfg: white_patch(img, cfg),
    "sog": lambda img, cfg: shades_of_gray(img, cfg),
    "grayedge1": lambda img, cfg: gray_edge(img, replace(cfg, derivative_order=1)),
    "grayedge2": lambda img, cfg: gray_edge(img, replace(cfg, derivative_order=2)),
}


def estimate(method: str, img: np.ndarray, cfg: BaselineConfig = DEFAULT) -> np.ndarray:
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValidationError(f"unknown baseline {method!r}; choose from {sorted(METHODS)}") from None
    return fn(img, cfg)
