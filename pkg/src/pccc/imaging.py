"""Colour-science primitives on H x W x 3 float arrays.

Images are plain numpy arrays. sRGB images hold gamma-encoded values in
[0, 1]; linear images hold non-negative linear-light values. An illuminant
is a unit-norm, non-negative 3-vector (see :func:`make_illuminant`).
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import (
    EmptyMaskError,
    ShapeMismatchError,
    SingularMatrixError,
    ValidationError,
    ZeroVectorError,
)

log = logging.getLogger(__name__)

NEUTRAL = np.full(3, 1.0 / np.sqrt(3.0))


def normalize(v: np.ndarray) -> np.ndarray:
    """Scale vectors along the last axis to unit Euclidean norm.

    The reduction is written out explicitly so a single 3-vector and a stack
    of 3-vectors round identically (local and global AWB rely on this).
    """
    v = np.asarray(v, dtype=np.float64)
    return v / np.sqrt(np.sum(v * v, axis=-1, keepdims=True))


def make_illuminant(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise ValidationError(f"illuminant must have 3 components, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("illuminant has non-finite components")
    if np.any(v < 0):
        raise ValidationError(f"illuminant has negative components: {v}")
    if not np.any(v > 0):
        raise ZeroVectorError("illuminant is the zero vector")
    # pre-scale so tiny (subnormal) inputs do not underflow when squared
    return normalize(v / v.max())


def check_srgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] * img.shape[1] < 1:
        raise ValidationError(f"expected an H x W x 3 image, got {img.shape}")
    if not np.all((img >= 0) & (img <= 1)):
        raise ValidationError("sRGB values must lie in [0, 1]")
    return img


def check_linear(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] * img.shape[1] < 1:
        raise ValidationError(f"expected an H x W x 3 image, got {img.shape}")
    if not np.all(np.isfinite(img)) or np.any(img < 0):
        raise ValidationError("linear image must be finite and non-negative")
    return img


def srgb_to_linear(img: np.ndarray) -> np.ndarray:
    """Piecewise sRGB EOTF (linear toe below 0.04045, 2.4 power above)."""
    img = check_srgb(img)
    return np.where(
        img <= 0.04045,
        img / 12.92,
        ((img + 0.055) / 1.055) ** 2.4,
    )


def linear_to_srgb(img: np.ndarray) -> np.ndarray:
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.where(
        img <= 0.04045 / 12.92,  # exact image of the forward breakpoint, so round trips agree
        img * 12.92,
        1.055 * img ** (1 / 2.4) - 0.055,
    )


def check_tuning(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValidationError(f"tuning matrix must be 3x3, got {m.shape}")
    if abs(np.linalg.det(m)) <= 1e-12:
        raise SingularMatrixError("tuning matrix is singular")
    return m


def remove_tuning(img: np.ndarray, m) -> np.ndarray:
    """Apply the inverse of the camera tuning matrix to every pixel.

    Negative results are clamped to zero and the clamp count is logged.
    """
    img = check_linear(img)
    minv = np.linalg.inv(check_tuning(m))
    out = img @ minv.T
    neg = out < 0
    if neg.any():
        log.info("remove_tuning clamped %d negative values", int(neg.sum()))
        out = np.where(neg, 0.0, out)
    return out


def label_illuminant(img: np.ndarray, mask: np.ndarray, statistic: str = "mean") -> np.ndarray:
    """Ground-truth illuminant from the pixels of a neutral surface.

    ``statistic`` is ``"mean"`` (default) or ``"median"``; the statistic is
    taken in linear space and then normalized.
    """
    img = check_linear(img)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.shape[:2]:
        raise ShapeMismatchError(f"mask {mask.shape} does not match image {img.shape[:2]}")
    if not mask.any():
        raise EmptyMaskError("neutral mask selects no pixels")
    px = img[mask]
    if statistic == "mean":
        v = px.mean(axis=0)
    elif statistic == "median":
        v = np.median(px, axis=0)
    else:
        raise ValidationError(f"unknown statistic {statistic!r}")
    if not np.any(v > 0):
        raise ZeroVectorError("masked region is black")
    return make_illuminant(v)


def awb_gains(e: np.ndarray) -> np.ndarray:
    """Green-anchored von Kries gains for one or many illuminants (last axis)."""
    return e[..., 1:2] / e


def apply_awb(img: np.ndarray, e) -> np.ndarray:
    img = check_linear(img)
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (3,) or np.any(e <= 0):
        raise ZeroVectorError(f"white balance needs strictly positive illuminant, got {e}")
    return img * awb_gains(e)


def angular_error(a, b) -> float:
    """Angle between two illuminants in degrees.

    Uses 2*atan2(|a-b|, |a+b|), which equals arccos(a.b) for unit vectors but
    is exact at 0 and well conditioned near it.
    """
    a = normalize(a)
    b = normalize(b)
    return float(np.degrees(2.0 * np.arctan2(np.linalg.norm(a - b), np.linalg.norm(a + b))))
