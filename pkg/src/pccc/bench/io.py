"""PNG / NPY readers and writers for images, depth maps and masks."""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from ..errors import ManifestError, ValidationError


def _imread(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"missing file: {path}")
    data = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if data is None:
        raise ValidationError(f"cannot decode image: {path}")
    return data


def read_rgb(path) -> np.ndarray:
    """8- or 16-bit PNG as an H x W x 3 float array in [0, 1]."""
    data = _imread(path)
    if data.ndim == 2:
        data = np.repeat(data[..., None], 3, axis=2)
    if data.shape[2] == 4:
        data = data[..., :3]
    if data.dtype not in (np.uint8, np.uint16):
        raise ValidationError(f"{path}: unsupported pixel type {data.dtype}")
    scale = float(np.iinfo(data.dtype).max)
    return data[..., ::-1].astype(np.float64) / scale


def write_rgb16(path, img: np.ndarray) -> None:
    """Store values in [0, 1] as 16-bit RGB PNG (values outside are clipped)."""
    q = np.rint(np.clip(img, 0.0, 1.0) * 65535).astype(np.uint16)
    if not cv2.imwrite(str(path), np.ascontiguousarray(q[..., ::-1])):
        raise ValidationError(f"failed to write {path}")


def write_rgb8(path, img: np.ndarray) -> None:
    q = np.rint(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    if not cv2.imwrite(str(path), np.ascontiguousarray(q[..., ::-1])):
        raise ValidationError(f"failed to write {path}")


def read_depth(path, unit: str = "mm") -> np.ndarray:
    """Depth in metres. ``mm``: 16-bit PNG in millimetres; ``m``: float .npy."""
    path = Path(path)
    if unit == "mm":
        data = _imread(path)
        if data.ndim != 2 or data.dtype != np.uint16:
            raise ValidationError(f"{path}: depth PNG must be single-channel 16-bit")
        return data.astype(np.float64) / 1000.0
    if unit == "m":
        if not path.exists():
            raise ManifestError(f"missing file: {path}")
        return np.load(path).astype(np.float64)
    raise ValidationError(f"unknown depth unit {unit!r}")


def write_depth_mm(path, depth: np.ndarray) -> None:
    q = np.rint(np.clip(depth, 0.0, 65.535) * 1000).astype(np.uint16)
    if not cv2.imwrite(str(path), q):
        raise ValidationError(f"failed to write {path}")


def read_mask(path) -> np.ndarray:
    data = _imread(path)
    if data.ndim == 3:
        data = data[..., 0]
    return data != 0


def write_mask(path, mask: np.ndarray) -> None:
    cv2.imwrite(str(path), np.where(mask, 255, 0).astype(np.uint8))
