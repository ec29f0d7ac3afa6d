"""Local (per-pixel) white balance and relighting from per-point illuminants."""

from __future__ import annotations

import warnings
from typing import Optional

import numpy as np
from scipy import ndimage

from ..errors import ValidationError
from ..geometry import CameraIntrinsics, ColoredPointCloud, build_point_cloud, normalize_cloud, sample_points
from ..imaging import awb_gains, check_linear, make_illuminant, normalize
from ..net import PcccModel, forward

MAP_FLOOR = 1e-6


def splat_nearest(pc: ColoredPointCloud, values: np.ndarray) -> np.ndarray:
    """Scatter per-point vectors onto the source lattice, filling holes from
    the nearest pixel that received a point."""
    if pc.src is None or pc.shape is None:
        raise ValidationError("cloud has no pixel origin to project onto")
    h, w = pc.shape
    out = np.zeros((h * w, values.shape[1]))
    filled = np.zeros(h * w, dtype=bool)
    out[pc.src] = values
    filled[pc.src] = True
    out = out.reshape(h, w, -1)
    filled = filled.reshape(h, w)
    if not filled.all():
        _, (iy, ix) = ndimage.distance_transform_edt(~filled, return_indices=True)
        out = out[iy, ix]
    return out


def illumination_map(model: PcccModel, img: np.ndarray, dm: np.ndarray, k: CameraIntrinsics,
                     n_points: Optional[int] = None, depth_mode: str = "real", seed: int = 0):
    """Per-pixel illuminant map (H x W x 3) from the model's per-point output.

    Every pixel holds the raw per-point estimate of some point; runs on all
    valid pixels unless ``n_points`` asks for a stratified subsample.
    Returns (map, global estimate).
    """
    if not model.trained:
        warnings.warn("illumination map from an untrained model", stacklevel=2)
    pc = build_point_cloud(img, dm, k, depth_mode)
    if n_points is not None:
        pc = sample_points(pc, n_points, seed)
    res = forward(model, normalize_cloud(pc)[0].points)
    return splat_nearest(pc, res.p_illum), res.e_global


def local_awb_with_map(img: np.ndarray, illum_map: np.ndarray) -> np.ndarray:
    """Per-pixel green-anchored gains from the reciprocal of the map."""
    img = check_linear(img)
    if illum_map.shape != img.shape:
        raise ValidationError("illumination map and image differ in shape")
    return img * awb_gains(normalize(illum_map))


def local_awb(model: PcccModel, img: np.ndarray, dm: np.ndarray, k: CameraIntrinsics, **kw):
    """Returns (corrected image, illumination map)."""
    illum_map, _ = illumination_map(model, img, dm, k, **kw)
    return local_awb_with_map(img, illum_map), illum_map


def shift_map(illum_map: np.ndarray):
    """Split a chromaticity map into (shift, per-channel mean); shift + mean = map."""
    mean = illum_map.reshape(-1, 3).mean(axis=0)
    return illum_map - mean, mean


def relight_with_map(img: np.ndarray, illum_map: np.ndarray, new_chromaticity) -> np.ndarray:
    """Swap the mean term of the chromaticity map for ``new_chromaticity``.

    The mean term keeps its length, so only its chromaticity changes; the
    image is rescaled per pixel by new_map / old_map.
    """
    img = check_linear(img)
    old = normalize(illum_map)
    shift, mean = shift_map(old)
    new_mean = make_illuminant(new_chromaticity) * np.sqrt(np.sum(mean * mean))
    new = np.maximum(shift + new_mean, 0.0)
    return img * new / np.maximum(old, MAP_FLOOR)


def relight(model: PcccModel, img: np.ndarray, dm: np.ndarray, k: CameraIntrinsics, new_chromaticity, **kw):
    illum_map, _ = illumination_map(model, img, dm, k, **kw)
    return relight_with_map(img, illum_map, new_chromaticity)
