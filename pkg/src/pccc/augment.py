"""Label-preserving point-cloud augmentations: pose jitter and light intensity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ValidationError
from .geometry import ColoredPointCloud


@dataclass(frozen=True)
class AugmentConfig:
    max_rotation_deg: float = 10.0
    intensity_mean: float = 1.0
    intensity_sigma: float = 0.15
    intensity_floor: float = 0.1
    pose: bool = True
    intensity: bool = True

    def __post_init__(self):
        if not (0 <= self.max_rotation_deg < 180):
            raise ValidationError("max_rotation_deg must lie in [0, 180)")
        if self.intensity_sigma < 0:
            raise ValidationError("intensity_sigma must be >= 0")
        if self.intensity_floor <= 0:
            raise ValidationError("intensity_floor must be > 0")

    @property
    def enabled(self) -> bool:
        return self.pose or self.intensity


def sample_rotation(max_deg: float, rng: np.random.Generator) -> np.ndarray:
    """Rotation from independent x/y/z Euler angles uniform in +-max_deg."""
    angles = rng.uniform(-max_deg, max_deg, size=3)
    return Rotation.from_euler("xyz", angles, degrees=True).as_matrix()


def camera_pose_aug(pc: ColoredPointCloud, cfg: AugmentConfig, rng: np.random.Generator) -> ColoredPointCloud:
    """Rotate xyz about the cloud centroid; colours are copied unchanged."""
    r = sample_rotation(cfg.max_rotation_deg, rng)
    if cfg.max_rotation_deg == 0:
        return pc.with_points(pc.points.copy())
    center = pc.xyz.mean(axis=0)
    pts = pc.points.copy()
    pts[:, :3] = (pc.xyz - center) @ r.T + center
    return pc.with_points(pts)


def sample_intensity(cfg: AugmentConfig, rng: np.random.Generator) -> float:
    scale = rng.normal(cfg.intensity_mean, cfg.intensity_sigma)
    return max(float(scale), cfg.intensity_floor)


def light_intensity_aug(pc: ColoredPointCloud, cfg: AugmentConfig, rng: np.random.Generator) -> ColoredPointCloud:
    """Scale every colour by one scalar drawn from N(mean, sigma^2), floored."""
    scale = sample_intensity(cfg, rng)
    pts = pc.points.copy()
    if scale != 1.0:
        pts[:, 3:] *= scale
    return pc.with_points(pts)


def augment(pc: ColoredPointCloud, label: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator):
    """Pose jitter then intensity scaling. The label is returned untouched."""
    if cfg.pose:
        pc = camera_pose_aug(pc, cfg, rng)
    if cfg.intensity:
        pc = light_intensity_aug(pc, cfg, rng)
    return pc, label
