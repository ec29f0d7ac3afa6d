"""Synthetic labelled RGB-D scenes.

Scenes are unions of planes and bounded rectangles ("cards") seen through a
pinhole camera. Depth is the exact ray-plane intersection; colour follows the
diagonal (von Kries) model: pixel = exposure * shading * albedo * illuminant,
with Lambertian shading from one fixed light direction plus an ambient term.
An optional second illuminant is blended in along one camera axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import NoVisibleSurfaceError, ValidationError
from ..geometry import CameraIntrinsics, pixel_grid
from ..imaging import make_illuminant, normalize

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass
class Surface:
    """Plane through ``point`` with ``normal``; bounded when ``half`` is set.

    A bounded surface is the rectangle spanned by ``axes`` (two in-plane unit
    vectors) with half-extents ``half``.
    """

    normal: np.ndarray
    point: np.ndarray
    albedo: np.ndarray
    axes: Optional[np.ndarray] = None
    half: Optional[tuple] = None

    def __post_init__(self):
        self.normal = normalize(np.asarray(self.normal, dtype=np.float64))
        self.point = np.asarray(self.point, dtype=np.float64)
        self.albedo = np.asarray(self.albedo, dtype=np.float64)
        if self.albedo.shape != (3,) or np.any(self.albedo < 0) or np.any(self.albedo > 1):
            raise ValidationError(f"albedo must be a 3-vector in [0, 1], got {self.albedo}")
        if self.half is not None:
            self.axes = np.asarray(self.axes, dtype=np.float64).reshape(2, 3)


@dataclass
class SyntheticSceneSpec:
    surfaces: list
    illuminant: np.ndarray
    illuminant2: Optional[np.ndarray] = None
    blend_axis: str = "z"
    blend_center: float = 2.5
    blend_width: float = 0.25
    width: int = 64
    height: int = 64
    intrinsics: Optional[CameraIntrinsics] = None
    light_dir: np.ndarray = field(default_factory=lambda: np.array([0.3, -0.6, -0.75]))
    ambient: float = 0.35
    exposure: float = 0.8
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.illuminant = make_illuminant(self.illuminant)
        if self.illuminant2 is not None:
            self.illuminant2 = make_illuminant(self.illuminant2)
        if self.blend_axis not in _AXES:
            raise ValidationError(f"blend_axis must be one of {sorted(_AXES)}")
        if self.intrinsics is None:
            f = 0.9 * self.width
            self.intrinsics = CameraIntrinsics(f, f, (self.width - 1) / 2, (self.height - 1) / 2)
        self.light_dir = normalize(np.asarray(self.light_dir, dtype=np.float64))


def blend_weight(xyz: np.ndarray, spec: SyntheticSceneSpec) -> np.ndarray:
    """Share of the second illuminant at each 3-D point (0 without one)."""
    if spec.illuminant2 is None:
        return np.zeros(xyz.shape[:-1])
    s = (xyz[..., _AXES[spec.blend_axis]] - spec.blend_center) / spec.blend_width
    return 0.5 * (1.0 + np.tanh(0.5 * s))


def render(spec: SyntheticSceneSpec):
    """Render a scene; returns (image, depth, gt, blend_map).

    ``gt`` is the normalized mean of the per-pixel illuminant over visible
    pixels, which is the single illuminant itself for one-light scenes.
    """
    k = spec.intrinsics
    u, v = pixel_grid(spec.height, spec.width)
    rays = np.stack([(u - k.cx) / k.fx, (v - k.cy) / k.fy, np.ones_like(u)], axis=-1)
    depth = np.full(u.shape, np.inf)
    hit = np.full(u.shape, -1)
    for i, s in enumerate(spec.surfaces):
        denom = rays @ s.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-12, (s.point @ s.normal) / denom, np.inf)
        ok = t > 1e-6
        if s.half is not None:
            rel = rays * t[..., None] - s.point
            for ax, h in zip(s.axes, s.half):
                ok &= np.abs(rel @ ax) <= h
        closer = ok & (t < depth)
        depth[closer] = t[closer]
        hit[closer] = i
    visible = hit >= 0
    if not visible.any():
        raise NoVisibleSurfaceError("no surface is visible from the camera")
    depth[~visible] = 0.0

    xyz = rays * depth[..., None]
    normals = np.zeros(u.shape + (3,))
    albedo = np.zeros(u.shape + (3,))
    for i, s in enumerate(spec.surfaces):
        sel = hit == i
        facing = np.where((rays[sel] @ s.normal)[:, None] < 0, s.normal, -s.normal)
        normals[sel] = facing
        albedo[sel] = s.albedo
    shading = spec.ambient + (1 - spec.ambient) * np.clip(normals @ spec.light_dir, 0.0, None)
    alpha = blend_weight(xyz, spec)
    if spec.illuminant2 is None:
        illum = np.broadcast_to(spec.illuminant, u.shape + (3,))
    else:
        illum = (1 - alpha)[..., None] * spec.illuminant + alpha[..., None] * spec.illuminant2
    img = spec.exposure * shading[..., None] * albedo * illum
    img[~visible] = 0.0
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        img = img + rng.normal(0.0, spec.noise_sigma, img.shape) * visible[..., None]
        img = np.clip(img, 0.0, None)
    if spec.illuminant2 is None:
        gt = spec.illuminant.copy()
    else:
        gt = make_illuminant(illum[visible].mean(axis=0))
    alpha = np.where(visible, alpha, 0.0)
    return img, depth, gt, alpha


def synth_generate(spec: SyntheticSceneSpec):
    """(linear image, depth map, ground-truth illuminant) for a scene spec."""
    img, depth, gt, _ = render(spec)
    return img, depth, gt


# --- random scene families -------------------------------------------------


def locus_illuminant(rng: np.random.Generator, t: Optional[float] = None, spread: float = 0.04) -> np.ndarray:
    """Illuminant near a warm-to-cool locus in camera RGB.

    ``t`` in [0, 1] runs from tungsten-like (red heavy) to shade-like (blue
    heavy); small off-locus jitter of relative size ``spread``.
    """
    if t is None:
        t = rng.uniform()
    r = np.exp(0.9 * (0.5 - t))
    b = np.exp(0.9 * (t - 0.5))
    e = np.array([r, 1.0, b]) * np.exp(rng.normal(0.0, spread, 3))
    return make_illuminant(e)


def random_albedo(rng: np.random.Generator, neutral: bool = False) -> np.ndarray:
    if neutral:
        return np.full(3, rng.uniform(0.35, 0.85))
    base = rng.uniform(0.15, 0.85)
    tint = np.exp(rng.normal(0.0, 0.45, 3))
    return np.clip(base * tint / tint.max() * rng.uniform(0.8, 1.0), 0.03, 0.95)


def _card(rng, center, albedo, size=(0.2, 0.6)):
    yaw = rng.uniform(-0.6, 0.6)
    normal = np.array([np.sin(yaw), 0.0, -np.cos(yaw)])
    ax1 = np.array([np.cos(yaw), 0.0, np.sin(yaw)])
    ax2 = np.array([0.0, 1.0, 0.0])
    return Surface(normal, center, albedo, axes=np.stack([ax1, ax2]), half=tuple(rng.uniform(*size, 2)))


def room_surfaces(rng: np.random.Generator, neutral_floor: bool = True) -> list:
    """Back wall, floor, side wall and a few cards at random depths.

    The floor is achromatic when ``neutral_floor``; everything else gets a
    random tinted albedo.
    """
    back = rng.uniform(3.0, 6.0)
    floor_h = rng.uniform(0.8, 1.4)
    tilt = rng.uniform(-0.25, 0.25)
    surfaces = [
        Surface([np.sin(tilt), 0.0, -np.cos(tilt)], [0.0, 0.0, back], random_albedo(rng)),
        Surface([0.0, -1.0, 0.0], [0.0, floor_h, 0.0], random_albedo(rng, neutral=neutral_floor)),
    ]
    side = rng.choice([-1.0, 1.0])
    surfaces.append(Surface([side, 0.0, 0.0], [-side * rng.uniform(1.5, 2.5), 0.0, 0.0], random_albedo(rng)))
    for _ in range(rng.integers(1, 4)):
        z = rng.uniform(1.2, back - 0.4)
        x = rng.uniform(-0.5, 0.5) * z
        y = rng.uniform(-0.2, 0.3) * z
        surfaces.append(_card(rng, [x, min(y, floor_h - 0.3), z], random_albedo(rng)))
    return surfaces


SCENE_KINDS = ("standard", "mixed-depth", "mixed-lr", "achromatic")


def random_scene(rng: np.random.Generator, kind: str = "standard", size: int = 64,
                 noise_sigma: float = 0.002, seed: int = 0) -> SyntheticSceneSpec:
    """Draw a scene spec from one of the families in ``SCENE_KINDS``.

    * ``standard``: one locus illuminant, neutral floor, tinted walls/cards.
    * ``mixed-depth``: warm light near the camera, cool light far away, blended
      along z at a random depth; the label is the pixel-mean illuminant.
    * ``mixed-lr``: a warm and a cool light (random sides) blended left to right.
    * ``achromatic``: every albedo grey, one light, no noise.
    """
    if kind not in SCENE_KINDS:
        raise ValidationError(f"unknown scene kind {kind!r}")
    kw = dict(width=size, height=size, noise_sigma=noise_sigma, seed=seed,
              exposure=rng.uniform(0.5, 0.9))
    if kind == "achromatic":
        surfaces = room_surfaces(rng)
        for s in surfaces:
            s.albedo = np.full(3, s.albedo.mean())
        return SyntheticSceneSpec(surfaces, locus_illuminant(rng), **{**kw, "noise_sigma": 0.0})
    if kind == "standard":
        return SyntheticSceneSpec(room_surfaces(rng), locus_illuminant(rng), **kw)
    if kind == "mixed-depth":
        surfaces = room_surfaces(rng, neutral_floor=False)
        e_near = locus_illuminant(rng, rng.uniform(0.0, 0.45))
        e_far = locus_illuminant(rng, rng.uniform(0.55, 1.0))
        return SyntheticSceneSpec(surfaces, e_near, e_far, blend_axis="z",
                                  blend_center=rng.uniform(1.8, 3.5), blend_width=0.1, **kw)
    surfaces = room_surfaces(rng)
    lights = [locus_illuminant(rng, rng.uniform(0.0, 0.45)), locus_illuminant(rng, rng.uniform(0.55, 1.0))]
    if rng.uniform() < 0.5:
        lights.reverse()
    return SyntheticSceneSpec(surfaces, *lights, blend_axis="x", blend_center=rng.uniform(-0.3, 0.3),
                              blend_width=0.05, **kw)
