"""Pinhole back-projection, depth registration and coloured point clouds."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    EmptyCloudError,
    InvalidDepthError,
    ShapeMismatchError,
    ValidationError,
)
from .imaging import check_linear

log = logging.getLogger(__name__)

MIN_POINTS = 16


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError(f"focal lengths must be positive: {self.fx}, {self.fy}")

    def scaled(self, sx: float, sy: float) -> "CameraIntrinsics":
        """Intrinsics after resampling the image by (sx, sy), pixel centres kept."""
        return CameraIntrinsics(
            self.fx * sx,
            self.fy * sy,
            (self.cx + 0.5) * sx - 0.5,
            (self.cy + 0.5) * sy - 0.5,
        )


@dataclass(frozen=True)
class RigidTransform:
    r: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(r) - 1) > 1e-9:
            raise ValidationError("rotation is not orthonormal with det 1")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, xyz: np.ndarray) -> np.ndarray:
        return xyz @ self.r.T + self.t


@dataclass
class ColoredPointCloud:
    """N x 6 rows of (x, y, z, r, g, b).

    ``src`` holds the flat pixel index each point came from and ``shape`` the
    (H, W) of that pixel lattice; both are None for clouds without an image
    origin. Clouds built from depth have z > 0; normalized or augmented
    clouds live in other frames and are not held to that.
    """

    points: np.ndarray
    src: Optional[np.ndarray] = None
    shape: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 6 or len(pts) < 1:
            raise ValidationError(f"point cloud must be N x 6 with N >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("point cloud has non-finite values")
        if np.any(pts[:, 3:] < 0):
            raise ValidationError("point colours must be non-negative")
        self.points = pts
        if self.src is not None:
            self.src = np.asarray(self.src, dtype=np.int64)
            if self.src.shape != (len(pts),):
                raise ShapeMismatchError("src must hold one pixel index per point")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]

    @property
    def rgb(self) -> np.ndarray:
        return self.points[:, 3:]

    def take(self, idx) -> "ColoredPointCloud":
        return ColoredPointCloud(
            self.points[idx],
            None if self.src is None else self.src[idx],
            self.shape,
            dict(self.meta),
        )

    def with_points(self, points: np.ndarray) -> "ColoredPointCloud":
        return ColoredPointCloud(points, self.src, self.shape, dict(self.meta))


def backproject(u, v, d, k: CameraIntrinsics) -> np.ndarray:
    """Pixel (u, v) at depth d to camera coordinates. Broadcasts over arrays."""
    u, v, d = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (u, v, d)))
    if np.any(d <= 0):
        raise InvalidDepthError("depth must be positive")
    return np.stack([(u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d], axis=-1)


def project(p, k: CameraIntrinsics) -> np.ndarray:
    """Camera coordinates to pixel (u, v); rows of ``p`` are 3-vectors."""
    p = np.asarray(p, dtype=np.float64)
    z = p[..., 2]
    if np.any(z <= 0):
        raise InvalidDepthError("point must lie in front of the camera")
    return np.stack([k.fx * p[..., 0] / z + k.cx, k.fy * p[..., 1] / z + k.cy], axis=-1)


def check_depth(dm: np.ndarray) -> np.ndarray:
    dm = np.asarray(dm, dtype=np.float64)
    if dm.ndim != 2 or dm.size < 1:
        raise ValidationError(f"depth map must be H x W, got {dm.shape}")
    if not np.all(np.isfinite(dm)) or np.any(dm < 0):
        raise ValidationError("depth must be finite and non-negative")
    return dm


def pixel_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    v, u = np.mgrid[0:h, 0:w]
    return u.astype(np.float64), v.astype(np.float64)


def align_depth_to_rgb(
    dm: np.ndarray,
    kd: CameraIntrinsics,
    kc: CameraIntrinsics,
    x: RigidTransform,
    out_shape: Optional[tuple] = None,
) -> np.ndarray:
    """Register a depth map into the RGB camera.

    ``x`` maps depth-camera coordinates to RGB-camera coordinates. Points
    land on the nearest pixel; on collisions the smallest z wins and pixels
    nobody hits stay 0. ``out_shape`` defaults to the depth map's shape.
    """
    dm = check_depth(dm)
    h, w = out_shape if out_shape is not None else dm.shape
    out = np.full(h * w, np.inf)
    valid = dm > 0
    if valid.any():
        u, v = pixel_grid(*dm.shape)
        pts = x.apply(backproject(u[valid], v[valid], dm[valid], kd))
        front = pts[:, 2] > 0
        pts = pts[front]
        uv = np.rint(project(pts, kc)).astype(np.int64)
        inside = (uv[:, 0] >= 0) & (uv[:, 0] < w) & (uv[:, 1] >= 0) & (uv[:, 1] < h)
        flat = uv[inside, 1] * w + uv[inside, 0]
        np.minimum.at(out, flat, pts[inside, 2])
    out[np.isinf(out)] = 0.0
    return out.reshape(h, w)


def build_point_cloud(
    img: np.ndarray,
    dm: np.ndarray,
    k: CameraIntrinsics,
    depth_mode: str = "real",
) -> ColoredPointCloud:
    """One point per valid pixel, in row-major pixel order.

    ``depth_mode="uniform_one"`` ignores the depth map and places every pixel
    at d = 1 (the no-depth ablation).
    """
    img = check_linear(img)
    dm = check_depth(dm)
    if img.shape[:2] != dm.shape:
        raise ShapeMismatchError(f"image {img.shape[:2]} and depth {dm.shape} differ")
    h, w = dm.shape
    if depth_mode == "real":
        d = dm.reshape(-1)
    elif depth_mode == "uniform_one":
        d = np.ones(h * w)
    else:
        raise ValidationError(f"unknown depth mode {depth_mode!r}")
    src = np.flatnonzero(d > 0)
    if len(src) < MIN_POINTS:
        raise EmptyCloudError(f"only {len(src)} valid pixels, need {MIN_POINTS}")
    u = (src % w).astype(np.float64)
    v = (src // w).astype(np.float64)
    xyz = backproject(u, v, d[src], k)
    rgb = img.reshape(-1, 3)[src]
    return ColoredPointCloud(np.concatenate([xyz, rgb], axis=1), src, (h, w))


def downscale_rgbd(img: np.ndarray, dm: np.ndarray, k: CameraIntrinsics, size: tuple):
    """Average-pool an RGB-D pair to ``size`` = (h, w) thumbnail.

    Colour is averaged over each block; depth over the block's valid pixels
    (0 if none). Dimensions must divide evenly.
    """
    img = check_linear(img)
    dm = check_depth(dm)
    h, w = dm.shape
    th, tw = size
    if h % th or w % tw:
        raise ValidationError(f"{h}x{w} does not pool evenly to {th}x{tw}")
    bh, bw = h // th, w // tw
    small = img.reshape(th, bh, tw, bw, 3).mean(axis=(1, 3))
    blocks = dm.reshape(th, bh, tw, bw)
    cnt = (blocks > 0).sum(axis=(1, 3))
    dsum = blocks.sum(axis=(1, 3))
    dsmall = np.divide(dsum, cnt, out=np.zeros_like(dsum), where=cnt > 0)
    return small, dsmall, k.scaled(tw / w, th / h)


def _grid_shape(n: int, h: int, w: int) -> tuple[int, int]:
    gh = max(1, min(h, int(round(np.sqrt(n * h / w)))))
    gw = max(1, min(w, int(round(n / gh))))
    return gh, gw


def sample_points(pc: ColoredPointCloud, n: int, seed: int) -> ColoredPointCloud:
    """Stratified sample of ``n`` points over the source pixel lattice.

    The lattice is split into a grid of about ``n`` cells and one random
    point is drawn per non-empty cell; surplus picks are dropped at random
    and any shortfall is filled uniformly from the remaining points. When
    ``n`` exceeds the cloud size the points repeat cyclically.
    """
    if n < 1:
        raise ValidationError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    npts = len(pc)
    if n > npts:
        log.warning("requested %d points from a cloud of %d; repeating", n, npts)
        order = rng.permutation(npts)
        return pc.take(np.resize(order, n))
    if pc.src is None or pc.shape is None:
        return pc.take(np.sort(rng.choice(npts, size=n, replace=False)))
    h, w = pc.shape
    gh, gw = _grid_shape(n, h, w)
    row = pc.src // w
    col = pc.src % w
    cell = (row * gh // h) * gw + (col * gw // w)
    # random key per point; the smallest key in each cell is its pick
    key = rng.random(npts)
    order = np.lexsort((key, cell))
    first = np.ones(npts, dtype=bool)
    first[1:] = cell[order][1:] != cell[order][:-1]
    picks = order[first]
    if len(picks) > n:
        picks = rng.choice(picks, size=n, replace=False)
    elif len(picks) < n:
        rest = np.setdiff1d(np.arange(npts), picks)
        picks = np.concatenate([picks, rng.choice(rest, size=n - len(picks), replace=False)])
    return pc.take(np.sort(picks))


def normalize_cloud(pc: ColoredPointCloud):
    """Centre xyz on the centroid and scale to unit max radius.

    Returns (cloud, center, scale); colours are untouched.
    """
    xyz = pc.xyz
    center = xyz.mean(axis=0)
    centered = xyz - center
    radius = np.sqrt((centered**2).sum(axis=1)).max()
    scale = radius if radius >= 1e-9 else 1.0
    pts = pc.points.copy()
    pts[:, :3] = centered / scale
    return pc.with_points(pts), center, float(scale)


def write_ply(path, pc: ColoredPointCloud, color_scale: Optional[float] = None) -> None:
    """ASCII PLY with x y z red green blue; colours mapped to 0..255.

    ``color_scale`` is the value mapped to 255 (default: the cloud's max
    colour, or 1 if that is 0).
    """
    rgb = pc.rgb
    if color_scale is None:
        color_scale = float(rgb.max()) or 1.0
    rgb8 = np.clip(np.rint(rgb / color_scale * 255), 0, 255).astype(np.int64)
    with open(path, "w", encoding="ascii") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {len(pc)}\n")
        for name in ("x", "y", "z"):
            f.write(f"property float {name}\n")
        for name in ("red", "green", "blue"):
            f.write(f"property uchar {name}\n")
        f.write("end_header\n")
        for (x, y, z), (r, g, b) in zip(pc.xyz, rgb8):
            f.write(f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b}\n")


def read_ply(path) -> ColoredPointCloud:
    """Read an ASCII PLY written by :func:`write_ply` (colours as 0..1)."""
    with open(path, encoding="ascii") as f:
        if f.readline().strip() != "ply":
            raise ValidationError(f"{path} is not a PLY file")
        n = None
        props = []
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "format" and parts[1] != "ascii":
                raise ValidationError("only ASCII PLY is supported")
            if parts[0] == "element" and parts[1] == "vertex":
                n = int(parts[2])
            elif parts[0] == "property":
                props.append(parts[-1])
            elif parts[0] == "end_header":
                break
        if n is None:
            raise ValidationError(f"{path} has no vertex element")
        data = np.loadtxt(f, ndmin=2, max_rows=n)
    if data.shape != (n, len(props)):
        raise ValidationError(f"{path}: expected {n} vertices of {len(props)} properties")
    cols = [props.index(c) for c in ("x", "y", "z", "red", "green", "blue")]
    pts = data[:, cols]
    pts[:, 3:] /= 255.0
    return ColoredPointCloud(pts)
