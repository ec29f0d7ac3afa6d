"""Dataset manifests: JSON lists of RGB-D samples with illuminant labels.

Schema (paths relative to the manifest file)::

    {
      "version": 1,
      "samples": [
        {
          "id": "scene_0000",
          "rgb": "rgb/scene_0000.png",
          "depth": "depth/scene_0000.png",
          "colorspace": "linear" | "srgb",
          "depth_unit": "mm" | "m",
          "illuminant": [r, g, b],            # optional if neutral_mask given
          "intrinsics": {"fx": .., "fy": .., "cx": .., "cy": ..},
          "depth_intrinsics": {...},          # optional, defaults to intrinsics
          "depth_to_rgb": {"r": [9 floats row-major], "t": [3 floats]},  # optional
          "tuning_matrix": [9 floats row-major],                         # optional
          "neutral_mask": "masks/scene_0000.png",                        # optional
          "split": "train" | "test"
        }
      ]
    }
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ManifestError, PcccError, ValidationError
from ..geometry import CameraIntrinsics, RigidTransform, align_depth_to_rgb, build_point_cloud
from ..imaging import check_tuning, label_illuminant, make_illuminant, remove_tuning, srgb_to_linear
from . import io

log = logging.getLogger(__name__)

SPLITS = ("train", "test")


@dataclass
class Sample:
    id: str
    rgb: Path
    depth: Path
    colorspace: str
    depth_unit: str
    illuminant: Optional[np.ndarray]
    intrinsics: CameraIntrinsics
    split: str
    depth_intrinsics: Optional[CameraIntrinsics] = None
    depth_to_rgb: Optional[RigidTransform] = None
    tuning_matrix: Optional[np.ndarray] = None
    neutral_mask: Optional[Path] = None


@dataclass
class DatasetManifest:
    samples: list
    root: Path

    def __len__(self) -> int:
        return len(self.samples)

    def split(self, name: Optional[str]) -> list:
        if name is None or name == "all":
            return list(self.samples)
        if name not in SPLITS:
            raise ValidationError(f"unknown split {name!r}")
        return [s for s in self.samples if s.split == name]

    def get(self, sid: str) -> Sample:
        for s in self.samples:
            if s.id == sid:
                return s
        raise ValidationError(f"no sample with id {sid!r}")


@dataclass
class LoadedSample:
    id: str
    image: np.ndarray  # linear
    depth: np.ndarray  # metres, registered to the image
    intrinsics: CameraIntrinsics
    illuminant: np.ndarray

    def cloud(self, depth_mode: str = "real"):
        return build_point_cloud(self.image, self.depth, self.intrinsics, depth_mode)


def _intrinsics(d, where) -> CameraIntrinsics:
    try:
        return CameraIntrinsics(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{where}: bad intrinsics ({exc})") from None


def _parse_sample(entry: dict, root: Path, where: str) -> Sample:
    try:
        sid = str(entry["id"])
        rgb = root / entry["rgb"]
        depth = root / entry["depth"]
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{where}: missing field {exc}") from None
    colorspace = entry.get("colorspace", "linear")
    if colorspace not in ("linear", "srgb"):
        raise ManifestError(f"{where}: colorspace must be 'linear' or 'srgb'")
    depth_unit = entry.get("depth_unit", "mm")
    if depth_unit not in ("mm", "m"):
        raise ManifestError(f"{where}: depth_unit must be 'mm' or 'm'")
    split = entry.get("split", "train")
    if split not in SPLITS:
        raise ManifestError(f"{where}: split must be one of {SPLITS}")
    illum = None
    if entry.get("illuminant") is not None:
        try:
            illum = make_illuminant(entry["illuminant"])
        except ValidationError as exc:
            raise ManifestError(f"{where}: invalid illuminant ({exc})") from None
    mask = root / entry["neutral_mask"] if entry.get("neutral_mask") else None
    if illum is None and mask is None:
        raise ManifestError(f"{where}: needs an illuminant or a neutral_mask")
    x = None
    if entry.get("depth_to_rgb") is not None:
        try:
            x = RigidTransform(np.reshape(entry["depth_to_rgb"]["r"], (3, 3)), entry["depth_to_rgb"]["t"])
        except (KeyError, ValueError, ValidationError) as exc:
            raise ManifestError(f"{where}: bad depth_to_rgb ({exc})") from None
    m = None
    if entry.get("tuning_matrix") is not None:
        try:
            m = check_tuning(np.reshape(entry["tuning_matrix"], (3, 3)))
        except (ValueError, ValidationError) as exc:
            raise ManifestError(f"{where}: bad tuning_matrix ({exc})") from None
    kd = entry.get("depth_intrinsics")
    sample = Sample(
        id=sid,
        rgb=rgb,
        depth=depth,
        colorspace=colorspace,
        depth_unit=depth_unit,
        illuminant=illum,
        intrinsics=_intrinsics(entry.get("intrinsics"), where),
        split=split,
        depth_intrinsics=_intrinsics(kd, where) if kd is not None else None,
        depth_to_rgb=x,
        tuning_matrix=m,
        neutral_mask=mask,
    )
    for p in (sample.rgb, sample.depth, sample.neutral_mask):
        if p is not None and not p.exists():
            raise ManifestError(f"{where}: missing file {p}")
    return sample


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("samples"), list):
        raise ManifestError(f"{path}: expected an object with a 'samples' list")
    root = path.parent
    samples = []
    seen = set()
    for i, entry in enumerate(doc["samples"]):
        s = _parse_sample(entry, root, f"{path.name}[{i}]")
        if s.id in seen:
            raise ManifestError(f"duplicate sample id {s.id!r}")
        seen.add(s.id)
        samples.append(s)
    return DatasetManifest(samples, root)


def load_sample(sample: Sample) -> LoadedSample:
    """Read files, linearize, undo tuning, register depth, label if needed."""
    img = io.read_rgb(sample.rgb)
    if sample.colorspace == "srgb":
        img = srgb_to_linear(img)
    if sample.tuning_matrix is not None:
        img = remove_tuning(img, sample.tuning_matrix)
    depth = io.read_depth(sample.depth, sample.depth_unit)
    if sample.depth_to_rgb is not None:
        kd = sample.depth_intrinsics or sample.intrinsics
        depth = align_depth_to_rgb(depth, kd, sample.intrinsics, sample.depth_to_rgb, img.shape[:2])
    elif depth.shape != img.shape[:2]:
        raise ValidationError(f"{sample.id}: depth {depth.shape} and image {img.shape[:2]} differ "
                              "and no depth_to_rgb transform is given")
    illum = sample.illuminant
    if illum is None:
        illum = label_illuminant(img, io.read_mask(sample.neutral_mask))
    return LoadedSample(sample.id, img, depth, sample.intrinsics, illum)


def sample_to_json(s: Sample, root: Path) -> dict:
    d = {
        "id": s.id,
        "rgb": Path(s.rgb).relative_to(root).as_posix(),
        "depth": Path(s.depth).relative_to(root).as_posix(),
        "colorspace": s.colorspace,
        "depth_unit": s.depth_unit,
        "illuminant": None if s.illuminant is None else [float(v) for v in s.illuminant],
        "intrinsics": {k: float(getattr(s.intrinsics, k)) for k in ("fx", "fy", "cx", "cy")},
        "split": s.split,
    }
    if s.depth_intrinsics is not None:
        d["depth_intrinsics"] = {k: float(getattr(s.depth_intrinsics, k)) for k in ("fx", "fy", "cx", "cy")}
    if s.depth_to_rgb is not None:
        d["depth_to_rgb"] = {"r": s.depth_to_rgb.r.reshape(-1).tolist(), "t": s.depth_to_rgb.t.tolist()}
    if s.tuning_matrix is not None:
        d["tuning_matrix"] = np.asarray(s.tuning_matrix).reshape(-1).tolist()
    if s.neutral_mask is not None:
        d["neutral_mask"] = Path(s.neutral_mask).relative_to(root).as_posix()
    return d


def write_manifest(path, manifest: DatasetManifest) -> None:
    path = Path(path)
    doc = {"version": 1, "samples": [sample_to_json(s, manifest.root) for s in manifest.samples]}
    path.write_text(json.dumps(doc, indent=2) + "\n")


def iter_loaded(samples):
    """Yield (sample, LoadedSample or the raised PcccError)."""
    for s in samples:
        try:
            yield s, load_sample(s)
        except PcccError as exc:
            log.warning("sample %s failed to load: %s", s.id, exc)
            yield s, exc
