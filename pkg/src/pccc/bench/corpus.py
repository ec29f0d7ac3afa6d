"""Synthetic corpora in memory and on disk."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..geometry import build_point_cloud
from .manifest import DatasetManifest, LoadedSample, Sample, write_manifest
from .synth import random_scene, render
from . import io


def scene_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def make_corpus(count: int, seed: int, kind: str = "standard", size: int = 64,
                noise_sigma: float = 0.002) -> list:
    """``count`` rendered scenes as LoadedSample objects (ids scene_0000...)."""
    out = []
    for i in range(count):
        spec = random_scene(scene_rng(seed, i), kind, size=size, noise_sigma=noise_sigma, seed=seed * 100003 + i)
        img, depth, gt, _ = render(spec)
        out.append(LoadedSample(f"scene_{i:04d}", img, depth, spec.intrinsics, gt))
    return out


def clouds(samples, depth_mode: str = "real") -> list:
    """(cloud, illuminant) training pairs."""
    return [(build_point_cloud(s.image, s.depth, s.intrinsics, depth_mode), s.illuminant) for s in samples]


def write_synth_corpus(out_dir, count: int, seed: int, kind: str = "standard", size: int = 64,
                       test_count: int = None, noise_sigma: float = 0.002) -> DatasetManifest:
    """Render scenes to 16-bit linear PNGs plus millimetre depth PNGs and a
    manifest.json. The last ``test_count`` scenes (default 20%) form the test
    split."""
    out = Path(out_dir)
    (out / "rgb").mkdir(parents=True, exist_ok=True)
    (out / "depth").mkdir(exist_ok=True)
    if test_count is None:
        test_count = count // 5
    samples = []
    for i, s in enumerate(make_corpus(count, seed, kind, size, noise_sigma)):
        rgb = out / "rgb" / f"{s.id}.png"
        dep = out / "depth" / f"{s.id}.png"
        io.write_rgb16(rgb, s.image)
        io.write_depth_mm(dep, s.depth)
        samples.append(Sample(
            id=s.id, rgb=rgb, depth=dep, colorspace="linear", depth_unit="mm",
            illuminant=s.illuminant, intrinsics=s.intrinsics,
            split="test" if i >= count - test_count else "train",
        ))
    manifest = DatasetManifest(samples, out)
    write_manifest(out / "manifest.json", manifest)
    return manifest
