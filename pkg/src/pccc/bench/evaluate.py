from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np

from ..baselines import DEFAULT, BaselineConfig
from ..baselines import estimate as baseline_estimate
from ..errors import PcccError, ValidationError
from ..geometry import build_point_cloud, downscale_rgbd
from ..imaging import angular_error
from ..net import PcccModel, predict
from .manifest import DatasetManifest, LoadedSample, iter_loaded
from .metrics import EvaluationResult, summarize

log = logging.getLogger(__name__)

Estimator = Callable[[LoadedSample], np.ndarray]


def baseline_estimator(method: str, cfg: BaselineConfig = DEFAULT) -> Estimator:
    def run(s: LoadedSample) -> np.ndarray:
        return baseline_estimate(method, s.image, cfg)

    run.__name__ = method
    return run


def model_estimator(model: PcccModel, n_points: int = 256, depth_mode: str = "real", seed: int = 0,
                    thumbnail: Optional[int] = None) -> Estimator:
    """Network estimator. By default the full-resolution cloud is grid-sampled
    to ``n_points``; with ``thumbnail`` the frame is first average-pooled to
    thumbnail x thumbnail pixels and every pooled pixel becomes a point."""

    def run(s: LoadedSample) -> np.ndarray:
        if thumbnail is None:
            return predict(model, s.cloud(depth_mode), n_points, seed)
        img, dm, k = downscale_rgbd(s.image, s.depth, s.intrinsics, (thumbnail, thumbnail))
        pc = build_point_cloud(img, dm, k, depth_mode)
        return predict(model, pc, len(pc), seed)

    size = n_points if thumbnail is None else thumbnail * thumbnail
    run.__name__ = f"pccc-{size}" + ("" if depth_mode == "real" else "-nodepth")
    return run


def evaluate(method: Estimator, manifest: DatasetManifest, split: str = "test", name: str = None) -> EvaluationResult:
    """Angular error of ``method`` on every sample of a split.

    Samples that fail to load or to estimate are listed with an empty error
    and counted in ``summary.failures``; they never enter the statistics.
    """
    samples = manifest.split(split)
    if not samples:
        raise ValidationError(f"split {split!r} is empty")
    name = name or getattr(method, "__name__", "method")
    rows, errors, failed = [], [], []
    for s, loaded in iter_loaded(samples):
        if isinstance(loaded, PcccError):
            failed.append((s.id, str(loaded)))
            rows.append((s.id, None, name))
            continue
        try:
            est = method(loaded)
        except PcccError as exc:
            log.warning("%s failed on %s: %s", name, s.id, exc)
            failed.append((s.id, str(exc)))
            rows.append((s.id, None, name))
            continue
        err = angular_error(est, loaded.illuminant)
        errors.append(err)
        rows.append((s.id, err, name))
    if not errors:
        raise PcccError(f"{name}: every sample failed")
    return EvaluationResult(summarize(errors, failures=len(failed)), rows, failed)
