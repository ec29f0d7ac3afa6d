"""Synthetic data, dataset manifests, evaluation, applications and the CLI."""

from .evaluate import baseline_estimator, evaluate, model_estimator
from .manifest import DatasetManifest, LoadedSample, Sample, load_manifest, load_sample
from .metrics import EvaluationResult, MetricsSummary, format_table, summarize

__all__ = [
    "DatasetManifest",
    "EvaluationResult",
    "LoadedSample",
    "MetricsSummary",
    "Sample",
    "baseline_estimator",
    "evaluate",
    "format_table",
    "load_manifest",
    "load_sample",
    "model_estimator",
    "summarize",
]
