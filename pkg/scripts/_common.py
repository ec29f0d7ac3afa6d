"""Shared helpers for the experiment scripts."""

import numpy as np

from pccc.baselines import METHODS, estimate
from pccc.bench.corpus import clouds, make_corpus
from pccc.bench.metrics import summarize
from pccc.imaging import angular_error
from pccc.net import predict_many


def split_corpus(kind, n_train, n_test, seed, size=64):
    samples = make_corpus(n_train + n_test, seed=seed, kind=kind, size=size)
    return samples[:n_train], samples[n_train:]


def model_summary(model, test, depth_mode="real", n_points=256):
    est = predict_many(model, [c for c, _ in clouds(test, depth_mode)], n_points=n_points)
    return summarize([angular_error(e, s.illuminant) for e, s in zip(est, test)])


def baseline_summaries(test):
    return {m: summarize([angular_error(estimate(m, s.image), s.illuminant) for s in test]) for m in METHODS}


def epoch_logger(test, every, depth_mode="real"):
    def log(epoch, loss, model):
        if epoch % every == 0:
            s = model_summary(model, test, depth_mode)
            print(f"epoch {epoch:5d}  train {np.degrees(loss):6.2f} deg  test mean {s.mean:5.2f}  "
                  f"median {s.median:5.2f}", flush=True)

    return log
