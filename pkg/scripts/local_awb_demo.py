"""Local versus global white balance on two-light scenes.

Trains on left/right mixed-lighting scenes (global labels only), then checks
on held-out scenes whether each lighting region's mean map colour is closer
to that region's true light than the single global estimate is.

    python3 scripts/local_awb_demo.py --epochs 20 --save-dir runs/awb
"""

import argparse
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from pccc.bench import io
from pccc.bench.apps import illumination_map, local_awb_with_map
from pccc.bench.synth import random_scene, render
from pccc.geometry import build_point_cloud
from pccc.imaging import angular_error, apply_awb, linear_to_srgb, normalize
from pccc.net import TrainConfig, train


def region_scores(model, spec, img, depth, alpha):
    """(mean local error, mean global error) over the two lighting regions."""
    illum_map, e_global = illumination_map(model, img, depth, spec.intrinsics)
    vis = depth > 0
    local, glob = [], []
    for region in (vis & (alpha < 0.5), vis & (alpha >= 0.5)):
        if region.sum() < 10:
            continue
        a = alpha[region][:, None]
        truth = normalize(((1 - a) * spec.illuminant + a * spec.illuminant2).mean(0))
        local.append(angular_error(normalize(normalize(illum_map[region]).mean(0)), truth))
        glob.append(angular_error(e_global, truth))
    return float(np.mean(local)), float(np.mean(glob)), illum_map, e_global


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--test", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=300)
    ap.add_argument("--save-dir", type=Path, help="write a few before/after PNGs here")
    args = ap.parse_args()

    scenes = []
    for i in range(args.train + args.test):
        spec = random_scene(np.random.default_rng([args.seed, i]), "mixed-lr", seed=i)
        scenes.append((spec, *render(spec)))
    pairs = [(build_point_cloud(img, d, spec.intrinsics), gt) for spec, img, d, gt, _ in scenes[: args.train]]
    with threadpool_limits(1):
        model, _ = train(pairs, TrainConfig(epochs=args.epochs, seed=0))

    wins = 0
    for j, (spec, img, depth, gt, alpha) in enumerate(scenes[args.train:]):
        loc, glob, illum_map, e_global = region_scores(model, spec, img, depth, alpha)
        wins += loc < glob
        if args.save_dir and j < 4:
            args.save_dir.mkdir(parents=True, exist_ok=True)
            for name, out in (("input", img), ("global", apply_awb(img, e_global)),
                              ("local", local_awb_with_map(img, illum_map))):
                io.write_rgb8(args.save_dir / f"{j}_{name}.png", linear_to_srgb(out / out.max()))
    print(f"local map beats global estimate on {wins}/{args.test} scenes ({wins / args.test:.0%})")


if __name__ == "__main__":
    main()
