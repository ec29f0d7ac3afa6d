"""Frames per second for thumbnail -> point cloud -> forward, one thread.

    python3 scripts/bench_throughput.py --frames 500
"""

import argparse
import time

import numpy as np
from threadpoolctl import threadpool_limits

from pccc.bench.corpus import make_corpus
from pccc.geometry import build_point_cloud, downscale_rgbd, normalize_cloud
from pccc.net import forward, init_model, load_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=500)
    ap.add_argument("--thumb", type=int, default=16, help="thumbnail side; points = side**2")
    ap.add_argument("--model", help="checkpoint (default: random weights)")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    model = load_model(args.model) if args.model else init_model(seed=0)
    frames = make_corpus(16, seed=1)
    times = []
    with threadpool_limits(args.threads):
        for i in range(args.frames):
            s = frames[i % len(frames)]
            t0 = time.perf_counter()
            img, dm, k = downscale_rgbd(s.image, s.depth, s.intrinsics, (args.thumb, args.thumb))
            forward(model, normalize_cloud(build_point_cloud(img, dm, k))[0].points)
            times.append(time.perf_counter() - t0)
    ms = 1e3 * np.asarray(times[10:])
    print(f"{args.thumb ** 2} points, {args.threads} thread(s): median {np.median(ms):.2f} ms "
          f"({1e3 / np.median(ms):.0f} fps), p95 {np.percentile(ms, 95):.2f} ms")


if __name__ == "__main__":
    main()
