"""Train on a rendered corpus and compare against the statistical baselines.

    python3 scripts/train_synthetic.py --epochs 100 --out runs/standard
"""

import argparse
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from _common import baseline_summaries, epoch_logger, model_summary, split_corpus
from pccc.bench.corpus import clouds
from pccc.bench.metrics import format_table, write_summary_csv
from pccc.bench.synth import SCENE_KINDS
from pccc.net import TrainConfig, save_model, train, write_history


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", default="standard", choices=SCENE_KINDS)
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--test", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--points", type=int, default=256)
    ap.add_argument("--lr", type=float, default=3e-4)
    ap.add_argument("--seed", type=int, default=100)
    ap.add_argument("--log-every", type=int, default=10)
    ap.add_argument("--out", type=Path, help="directory for model, loss CSV and summary")
    args = ap.parse_args()

    train_s, test_s = split_corpus(args.kind, args.train, args.test, args.seed)
    cfg = TrainConfig(epochs=args.epochs, n_points=args.points, lr=args.lr, seed=0)
    t0 = time.perf_counter()
    with threadpool_limits(1):
        model, history = train(clouds(train_s), cfg, callback=epoch_logger(test_s, args.log_every))
    print(f"trained in {time.perf_counter() - t0:.0f}s")

    rows = baseline_summaries(test_s)
    rows[f"pccc-{args.points}"] = model_summary(model, test_s, n_points=args.points)
    table = format_table(rows)
    print(table)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        save_model(args.out / "model.pccc", model)
        write_history(args.out / "loss.csv", history)
        (args.out / "summary.txt").write_text(table + "\n")
        write_summary_csv(args.out / "summary.csv", rows)
        print(f"final train loss {np.degrees(history[-1]):.2f} deg; wrote {args.out}")


if __name__ == "__main__":
    main()
