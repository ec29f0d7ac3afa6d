"""Real depth versus depth fixed to 1 on a corpus whose lighting varies with z.

    python3 scripts/depth_ablation.py --epochs 60
"""

import argparse

from threadpoolctl import threadpool_limits

from _common import epoch_logger, model_summary, split_corpus
from pccc.baselines import gray_world
from pccc.bench.corpus import clouds
from pccc.bench.metrics import format_table, summarize
from pccc.imaging import angular_error
from pccc.net import TrainConfig, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--test", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--seed", type=int, default=200)
    ap.add_argument("--log-every", type=int, default=10)
    args = ap.parse_args()

    train_s, test_s = split_corpus("mixed-depth", args.train, args.test, args.seed)
    rows = {"grayworld": summarize([angular_error(gray_world(s.image), s.illuminant) for s in test_s])}
    for mode, name in (("real", "pccc-256"), ("uniform_one", "pccc-256 w/o depth")):
        print(f"--- {name}")
        with threadpool_limits(1):
            model, _ = train(clouds(train_s, mode), TrainConfig(epochs=args.epochs, seed=0),
                             callback=epoch_logger(test_s, args.log_every, mode))
        rows[name] = model_summary(model, test_s, mode)
    print(format_table(rows))


if __name__ == "__main__":
    main()
