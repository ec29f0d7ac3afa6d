"""Command-line entry point: ``pccc <subcommand>`` (or ``python -m pccc``).

Exit codes: 0 success, 2 invalid input or usage, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from ..augment import AugmentConfig
from ..baselines import METHODS, BaselineConfig
from ..errors import PcccError, ValidationError
from ..geometry import sample_points, write_ply
from ..imaging import apply_awb, linear_to_srgb, make_illuminant
from ..net import TrainConfig, load_model, predict, save_model, train, write_history
from . import io
from .apps import local_awb, relight
from .corpus import write_synth_corpus
from .evaluate import baseline_estimator, evaluate, model_estimator
from .manifest import load_manifest, load_sample
from .metrics import format_table, write_summary_csv
from .synth import SCENE_KINDS

log = logging.getLogger("pccc")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3
ALL_METHODS = sorted(METHODS) + ["pccc"]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")


def _add_manifest(p, split_default="test") -> None:
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--split", default=split_default, choices=["train", "test", "all"])


def _add_estimator(p) -> None:
    p.add_argument("--method", default="grayworld", choices=ALL_METHODS)
    p.add_argument("--model", type=Path, help="checkpoint for --method pccc")
    p.add_argument("--p", type=float, help="Minkowski norm for sog / grayedge")
    p.add_argument("--sigma", type=float, help="Gaussian sigma for grayedge")
    p.add_argument("--points", type=int, default=256, help="points fed to the network")
    p.add_argument("--thumbnail", type=int, help="average-pool to an N x N thumbnail first (N*N points)")
    p.add_argument("--depth-mode", default="real", choices=["real", "uniform_one"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pccc", description="Point-cloud colour constancy toolkit")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic labelled RGB-D corpus")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--kind", default="standard", choices=SCENE_KINDS)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--test-count", type=int, help="scenes in the test split (default 20%%)")
    p.add_argument("--noise", type=float, default=0.002)
    _add_common(p)

    p = sub.add_parser("train", help="train a model on a manifest split")
    _add_manifest(p, "train")
    p.add_argument("--out", type=Path, required=True, help="checkpoint path")
    p.add_argument("--history", type=Path, help="loss history CSV (default: <out>.loss.csv)")
    p.add_argument("--config", type=Path, help="JSON or YAML training config")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--points", type=int)
    p.add_argument("--depth-mode", default=None, choices=["real", "uniform_one"])
    p.add_argument("--aug-rot-deg", type=float)
    p.add_argument("--aug-intensity-sigma", type=float)
    p.add_argument("--no-aug", action="store_true")
    _add_common(p)

    p = sub.add_parser("estimate", help="print illuminant estimates")
    _add_manifest(p)
    p.add_argument("--id", help="single sample id (overrides --split)")
    _add_estimator(p)
    _add_common(p)

    p = sub.add_parser("evaluate", help="angular-error statistics on a split")
    _add_manifest(p)
    _add_estimator(p)
    p.add_argument("--out-prefix", type=Path, default=Path("evaluation"),
                   help="writes <prefix>_summary.txt, <prefix>_summary.csv, <prefix>_samples.csv")
    _add_common(p)

    p = sub.add_parser("awb", help="white-balance one sample (global or local)")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--id", required=True)
    _add_estimator(p)
    p.add_argument("--local", action="store_true", help="per-pixel gains from the model's map")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--map-out", type=Path, help="illumination map PNG (local mode)")
    p.add_argument("--srgb", action="store_true", help="write gamma-encoded 8-bit output")
    _add_common(p)

    p = sub.add_parser("relight", help="re-render one sample under a new light colour")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--id", required=True)
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--chromaticity", required=True, help="r,g,b")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--depth-mode", default="real", choices=["real", "uniform_one"])
    p.add_argument("--srgb", action="store_true")
    _add_common(p)

    p = sub.add_parser("export-ply", help="write a sample's coloured point cloud")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--id", required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--points", type=int, help="stratified subsample size")
    p.add_argument("--depth-mode", default="real", choices=["real", "uniform_one"])
    _add_common(p)
    return parser


def _estimator(args):
    if args.method == "pccc":
        if args.model is None:
            raise ValidationError("--method pccc needs --model")
        return model_estimator(load_model(args.model), args.points, args.depth_mode, args.seed, args.thumbnail)
    cfg = BaselineConfig()
    if args.p is not None:
        cfg = replace(cfg, minkowski_p=args.p)
    if args.sigma is not None:
        cfg = replace(cfg, smoothing_sigma=args.sigma)
    return baseline_estimator(args.method, cfg)


def _read_config(path: Path) -> dict:
    if not path.exists():
        raise ValidationError(f"config not found: {path}")
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        import yaml

        doc = yaml.safe_load(text)
    else:
        doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: config must be a mapping")
    return doc


def train_config(args) -> tuple[TrainConfig, str]:
    doc = _read_config(args.config) if args.config else {}
    aug_doc = dict(doc.pop("augment", {}) or {})
    depth_mode = doc.pop("depth_mode", "real")
    known = {f.name for f in fields(TrainConfig)} - {"augment", "arch"}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown training config keys: {sorted(unknown)}")
    overrides = {"epochs": args.epochs, "lr": args.lr, "batch_size": args.batch_size,
                 "n_points": args.points, "seed": args.seed}
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if args.aug_rot_deg is not None:
        aug_doc["max_rotation_deg"] = args.aug_rot_deg
    if args.aug_intensity_sigma is not None:
        aug_doc["intensity_sigma"] = args.aug_intensity_sigma
    if args.no_aug:
        doc["use_augment"] = False
    try:
        cfg = TrainConfig(augment=AugmentConfig(**aug_doc), **doc)
    except TypeError as exc:
        raise ValidationError(f"bad training config: {exc}") from None
    return cfg, args.depth_mode or depth_mode


def cmd_synth(args) -> int:
    if args.count < 1:
        raise ValidationError("--count must be >= 1")
    m = write_synth_corpus(args.out, args.count, args.seed, args.kind, args.size, args.test_count, args.noise)
    print(f"wrote {len(m)} scenes to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg, depth_mode = train_config(args)
    manifest = load_manifest(args.manifest)
    pairs = []
    for s in manifest.split(args.split):
        ls = load_sample(s)
        pairs.append((ls.cloud(depth_mode), ls.illuminant))

    def report(epoch, loss, _model):
        if epoch == 1 or epoch % max(1, cfg.epochs // 20) == 0 or epoch == cfg.epochs:
            print(f"epoch {epoch:6d}  loss {np.degrees(loss):7.3f} deg", flush=True)

    model, history = train(pairs, cfg, callback=report)
    save_model(args.out, model)
    write_history(args.history or args.out.with_suffix(".loss.csv"), history)
    print(f"saved {args.out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    manifest = load_manifest(args.manifest)
    samples = [manifest.get(args.id)] if args.id else manifest.split(args.split)
    est = _estimator(args)
    for s in samples:
        e = est(load_sample(s))
        print(f"{s.id} {e[0]:.6f} {e[1]:.6f} {e[2]:.6f}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    est = _estimator(args)
    name = args.method if args.method != "pccc" else est.__name__
    res = evaluate(est, manifest, args.split, name=name)
    table = format_table({name: res.summary})
    print(table)
    prefix = args.out_prefix
    if prefix.parent != Path(""):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}_summary.txt").write_text(table + "\n")
    write_summary_csv(f"{prefix}_summary.csv", {name: res.summary})
    res.write_csv(f"{prefix}_samples.csv")
    for sid, msg in res.failed:
        print(f"failed: {sid}: {msg}", file=sys.stderr)
    return EXIT_OK


def _write_image(path, img, srgb: bool) -> None:
    scale = max(float(img.max()), 1e-12)
    if srgb:
        io.write_rgb8(path, linear_to_srgb(img / scale))
    else:
        io.write_rgb16(path, img if scale <= 1 else img / scale)


def cmd_awb(args) -> int:
    manifest = load_manifest(args.manifest)
    ls = load_sample(manifest.get(args.id))
    if args.local:
        if args.model is None:
            raise ValidationError("--local needs --model")
        out, illum_map = local_awb(load_model(args.model), ls.image, ls.depth, ls.intrinsics,
                                   depth_mode=args.depth_mode, seed=args.seed)
        if args.map_out:
            _write_image(args.map_out, illum_map / illum_map.max(), args.srgb)
    else:
        out = apply_awb(ls.image, _estimator(args)(ls))
    _write_image(args.out, out, args.srgb)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_relight(args) -> int:
    try:
        chroma = make_illuminant([float(v) for v in args.chromaticity.split(",")])
    except ValueError:
        raise ValidationError("--chromaticity must be three comma-separated numbers") from None
    manifest = load_manifest(args.manifest)
    ls = load_sample(manifest.get(args.id))
    out = relight(load_model(args.model), ls.image, ls.depth, ls.intrinsics, chroma,
                  depth_mode=args.depth_mode, seed=args.seed)
    _write_image(args.out, out, args.srgb)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_export_ply(args) -> int:
    manifest = load_manifest(args.manifest)
    ls = load_sample(manifest.get(args.id))
    pc = ls.cloud(args.depth_mode)
    if args.points:
        pc = sample_points(pc, args.points, args.seed)
    write_ply(args.out, pc)
    print(f"wrote {len(pc)} points to {args.out}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "estimate": cmd_estimate,
    "evaluate": cmd_evaluate,
    "awb": cmd_awb,
    "relight": cmd_relight,
    "export-ply": cmd_export_ply,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PcccError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
