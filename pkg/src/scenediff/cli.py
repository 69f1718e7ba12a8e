"""Command-line interface.

Subcommands: gen-data, train-vae, train-diffusion, predict, evaluate, viz.
All of them accept --config (flat JSON overriding RunConfig fields),
--profile {desk,paper}, --seed, and --out. Failures print a machine-readable
JSON object on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, config_for_profile, load_config_file
from .domain import RngHandle
from .errors import SceneDiffError
from .predict import Predictor
from .synthdata import RoomSpec, generate_dataset, read_dataset, write_dataset
from .training import train_diffusion, train_vae
from .viz import export_viz


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="flat JSON config overriding RunConfig fields")
    parser.add_argument("--profile", choices=("desk", "paper"), default="desk")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=Path, default=Path("out"))


def _build_config(args: argparse.Namespace) -> RunConfig:
    overrides = load_config_file(args.config) if args.config else {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    overrides.setdefault("profile", args.profile)
    return config_for_profile(args.profile).with_overrides(overrides)


def _room(cfg: RunConfig) -> RoomSpec:
    return RoomSpec(
        extents=(cfg.room_extent, 2.5, cfg.room_extent),
        obstacle_count=cfg.obstacle_count,
        points_per_m2=cfg.scene_density,
    )


def cmd_gen_data(args) -> int:
    cfg = _build_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    rng = RngHandle(cfg.seed)
    for name, count, stream in (("train", cfg.train_samples, 1), ("test", cfg.test_samples, 2)):
        samples = generate_dataset(count, rng.child(stream), room=_room(cfg),
                                   T=cfg.history_frames, dt=cfg.future_frames, fps=cfg.fps)
        path = args.out / f"{name}.jsonl"
        n = write_dataset(samples, path)
        print(f"wrote {n} samples to {path}")
    return 0


def cmd_train_vae(args) -> int:
    cfg = _build_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt_path = args.out / "vae.ckpt"
    _, history = train_vae(cfg, args.data, out_path=ckpt_path)
    (args.out / "stage1_log.json").write_text(json.dumps(history) + "\n")
    last = history[-1] if history else {}
    print(f"stage 1 done: {len(history)} steps, final l_mr={last.get('l_mr', float('nan')):.5f}")
    print(f"checkpoint: {ckpt_path}")
    return 0


def cmd_train_diffusion(args) -> int:
    cfg = _build_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt_path = args.out / "model.ckpt"
    _, history = train_diffusion(cfg, args.data, args.vae_ckpt, out_path=ckpt_path)
    (args.out / "stage2_log.json").write_text(json.dumps(history) + "\n")
    last = history[-1] if history else {}
    print(f"stage 2 done: {len(history)} steps, final loss={last.get('loss', float('nan')):.5f}")
    print(f"checkpoint: {ckpt_path}")
    return 0


def _pick_sample(args):
    samples = read_dataset(args.data)
    if not 0 <= args.index < len(samples):
        raise SceneDiffError(f"sample index {args.index} outside dataset of {len(samples)}")
    return samples[args.index]


def cmd_predict(args) -> int:
    cfg = _build_config(args)
    predictor = Predictor.from_path(args.ckpt)
    sample = _pick_sample(args)
    preds = predictor.predict(sample, n_samples=args.n_samples, rng=RngHandle(cfg.seed))
    args.out.mkdir(parents=True, exist_ok=True)
    out_path = args.out / "predictions.json"
    doc = {
        "index": args.index,
        "fps": sample.history.fps,
        "predictions": [np.asarray(p.frames, dtype=np.float32).astype(np.float64).tolist()
                        for p in preds],
    }
    out_path.write_text(json.dumps(doc) + "\n")
    print(f"wrote {len(preds)} predictions to {out_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _build_config(args)
    predictor = Predictor.from_path(args.ckpt)
    args.out.mkdir(parents=True, exist_ok=True)
    report = predictor.evaluate(args.data, n_runs=args.runs, rng=RngHandle(cfg.seed),
                                out_path=args.out / "report.json")
    for key, value in report.to_json().items():
        print(f"{key}: {value}")
    return 0


def cmd_viz(args) -> int:
    cfg = _build_config(args)
    predictor = Predictor.from_path(args.ckpt)
    sample = _pick_sample(args)
    preds = predictor.predict(sample, n_samples=args.n_samples, rng=RngHandle(cfg.seed))
    files = export_viz(sample, preds, args.out, skeleton=predictor.skeleton)
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenediff",
                                     description="scene-conditioned latent diffusion motion predictor")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate synthetic train/test datasets")
    _add_common(p)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train-vae", help="stage 1: train the motion VAE")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True, help="training dataset (.jsonl)")
    p.set_defaults(fn=cmd_train_vae)

    p = sub.add_parser("train-diffusion", help="stage 2: train the conditional diffusion stack")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--vae-ckpt", type=Path, required=True, help="stage-1 checkpoint")
    p.set_defaults(fn=cmd_train_diffusion)

    p = sub.add_parser("predict", help="sample future motions for one dataset entry")
    _add_common(p)
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--n-samples", type=int, default=3)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("evaluate", help="repeated evaluation with confidence intervals")
    _add_common(p)
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--runs", type=int, default=20)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("viz", help="export prediction visualizations")
    _add_common(p)
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--n-samples", type=int, default=1)
    p.set_defaults(fn=cmd_viz)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (SceneDiffError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
