"""Command-line interface: synth, train, detect, eval, gradcheck.

Every subcommand prints its fully resolved configuration as one
``effective-config {...}`` JSON line before doing any work, and exits 0
iff the operation completed without error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .data import load_features, load_manifest, load_segments_json, save_segments_json
from .inference import DEFAULT_ATTENTION_THRESHOLDS, InferenceConfig, detect
from .metrics import (
    DEFAULT_IOU_THRESHOLDS,
    detections_from_json,
    evaluate,
    ground_truth_from_json,
)
from .model import LossWeights
from .synthetic import SyntheticSpec, generate_synthetic
from .training import (
    TrainConfig,
    load_checkpoint,
    load_training_videos,
    save_checkpoint,
    train_stream,
    write_trace_csv,
)


def _print_config(command: str, values: dict) -> None:
    print(f"effective-config {json.dumps({'command': command, **values}, sort_keys=True)}")


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        num_classes=args.classes,
        feature_dim=args.dim,
        train_videos=args.train_videos,
        test_videos=args.test_videos,
        min_segments=args.min_segments,
        max_segments=args.max_segments,
        min_blocks=args.min_blocks,
        max_blocks=args.max_blocks,
        min_block_len=args.min_block_len,
        max_block_len=args.max_block_len,
        separation=args.separation,
        noise=args.noise,
        segment_seconds=args.segment_seconds,
        seed=args.seed,
    )
    _print_config("synth", {**dataclasses.asdict(spec), "out_dir": str(args.out_dir)})
    spec.validate()
    result = generate_synthetic(spec, args.out_dir)
    print(f"wrote {result.train_manifest}")
    print(f"wrote {result.test_manifest}")
    print(f"wrote {result.ground_truth}")
    print(f"wrote {result.train_ground_truth}")
    return 0


def _cmd_train(args) -> int:
    config = TrainConfig(
        epochs=args.epochs,
        seed=args.seed,
        weights=LossWeights(alpha=args.alpha, beta=args.beta,
                            gamma=args.gamma, sparsity=args.sparsity),
        sigma=args.sigma,
        lr=args.lr,
        hidden_dim=args.hidden,
        checkpoint_every=args.checkpoint_every,
    )
    modalities = ("rgb", "flow") if args.modality == "both" else (args.modality,)
    _print_config("train", {
        "manifest": str(args.manifest), "out": str(args.out),
        "modalities": list(modalities), "epochs": config.epochs,
        "alpha": config.weights.alpha, "beta": config.weights.beta,
        "gamma": config.weights.gamma, "sparsity": config.weights.sparsity,
        "sigma": config.sigma, "hidden": config.hidden_dim, "lr": config.lr,
        "seed": config.seed, "checkpoint_every": config.checkpoint_every,
    })
    config.validate()
    dataset = load_manifest(args.manifest)
    videos = load_training_videos(dataset, modalities)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for modality in modalities:
        model, state, trace = train_stream(videos, modality, dataset.num_classes,
                                           config, checkpoint_dir=out_dir)
        ckpt = out_dir / f"{modality}.ckpt"
        save_checkpoint(ckpt, model, state)
        trace_path = out_dir / f"{modality}_trace.csv"
        write_trace_csv(trace_path, trace)
        print(f"{modality}: final total loss {trace[-1].total:.6f}, "
              f"wrote {ckpt} and {trace_path}")
    return 0


def _cmd_detect(args) -> int:
    thresholds = (tuple(args.attention_thresholds)
                  if args.attention_thresholds else DEFAULT_ATTENTION_THRESHOLDS)
    _print_config("detect", {
        "manifest": str(args.manifest),
        "rgb_checkpoint": str(args.rgb_checkpoint),
        "flow_checkpoint": str(args.flow_checkpoint),
        "out": str(args.out),
        "class_threshold": args.class_threshold,
        "attention_thresholds": list(thresholds),
        "nms": args.nms, "theta": args.theta,
    })
    dataset = load_manifest(args.manifest)
    models = {
        "rgb": load_checkpoint(args.rgb_checkpoint)[0],
        "flow": load_checkpoint(args.flow_checkpoint)[0],
    }
    doc = {}
    for rec in dataset.videos:
        features = {}
        for modality, model in models.items():
            if modality not in rec.feature_paths:
                raise ValueError(
                    f"video {rec.video_id} has no features for modality {modality!r}"
                )
            feats = load_features(rec.feature_paths[modality])
            if feats.shape[1] != model.feature_dim:
                raise ValueError(
                    f"video {rec.video_id} {modality} feature dim {feats.shape[1]} "
                    f"does not match checkpoint dim {model.feature_dim}"
                )
            features[modality] = feats
        config = InferenceConfig(
            class_prob_threshold=args.class_threshold,
            attention_thresholds=thresholds,
            nms_iou=args.nms,
            theta=args.theta,
            segment_seconds=rec.segment_seconds,
        )
        detections = detect(models, features, config)
        doc[rec.video_id] = [
            {
                "label": dataset.class_names[d.class_id - 1],
                "score": d.score,
                "segment": [d.start_sec, d.end_sec],
            }
            for d in detections
        ]
    save_segments_json(args.out, doc)
    total = sum(len(v) for v in doc.values())
    print(f"wrote {total} detections for {len(doc)} videos to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    csv_path = args.csv
    if csv_path is None:
        det_path = Path(args.detections)
        csv_path = det_path.parent / (det_path.stem + "_eval.csv")
    _print_config("eval", {
        "detections": str(args.detections), "ground_truth": str(args.ground_truth),
        "iou_thresholds": list(args.iou_thresholds), "csv": str(csv_path),
    })
    detections = detections_from_json(load_segments_json(args.detections))
    ground_truths = ground_truth_from_json(load_segments_json(args.ground_truth))
    result = evaluate(detections, ground_truths, args.iou_thresholds)
    for label in result.ignored_labels:
        print(f"warning: detections labeled {label!r} have no ground truth; ignored",
              file=sys.stderr)
    print(result.format_table())
    result.to_csv(csv_path)
    print(f"wrote {csv_path}")
    return 0


def _cmd_gradcheck(args) -> int:
    from .gradcheck import run_gradient_check

    _print_config("gradcheck", {
        "seed": args.seed, "trials": args.trials, "tolerance": args.tolerance,
        "inject_error": args.inject_error,
    })
    results, passed = run_gradient_check(
        seed=args.seed, trials=args.trials, tolerance=args.tolerance,
        inject_error=args.inject_error,
    )
    for r in results:
        print(f"trial {r.trial:3d}: max relative error {r.max_rel_error:.3e} "
              f"(worst parameter: {r.worst_param})")
    overall = max(r.max_rel_error for r in results)
    print(f"overall max relative error {overall:.3e} "
          f"(tolerance {args.tolerance:g}): {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wstal",
        description="Weakly-supervised temporal action localization pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic planted-block dataset")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--train-videos", type=int, default=40)
    p.add_argument("--test-videos", type=int, default=10)
    p.add_argument("--min-segments", type=int, default=60)
    p.add_argument("--max-segments", type=int, default=90)
    p.add_argument("--min-blocks", type=int, default=1)
    p.add_argument("--max-blocks", type=int, default=2)
    p.add_argument("--min-block-len", type=int, default=8)
    p.add_argument("--max-block-len", type=int, default=16)
    p.add_argument("--separation", type=float, default=5.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--segment-seconds", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train per-modality streams from a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, default=Path("runs"))
    p.add_argument("--modality", choices=("rgb", "flow", "both"), default="both")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.1,
                   help="background loss weight")
    p.add_argument("--beta", type=float, default=0.1,
                   help="attention guide loss weight")
    p.add_argument("--gamma", type=float, default=0.1,
                   help="clustering loss weight")
    p.add_argument("--sparsity", type=float, default=0.0,
                   help="mean-L1 attention penalty weight")
    p.add_argument("--sigma", type=float, default=2.0,
                   help="Gaussian smoothing of the attention targets, in segments")
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", help="run detection over a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--rgb-checkpoint", type=Path, required=True)
    p.add_argument("--flow-checkpoint", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("detections.json"))
    p.add_argument("--class-threshold", type=float, default=0.1)
    p.add_argument("--attention-thresholds", type=float, nargs="+", default=None)
    p.add_argument("--nms", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.5,
                   help="rgb stream weight in proposal scoring")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("detections", type=Path)
    p.add_argument("ground_truth", type=Path)
    p.add_argument("--iou-thresholds", type=float, nargs="+",
                   default=list(DEFAULT_IOU_THRESHOLDS))
    p.add_argument("--csv", type=Path, default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--inject-error", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:  # surface a clean one-line failure, exit non-zero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
