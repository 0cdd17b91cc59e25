"""Command-line entry point.

Subcommands: generate, render-debug, evaluate, pr-curve, sweep, inspect,
make-assets, detect-oracle.

Exit codes: 0 success, 1 usage error, 2 data error (malformed config,
assets, annotations, detections, manifests, or generation failure),
3 detector error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .dataset import generate_dataset, inspect_dataset
from .demo import demo_library, write_demo_assets
from .detections import load_detections, save_detections
from .errors import (CameraConstraintFailure, DataError, DetectorFailure,
                     GenerationFailure, PlacementFailure)
from .imgio import encode_png, mask_to_gray_png
from .metrics import EvalConfig, average_precision, evaluate_dataset
from .oracle import echo_detections, noisy_detections
from .render import render_full
from .scene import GenConfig, scene_from_json, scene_to_json
from .sweep import SweepConfig, sweep_run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DETECTOR = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_assets(spec: str, config: GenConfig):
    if spec == "demo":
        return demo_library(target_scale=config.target_scale,
                            distractor_scale=config.distractor_scale)
    from .assets import load_asset_library
    return load_asset_library(Path(spec), target_scale=config.target_scale,
                              distractor_scale=config.distractor_scale)


def _read_config(path: str | None, seed: int | None) -> GenConfig:
    if path is None:
        config = GenConfig()
    else:
        config = GenConfig.from_json(Path(path).read_text(encoding="utf-8"))
    if seed is not None:
        config = config.with_seed(seed)
    return config


def _pct(value) -> str:
    return "undefined" if value is None else f"{100.0 * value:.2f}"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_generate(args) -> int:
    config = _read_config(args.config, args.seed)
    assets = _load_assets(args.assets, config)
    progress = None if args.json else lambda line: print(line, flush=True)
    manifest = generate_dataset(config, assets, Path(args.out),
                                workers=args.workers, progress=progress)
    if args.json:
        print(json.dumps({
            "out": str(args.out), "n_images": manifest.n_images,
            "n_rejections": len(manifest.rejections),
            "generation_time_seconds": manifest.generation_time_seconds,
        }))
    else:
        print(f"Generated {manifest.n_images} images "
              f"({len(manifest.rejections)} frames rejected) "
              f"in {manifest.generation_time_seconds:.2f}s -> {args.out}")
    return EXIT_OK


def _cmd_render_debug(args) -> int:
    if args.scene is not None:
        scene = scene_from_json(Path(args.scene).read_text(encoding="utf-8"))
        config = GenConfig(resolution=(scene.camera.width, scene.camera.height),
                           seed=scene.seed)
        assets = _load_assets(args.assets, config)
    else:
        from .sampler import sample_scene
        config = _read_config(args.config, args.seed)
        assets = _load_assets(args.assets, config)
        scene = sample_scene(config, assets, args.scene_index)
    image, mask = render_full(scene, assets, workers=args.workers)
    Path(args.out).write_bytes(encode_png(image.pixels))
    if args.mask_out:
        Path(args.mask_out).write_bytes(mask_to_gray_png(mask))
    if args.dump_scene:
        Path(args.dump_scene).write_text(scene_to_json(scene), encoding="utf-8")
    if args.json:
        print(json.dumps({"out": args.out, "mask_out": args.mask_out,
                          "scene_index": scene.scene_index,
                          "instances": len(scene.instances),
                          "lights": len(scene.lights)}))
    else:
        print(f"Rendered scene {scene.scene_index} -> {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = EvalConfig(conf_threshold=args.conf, iou_threshold=args.iou)
    detections = load_detections(args.det)
    report = evaluate_dataset(Path(args.gt), detections, config)
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.json:
        print(json.dumps(report.to_dict()))
        return EXIT_OK
    print(f"Precision {_pct(report.precision)} "
          f"Recall {_pct(report.recall)} F1 {_pct(report.f1)}")
    print(f"AP {report.mean_ap:.4f}")
    if len(report.classes) > 1:
        for cls in report.classes:
            print(f"  {cls.class_name}: Precision {_pct(cls.precision)} "
                  f"Recall {_pct(cls.recall)} F1 {_pct(cls.f1)} AP {cls.ap:.4f}")
    return EXIT_OK


def _pick_class(classes, requested: str | None, parser: _Parser):
    if requested is not None:
        for cls in classes:
            if cls.class_name == requested:
                return cls
        raise DataError(f"class {requested!r} not present in ground truth or detections")
    if len(classes) != 1:
        names = [c.class_name for c in classes]
        parser.error(f"multiple classes present {names}; pick one with --class")
    return classes[0]


def _cmd_pr_curve(args, parser: _Parser) -> int:
    config = EvalConfig(conf_threshold=0.0, iou_threshold=args.iou)
    detections = load_detections(args.det)
    report = evaluate_dataset(Path(args.gt), detections, config)
    cls = _pick_class(report.classes, args.class_name, parser)
    curve = cls.curve
    ap = average_precision(curve)

    rows = ["confidence,recall,precision"]
    for (recall, precision), score in zip(curve.points, curve.thresholds):
        rows.append(f"{score:g},{recall:g},{precision:g}")
    Path(args.out_csv).write_text("".join(r + "\n" for r in rows), encoding="utf-8")

    if args.out_svg:
        from .svgplot import pr_curve_svg
        Path(args.out_svg).write_text(
            pr_curve_svg({cls.class_name: curve}), encoding="utf-8")
    if args.json:
        print(json.dumps({"class": cls.class_name, "ap": ap,
                          "points": list(curve.points),
                          "thresholds": list(curve.thresholds),
                          "csv": args.out_csv, "svg": args.out_svg}))
    else:
        print(f"AP {ap:.4f}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sweep = SweepConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    progress = None if args.json else lambda line: print(line, flush=True)
    summary = sweep_run(sweep, Path(args.out), progress=progress)
    failed = sum(report["n_failed"] for report in summary["reports"])
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"Sweep complete: {summary['n_combinations']} combinations x "
              f"{summary['n_samples']} samples, best combo {summary['best']} "
              f"-> {args.out}/summary.csv")
        if failed:
            print(f"{failed} trials failed; see per-trial reports", file=sys.stderr)
    return EXIT_DETECTOR if failed else EXIT_OK


def _cmd_inspect(args) -> int:
    stats = inspect_dataset(Path(args.dataset))
    if args.json:
        print(json.dumps(stats))
        return EXIT_OK
    print(f"Images: {stats['n_images']}")
    print(f"Boxes: {stats['n_boxes']}")
    print("Box-area histogram (px^2):")
    for label, count in stats["box_area_histogram"].items():
        print(f"  {label:>12}: {count}")
    print(f"Rejected frames: {stats['n_rejections']}")
    for reason, count in sorted(stats["rejections"].items()):
        print(f"  {reason}: {count}")
    if stats["missing_files"]:
        print(f"Missing files for {len(stats['missing_files'])} manifest entries",
              file=sys.stderr)
    return EXIT_OK


def _cmd_make_assets(args) -> int:
    manifest_path = write_demo_assets(Path(args.out))
    if args.json:
        print(json.dumps({"manifest": str(manifest_path)}))
    else:
        print(f"Demo asset pack written; manifest at {manifest_path}")
    return EXIT_OK


def _cmd_detect_oracle(args) -> int:
    if args.mode == "echo":
        detections = echo_detections(Path(args.test_gt))
    else:
        detections = noisy_detections(Path(args.test_gt), drop_rate=args.drop_rate,
                                      jitter=args.jitter, seed=args.seed)
    save_detections(detections, Path(args.out))
    if args.json:
        print(json.dumps({"out": args.out, "n_detections": len(detections)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    parser = _Parser(prog="cadsynth",
                     description="Synthetic tabletop datasets for object detection: "
                                 "generate, label, evaluate, sweep.")
    parser.add_argument("--version", action="version", version=f"cadsynth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate a labeled dataset")
    p.add_argument("--config", help="GenConfig JSON file (defaults apply when omitted)")
    p.add_argument("--assets", default="demo",
                   help="asset manifest JSON path, or 'demo' for the built-in pack")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, default=1, help="render worker threads")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("render-debug", help="render one scene to a PNG")
    p.add_argument("--scene", help="scene JSON file to render")
    p.add_argument("--config", help="GenConfig JSON (when sampling a scene fresh)")
    p.add_argument("--scene-index", type=int, default=0,
                   help="scene index to sample when no --scene file is given")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--assets", default="demo")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--mask-out", help="also write the instance-id mask PNG")
    p.add_argument("--dump-scene", help="write the sampled scene as JSON")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_render_debug)

    p = sub.add_parser("evaluate", help="score detections against ground truth")
    p.add_argument("--gt", required=True,
                   help="dataset directory or annotations directory")
    p.add_argument("--det", required=True, help="detections JSONL file")
    p.add_argument("--iou", type=float, default=0.5, help="IoU threshold (default 0.5)")
    p.add_argument("--conf", type=float, default=0.9,
                   help="confidence threshold (default 0.9)")
    p.add_argument("--json-out", help="write the full report JSON here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pr-curve", help="emit a precision-recall curve")
    p.add_argument("--gt", required=True)
    p.add_argument("--det", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--class", dest="class_name",
                   help="class to plot when several are present")
    p.add_argument("--out-csv", required=True, help="CSV output path")
    p.add_argument("--out-svg", help="optional SVG step-plot path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_pr_curve, needs_parser=True)

    p = sub.add_parser("sweep", help="run a hyperparameter sweep")
    p.add_argument("--config", required=True, help="sweep config JSON")
    p.add_argument("--out", required=True, help="sweep output directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("inspect", help="summarize a generated dataset")
    p.add_argument("dataset", help="dataset directory (contains manifest.json)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("make-assets", help="write the built-in demo asset pack")
    p.add_argument("--out", required=True, help="directory for meshes/textures/manifest")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_make_assets)

    p = sub.add_parser("detect-oracle",
                       help="built-in reference detector (echo or noisy)")
    p.add_argument("--mode", choices=("echo", "noisy"), required=True)
    p.add_argument("--dataset", help="generated dataset directory (accepted, unused)")
    p.add_argument("--test-gt", required=True, help="test annotation directory")
    p.add_argument("--out", required=True, help="detections JSONL output path")
    p.add_argument("--drop-rate", type=float, default=0.3)
    p.add_argument("--jitter", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_detect_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "needs_parser", False):
            return args.func(args, parser)
        return args.func(args)
    except DetectorFailure as exc:
        print(f"cadsynth: detector error: {exc}", file=sys.stderr)
        return EXIT_DETECTOR
    except (DataError, GenerationFailure, PlacementFailure,
            CameraConstraintFailure) as exc:
        print(f"cadsynth: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"cadsynth: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
