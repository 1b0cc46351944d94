"""Command line entry points: augment, birdseye, stats, render-debug."""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import AugmentorError
from .geometry import GroundExtent
from .pipeline import (
    augment_dataset,
    compute_stats,
    export_birdseye,
    load_config,
    load_rigs,
    render_debug,
)


def _add_config_flags(parser):
    parser.add_argument("--config", required=True, help="config JSON path")
    parser.add_argument("--rigs", required=True, help="rig list JSON path")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output dir")


def _load_overridden_config(args):
    config = load_config(Path(args.config).read_text())
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.out is not None:
        config = dataclasses.replace(config, output_dir=args.out)
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="augmentor",
        description="Augment street images with rendered car instances.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_aug = sub.add_parser("augment", help="render the augmented dataset")
    _add_config_flags(p_aug)
    p_aug.add_argument("--jobs", type=int, default=None,
                       help="worker processes (AUGMENTOR_THREADS fallback); "
                            "outputs do not depend on this")

    p_bird = sub.add_parser("birdseye",
                            help="export top-down images for annotation")
    p_bird.add_argument("--rigs", required=True)
    p_bird.add_argument("--rig-index", type=int, default=None,
                        help="single rig to export (default: all)")
    p_bird.add_argument("--meters-per-pixel", type=float, default=0.1)
    p_bird.add_argument("--extent", type=float, nargs=4,
                        metavar=("X_MIN", "X_MAX", "Z_MIN", "Z_MAX"),
                        default=(-20.0, 20.0, 4.0, 64.0))
    p_bird.add_argument("--out", default="birdseye")

    p_stats = sub.add_parser("stats", help="aggregate a dataset manifest")
    p_stats.add_argument("--manifest", required=True)
    p_stats.add_argument("--out", default=None,
                         help="also write the report as JSON here")

    p_dbg = sub.add_parser("render-debug",
                           help="dump raw render buffers for one rig")
    _add_config_flags(p_dbg)
    p_dbg.add_argument("--rig-index", type=int, default=0)

    return parser


def _check_rig_index(index, rigs) -> None:
    if not 0 <= index < len(rigs):
        raise AugmentorError(
            f"--rig-index {index} out of range for {len(rigs)} rigs")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (AugmentorError, OSError) as exc:
        print(f"augmentor: error: {exc}", file=sys.stderr)
        return 2


def _run(args) -> int:
    if args.command == "augment":
        config = _load_overridden_config(args)
        rigs = load_rigs(args.rigs)
        manifest = augment_dataset(config, rigs, jobs=args.jobs)
        print(f"wrote {len(manifest.records)} composites to "
              f"{config.output_dir} (fingerprint {manifest.fingerprint[:12]})")
        return 0

    if args.command == "birdseye":
        rigs = load_rigs(args.rigs)
        extent = GroundExtent(*args.extent)
        if args.rig_index is None:
            picked = rigs
        else:
            _check_rig_index(args.rig_index, rigs)
            picked = [rigs[args.rig_index]]
        for rig in picked:
            image_path, meta_path = export_birdseye(
                rig, args.meters_per_pixel, extent, args.out)
            print(f"{rig.rig_id}: {image_path} + {meta_path.name}")
        return 0

    if args.command == "stats":
        stats = compute_stats(args.manifest)
        print(stats.table())
        if args.out is not None:
            Path(args.out).write_text(
                json.dumps(stats.to_dict(), sort_keys=True, indent=2) + "\n")
        return 0

    if args.command == "render-debug":
        config = _load_overridden_config(args)
        rigs = load_rigs(args.rigs)
        _check_rig_index(args.rig_index, rigs)
        out = render_debug(config, rigs[args.rig_index], args.rig_index,
                           args.out or "render-debug")
        print(f"buffers written to {out}")
        return 0

    return 2  # unreachable: argparse enforces the subcommand


if __name__ == "__main__":
    sys.exit(main())
