#!/usr/bin/env python3
"""
Orchard tree delineation CLI

Runs the winter/harvest pipeline up to a chosen stage, batches of scenes from a
config file, or writes synthetic scenes with ground truth.
"""

import argparse
import asyncio
import logging
import sys
from typing import List, Optional

from . import __version__
from .commands import run_batch, run_pipeline
from .exceptions import OrchardError
from .models.config import Stage
from .settings import configure_logging, has_scenes, load_batch, load_pipeline_config, parse_overrides
from .synth import SceneSpec, generate_scene, write_scene

logger = logging.getLogger(__name__)

# exit status of file system failures (missing or unreadable inputs)
IO_EXIT_CODE = 4

STAGE_COMMANDS = [stage.value for stage in Stage.ordered()]


def _pipeline_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="INI config file ([pipeline] and [scene NAME] sections)")
    parent.add_argument("--winter", help="Winter (leaf-off) PLY")
    parent.add_argument("--harvest", help="Harvest PLY")
    parent.add_argument("--calib", dest="winter_calib", help="Winter calibration sidecar JSON")
    parent.add_argument("--harvest-calib", help="Harvest calibration sidecar (defaults to --calib)")
    parent.add_argument("--gt-labels", help="PLY with semlabel/treeid scalars for the winter cloud")
    parent.add_argument("--gt-apples", help="Ground-truth apples JSON")
    parent.add_argument("--out", dest="out_dir", help="Output directory")
    parent.add_argument("--seed", type=int)
    parent.add_argument("--workers", type=int, help="Concurrent scenes in batch mode")
    parent.add_argument("--emit-debug", action="store_true", default=None, help="Write debug images")
    parent.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override a config value")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orchard", description="Apple tree delineation in trellis orchards")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    options = _pipeline_options()

    for name in STAGE_COMMANDS:
        sub.add_parser(name, parents=[options], help=f"Run the pipeline up to the {name} stage")
    run = sub.add_parser("run", parents=[options], help="Run the full pipeline, or a batch from --config")
    run.add_argument("--stage", choices=STAGE_COMMANDS, help="Last stage to run")

    synth = sub.add_parser("synth", help="Write a synthetic scene with ground truth")
    synth.add_argument("--out", required=True, help="Scene directory")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--trees", type=int, help="Trees in the row")
    synth.add_argument("--calibrated", action="store_true", help="Write the calibrated frame, no chart")
    synth.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override a scene parameter")
    return parser


def _flags(args: argparse.Namespace) -> dict:
    flags = {
        key: getattr(args, key, None)
        for key in ("winter", "harvest", "winter_calib", "harvest_calib", "gt_labels", "gt_apples", "out_dir")
    }
    flags.update(seed=args.seed, workers=args.workers, emit_debug=args.emit_debug)
    stage = getattr(args, "stage", None) if args.command == "run" else args.command
    flags["stage"] = stage
    return flags


def _run(args: argparse.Namespace) -> int:
    overrides = parse_overrides(args.set)
    flags = _flags(args)
    if args.command == "run" and args.config and has_scenes(args.config):
        scenes = load_batch(args.config, overrides, flags)
        workers = next(iter(scenes.values())).workers
        base = load_pipeline_config(args.config, overrides, flags)
        summary = asyncio.run(run_batch(scenes, workers, base.out_dir / "batch.json"))
        return 0 if all(status == "ok" for status in summary.scenes.values()) else 1

    config = load_pipeline_config(args.config, overrides, flags)
    run_pipeline(config)
    return 0


def _synth(args: argparse.Namespace) -> int:
    values = parse_overrides(args.set)
    values["seed"] = args.seed
    if args.trees is not None:
        values["n_trees"] = args.trees
    if args.calibrated:
        values["raw_frame"] = False
    write_scene(generate_scene(SceneSpec.create(**values)), args.out)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging()
        if args.command == "synth":
            return _synth(args)
        return _run(args)
    except OrchardError as e:
        print(f"❌ {type(e).__name__}: {e.detail}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ {e}", file=sys.stderr)
        return IO_EXIT_CODE


if __name__ == "__main__":
    sys.exit(main())
