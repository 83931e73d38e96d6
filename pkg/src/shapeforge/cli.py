"""Command-line entry point wiring configs to pipeline stages.

Exit codes: 0 success, 2 configuration error, 3 data/artifact error,
4 numeric divergence during training.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import (
    ConfigError,
    DivergenceError,
    EmptySurfaceError,
    InfeasibleDesignError,
    MeshError,
    ShapeForgeError,
    StageArtifactError,
    WatertightError,
)
from .pipeline import (
    RunPaths,
    stage_evaluate,
    stage_export,
    stage_optimize,
    stage_preprocess,
    stage_reconstruct,
    stage_train,
)

_STAGES = {
    "preprocess": stage_preprocess,
    "train": stage_train,
    "reconstruct": stage_reconstruct,
    "evaluate": stage_evaluate,
    "optimize": stage_optimize,
    "export": stage_export,
}

_DATA_ERRORS = (
    MeshError,
    WatertightError,
    EmptySurfaceError,
    StageArtifactError,
    InfeasibleDesignError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapeforge",
        description=(
            "Train a latent shape decoder on signed-distance samples, "
            "evaluate its reconstructions, and search the latent space "
            "with a multi-objective GA."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("preprocess", "validate, normalize, and sample the input shapes"),
        ("train", "fit the decoder and per-shape latent codes"),
        ("reconstruct", "extract meshes for the trained latent codes"),
        ("evaluate", "score reconstructions against the references"),
        ("optimize", "run the genetic search over the latent space"),
        ("export", "write meshes for the stored final front"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--out", default=None,
                       help="override the configured output directory")
        p.add_argument("--bounds-margin", type=float, default=None,
                       help="override the GA search-box margin")
        p.add_argument("--resolution", type=int, default=None,
                       help="override the mesh extraction resolution")
        if name == "preprocess":
            p.add_argument("--skip-invalid", action="store_true",
                           help="skip non-watertight inputs instead of aborting")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config,
            seed_override=args.seed,
            out_override=args.out,
            bounds_margin_override=args.bounds_margin,
            resolution_override=args.resolution,
        )
        paths = RunPaths(cfg.out)
        stage = _STAGES[args.command]
        if args.command == "preprocess":
            stage(cfg, paths, skip_invalid=args.skip_invalid)
        else:
            stage(cfg, paths)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4
    except ShapeForgeError as exc:  # any remaining package failure is data-shaped
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
