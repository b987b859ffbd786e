"""Command-line entry point for the batch pipeline."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, StageError
from .pipeline import STAGES, PipelineConfig, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coursekg",
        description="Construct, fuse, and analyze course knowledge graphs.",
    )
    sub = parser.add_subparsers(dest="stage", required=True, metavar="stage")
    for stage in (*STAGES, "all"):
        description = (
            f"run pipeline stages up to and including '{stage}'"
            if stage != "all"
            else "run the whole pipeline"
        )
        p = sub.add_parser(stage, help=description)
        p.add_argument("--config", required=True, help="pipeline config file (INI)")
        p.add_argument("--stage-out", default=None, help="override the output directory")
        p.add_argument("--seed", type=int, default=None, help="override the analytics seed")
        p.add_argument(
            "--apply-corrections",
            action="store_true",
            default=None,
            help="apply accepted cleaning suggestions instead of only reporting them",
        )
        p.add_argument(
            "--force", action="store_true", help="re-run stages even when inputs are unchanged"
        )
        p.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = PipelineConfig.load(
            args.config,
            stage_out=args.stage_out,
            seed=args.seed,
            apply_corrections=args.apply_corrections,
        )
        results = run_pipeline(config, args.stage, force=args.force)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for result in results:
        line = f"{result['stage']}: {result['status']}"
        if "counts" in result:
            summary = ", ".join(f"{k}={v}" for k, v in sorted(result["counts"].items()))
            if summary:
                line += f" ({summary})"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
