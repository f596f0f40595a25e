"""Command-line front end.

One subcommand per pipeline stage plus `run` for the whole pipeline with
caching. Global flags (`--config`, `--seed`, `--out-dir`, `--jobs`) are
accepted both before and after the subcommand; command-line values override
the config file, which overrides the built-in defaults.

Exit codes: 0 success, 2 invalid input (bad flags, unreadable or malformed
files, bad config), 3 a stage failed while running.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import __version__
from .errors import InputError
from .pipeline import (MANIFEST_FILE, PipelineConfig, StageFailure,
                       load_config, run_pipeline, run_stage)

_STAGE_HELP = {
    "ingest": "tokenize the corpus and build the document-term matrices",
    "grid": "train the selection grid and pick the model family and K",
    "train": "retrain the selected model on the full corpus",
    "terms": "rank and select the concepts that describe each topic",
    "map": "project topics onto a two-dimensional distance map",
    "kg": "extract concept relations and lay out the knowledge graph",
    "compare": "score the generated topics against a reference taxonomy",
    "report": "render the static HTML report from existing artifacts",
}


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # Subparsers reuse the same destinations with SUPPRESS defaults so a
    # flag given before the subcommand is not clobbered by the subparser.
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="FILE", default=default,
                        help="INI configuration file")
    parser.add_argument("--seed", type=int, default=default, metavar="N",
                        help="random seed for every trained model")
    parser.add_argument("--out-dir", default=default, metavar="DIR",
                        help="artifact directory (default: out)")
    parser.add_argument("--jobs", type=int, default=default, metavar="N",
                        help="worker threads for grid training and "
                             "relation extraction (default: 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topictaxo",
        description="Corpus-to-taxonomy topic modeling pipeline.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="COMMAND")

    run = sub.add_parser("run", help="run every stage, reusing artifacts "
                                     "that are already up to date")
    run.add_argument("corpus", nargs="?", default=None,
                     help="corpus JSONL file (overrides the config)")
    _add_common(run, suppress=True)

    for name, help_text in _STAGE_HELP.items():
        stage = sub.add_parser(name, help=help_text)
        if name == "ingest":
            stage.add_argument("corpus", nargs="?", default=None,
                               help="corpus JSONL file (overrides the "
                                    "config)")
        if name == "compare":
            stage.add_argument("reference", nargs="?", default=None,
                               help="reference taxonomy JSON file "
                                    "(overrides the config)")
        _add_common(stage, suppress=True)
    return parser


def build_effective_config(args) -> tuple[PipelineConfig, int]:
    config = PipelineConfig()
    if args.config is not None:
        config = load_config(args.config, base=config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    corpus = getattr(args, "corpus", None)
    if corpus is not None:
        overrides["corpus_path"] = corpus
    reference = getattr(args, "reference", None)
    if reference is not None:
        overrides["reference_path"] = reference
    if overrides:
        config = replace(config, **overrides)
    jobs = args.jobs if args.jobs is not None else 1
    if jobs < 1:
        raise InputError("--jobs must be at least 1")
    return config, jobs


def _setup_logging() -> None:
    level_name = os.environ.get("TOPICTAXO_LOG", "WARNING").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    try:
        config, jobs = build_effective_config(args)
        if args.command == "run":
            manifest = run_pipeline(config, jobs=jobs)
            for stage in manifest.stages:
                print(f"{stage.name}: {stage.status} "
                      f"({stage.seconds:.2f}s)")
            print(f"wrote {os.path.join(config.out_dir, MANIFEST_FILE)}")
            return 0
        for path in run_stage(args.command, config, jobs=jobs):
            print(f"wrote {path}")
        return 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - stage errors exit 3, not a trace
        logging.getLogger(__name__).debug("unexpected failure", exc_info=exc)
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
