"""
Sketch3D command line
`python -m sketch3d <command> [flags]`; exit 0 on success, 1 on usage or
validation errors, 2 on runtime errors
"""

import argparse
import logging
import sys
from typing import List, Optional

from ..config.settings import configure_logging, get_settings
from ..errors import FormatError
from .commands import COMMANDS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config(p: argparse.ArgumentParser, required: bool = False) -> None:
    p.add_argument("--config", required=required, default=None, help="JSON run configuration (defaults if omitted)")


def _add_latent_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--latent-seed", type=int, default=None, help="Sample z from this seed instead of z = 0")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(
        prog="sketch3d",
        description="Sketch-to-mask translation with a frozen mask-to-3D teacher",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument(
        "--log-level",
        type=str.upper,
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Override S3D_LOG_LEVEL",
    )
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=UsageParser)
    sub.required = True

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    p = add("gen-data", "Generate the procedural face dataset")
    _add_config(p)
    p.add_argument("--root", default=None, help="Output directory (overrides data.root)")
    p.add_argument("--count", type=int, default=None, help="Number of samples (overrides data.count)")
    p.add_argument("--seed", type=int, default=None, help="Dataset seed (overrides data.seed)")
    p.add_argument("--workers", type=int, default=1, help="Writer threads")

    p = add("train", "Train the sketch-to-mask U-Net against the frozen teacher")
    _add_config(p)
    p.add_argument("--data", required=True, help="Dataset root")
    p.add_argument("--out", required=True, help="Run output directory")

    p = add("eval", "Evaluate mIoU and mAP of a checkpoint on a split")
    p.add_argument("--checkpoint", required=True, help="Checkpoint or run directory")
    p.add_argument("--data", required=True, help="Dataset root")
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--limit", type=int, default=None, help="Evaluate at most this many samples")
    p.add_argument("--out", default=None, help="Also write the JSON report here")

    p = add("infer", "Sketch to mask to rendered frontal view and orbit")
    _add_config(p)
    p.add_argument("--checkpoint", required=True, help="Checkpoint or run directory")
    p.add_argument("--sketch", required=True, help="Input sketch PGM")
    p.add_argument("--out", required=True, help="Output directory")
    _add_latent_seed(p)

    p = add("render", "Render an orbit of a label mask through the teacher")
    _add_config(p)
    p.add_argument("--checkpoint", default=None, help="Checkpoint or run directory (uses its teacher)")
    p.add_argument("--teacher", default=None, help="Teacher checkpoint directory")
    p.add_argument("--mask", required=True, help="Label mask PGM")
    p.add_argument("--out", required=True, help="Output directory")
    _add_latent_seed(p)

    p = add("tsne", "t-SNE of bottleneck embeddings with scatter export")
    _add_config(p)
    p.add_argument("--checkpoint", required=True, help="Checkpoint or run directory")
    p.add_argument("--data", required=True, help="Dataset root")
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--limit", type=int, default=None, help="Embed at most this many samples")
    p.add_argument("--perplexity", type=float, default=None, help="Override tsne.perplexity")
    p.add_argument("--out", required=True, help="Output prefix for .csv and .ppm")

    p = add("augment-preview", "Write every augmentation branch of a sketch")
    _add_config(p)
    p.add_argument("--sketch", required=True, help="Input sketch PGM")
    p.add_argument("--out", required=True, help="Output directory")

    p = add("selftest", "Run the gradient check and analytic oracles")
    p.add_argument("--only", nargs="+", default=None, help="Run only these oracles")

    p = add("ablation", "Train full / no_sv / no_augment arms across seeds")
    _add_config(p)
    p.add_argument("--data", required=True, help="Dataset root")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--seeds", default="0,1,2,3,4", help="Comma-separated training seeds")
    p.add_argument("--embedding-view", action="store_true", help="Add t-SNE silhouettes of full and no_sv")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    settings = get_settings()
    if args.log_level:
        settings = settings.model_copy(update={"LOG_LEVEL": args.log_level})
    configure_logging(settings)

    try:
        return COMMANDS[args.command](args)
    except (ValueError, FormatError, FileNotFoundError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.error(f"{args.command}: interrupted")
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception(f"{args.command} failed: {e}")
        return EXIT_RUNTIME


__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_USAGE", "EXIT_RUNTIME"]
