"""
premcheck Command Line
JSON report on stdout, one summary line per verdict on stderr.

Exit status 0 means the analysis ran (obstruction verdicts live in the report);
2 means the input could not be read or parsed.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, List, Optional

from app import __version__
from app.config import config
from app.services.freegroup import parse_signed_list
from app.services.reports import (
    BRAID_ANALYSES,
    FOLDMAP_ANALYSES,
    Report,
    cmd_braid,
    cmd_foldmap,
    cmd_theta,
    cmd_verdict,
    selftest,
    summary_lines,
)


logger = logging.getLogger("premcheck")

EXIT_OK = 0
EXIT_BAD_INPUT = 2


class InputError(Exception):
    """Unreadable or malformed input."""


def load_json(source: str) -> Any:
    """Read JSON from a file path, or parse the argument itself."""
    try:
        if os.path.exists(source):
            with open(source, "r", encoding="utf-8") as f:
                return json.load(f)
        return json.loads(source)
    except json.JSONDecodeError as e:
        raise InputError(f"{source}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise InputError(f"{source}: {e}") from e


def _braid_word(source: str) -> List[int]:
    if os.path.exists(source):
        data = load_json(source)
        return data["word"] if isinstance(data, dict) else data
    return parse_signed_list(source)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="premcheck", description="Obstruction reports for 2-prems")
    parser.add_argument("--version", action="version", version=f"premcheck {__version__}")
    parser.add_argument("--cap", type=int, default=config.DEFAULT_CAP,
                        help=f"truncation level for Magnus expansions and towers (default {config.DEFAULT_CAP})")
    parser.add_argument("--log-level", default=config.API_LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    braid = sub.add_parser("braid", help="braid word analyses")
    braid.add_argument("word", help='signed list such as "[1,2,-1,-2]" or a JSON file')
    braid.add_argument("--strands", type=int)
    braid.add_argument("--permutation", action="store_true")
    braid.add_argument("--trivial", action="store_true")
    braid.add_argument("--hb-trivial", action="store_true")
    braid.add_argument("--linking", action="store_true")
    braid.add_argument("--humphries", action="store_true")
    braid.add_argument("--level", type=int)

    foldmap = sub.add_parser("foldmap", help="fold map model analyses")
    foldmap.add_argument("arrangement", help="arrangement JSON file")
    foldmap.add_argument("loops", nargs="+", help="loop JSON files (a loop or a list of loops each)")
    foldmap.add_argument("--pullback", action="store_true")
    foldmap.add_argument("--monodromy", action="store_true")
    foldmap.add_argument("--winding", action="store_true")
    foldmap.add_argument("--alternation", action="store_true")
    foldmap.add_argument("--dot", action="store_true", help="include Graphviz descriptions of pullbacks")

    theta = sub.add_parser("theta", help="double point obstruction")
    theta.add_argument("input", help="theta JSON file")

    verdict = sub.add_parser("verdict", help="torsion-monodromy verdict")
    verdict.add_argument("torsion", type=int, help="finite order m >= 2")
    verdict.add_argument("permutation", help='"[2,1,3]" or cycle notation "(1 2)(3 4 5)"')
    verdict.add_argument("--degree", type=int)

    sub.add_parser("selftest", help="run the built-in fixtures")
    return parser


def _selected(args: argparse.Namespace, names) -> List[str]:
    chosen = [name for name in names if getattr(args, name, False)]
    return chosen or list(names)


def run(args: argparse.Namespace) -> Report:
    if args.command == "braid":
        return cmd_braid(_braid_word(args.word), args.strands, _selected(args, BRAID_ANALYSES),
                         args.level, args.cap)
    if args.command == "foldmap":
        arrangement = load_json(args.arrangement)
        loops = []
        for source in args.loops:
            data = load_json(source)
            loops.extend(data if isinstance(data, list) else [data])
        return cmd_foldmap(arrangement, loops, _selected(args, FOLDMAP_ANALYSES), args.dot)
    if args.command == "theta":
        return cmd_theta(load_json(args.input))
    if args.command == "verdict":
        return cmd_verdict(args.torsion, args.permutation, args.degree)
    return selftest()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = run(args)
    except (InputError, ValueError, KeyError, TypeError) as e:
        print(f"premcheck {args.command}: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    print(report.render())
    for line in summary_lines(report):
        print(line, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
