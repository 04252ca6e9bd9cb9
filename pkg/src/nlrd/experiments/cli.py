"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on invalid
input. Invalid input also prints a one-line JSON error to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import (
    BudgetExceededError,
    ConfigError,
    GridMemoryError,
    ParameterError,
    RegimeError,
)
from .commands import COMMANDS, RunContext
from .config import DEFAULT_SEED, load_config

INPUT_ERRORS = (ConfigError, ParameterError, RegimeError, BudgetExceededError, GridMemoryError)


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand from resetting flags given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--seed", type=_u64,
                        help=f"master seed (default: config value or {DEFAULT_SEED})")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=_positive, help="worker threads")
    common.add_argument("--calibrate", action="store_true",
                        help="validate only: run at 4x budget and write pilot statistics")

    parser = _Parser(prog="nlrd", description="Random deposition with nonlocal heavy-tailed bumps.",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "simulate": "run trajectories, write checkpoint and deposition-log CSVs",
        "speed": "check the growth of h_N(0) against its regime",
        "fluct": "check the fluctuation law at the configured probes",
        "phase": "sweep an (alpha, beta) grid and classify each point",
        "limits": "draw samples of a limit law",
        "validate": "run the acceptance battery",
        "conjecture-min": "exploratory report on min-model fluctuations",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, parents=[common])
        if name == "validate":
            sp.add_argument("--suite", default=None,
                            help="'all', criterion ids or names, comma separated")
    return parser


def _emit_error(kind: str, message: str):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args["command"]
    try:
        cfg = load_config(args["config"]) if "config" in args else None
        seed = args.get("seed", cfg.master_seed if cfg else DEFAULT_SEED)
        out = args.get("out", cfg.outputs if cfg else "out")
        threads = args.get("threads", cfg.threads if cfg else 1)
        calibrate = args.get("calibrate", False)
        if calibrate and command != "validate":
            raise ConfigError("--calibrate applies to validate only")
        ctx = RunContext(cfg, seed, out, threads, calibrate, args.get("suite"))
        code, manifest = COMMANDS[command](ctx)
    except INPUT_ERRORS as e:
        _emit_error(type(e).__name__, str(e))
        return 2
    status = "ok" if code == 0 else "failed"
    print(f"{command}: {status} ({manifest['wall_time']:.1f} s), manifest in {out}/manifest.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
