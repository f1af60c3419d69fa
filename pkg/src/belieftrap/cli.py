"""Command line: ``belieftrap {run,sweep,verify,presets}``.

Exit codes: 0 success, 1 config error, 2 verification failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, config_from_dict, load_config, parse_override
from .envs import GN_PRESETS, gn_count
from .experiment import ExperimentIOError, run_experiment, sweep, verify_theorems

log = logging.getLogger("belieftrap")

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3

# flag name -> dotted config key
FLAG_KEYS = {"seed": "seed", "rollouts": "rollouts", "horizon": "horizon", "out": "output_dir",
             "workers": "workers", "suite": "verify.suite"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="belieftrap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--rollouts", type=int)
    common.add_argument("--horizon", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (dotted path); repeatable")

    sub.add_parser("run", parents=[common], help="run rollouts and write reports")
    sub.add_parser("sweep", parents=[common], help="run one experiment per sweep value")
    verify = sub.add_parser("verify", parents=[common], help="run a verification suite")
    verify.add_argument("--suite", help="thm1-drift, hitting-time, thm2-sign or cor1")
    sub.add_parser("presets", help="list the GuessNumbers presets")
    return parser


def resolve_config(args):
    overrides = [parse_override(s) for s in args.set]
    overrides += [(key, getattr(args, flag)) for flag, key in FLAG_KEYS.items()
                  if getattr(args, flag, None) is not None]
    if args.config is None:
        return config_from_dict({}, overrides)
    return load_config(args.config, overrides)


def _presets() -> int:
    for name, (a, b, x, y) in sorted(GN_PRESETS.items()):
        print(f"{name}\tdigits={a}\tsymbols={b}\tinitial_feedback={x}A{y}B\tstates={gn_count(a, b)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "presets":
        return _presets()
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        if args.command == "run":
            print(json.dumps(run_experiment(cfg), indent=2))
            return EXIT_OK
        if args.command == "sweep":
            for row in sweep(cfg):
                print(json.dumps(row))
            return EXIT_OK
        if cfg.verify.suite is None:
            print("config error: no verification suite given (--suite or verify.suite)",
                  file=sys.stderr)
            return EXIT_CONFIG
        verdict = verify_theorems(cfg)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        text = json.dumps(verdict, indent=2, sort_keys=True) + "\n"
        (out / f"verify-{verdict['suite']}.json").write_text(text)
        print(text, end="")
        return EXIT_OK if verdict["passed"] else EXIT_VERIFY
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExperimentIOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
