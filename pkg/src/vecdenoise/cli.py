"""Command-line entry point.

Usage: vecdenoise <command> --config PATH [--key value ...]

Any config key may be passed as a flag of the same name; flags override
file values. Exit codes: 0 success, 1 usage or config error, 2 data
error, 3 numerical failure.
"""

import argparse
import sys

from .config import PipelineConfig, load_config
from .errors import ConfigError, DataError, NumericalError
from .pipeline import COMMANDS, run_pipeline


def _parse_overrides(tokens):
    """Turn leftover CLI tokens into config key-value pairs."""
    overrides = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument: {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, _, value = key.partition("=")
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"flag --{key} needs a value")
            value = tokens[i + 1]
            i += 2
        if not key:
            raise ConfigError(f"malformed flag: {tok!r}")
        overrides[key] = value
    return overrides


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = argparse.ArgumentParser(
        prog="vecdenoise",
        description="Denoise word embeddings with a learned filter.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="path to a key = value config file")
    try:
        args, rest = parser.parse_known_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    try:
        values = load_config(args.config) if args.config else {}
        cfg = PipelineConfig(values)
        for key, value in _parse_overrides(rest).items():
            cfg.override(key, value)
        run_pipeline(args.command, cfg)
    except ConfigError as exc:
        print(f"vecdenoise: config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"vecdenoise: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"vecdenoise: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
