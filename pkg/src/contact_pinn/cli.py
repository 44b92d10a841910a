"""Command line interface.

Subcommands: ``run`` (train a scene), ``gradcheck`` (finite-difference
verification of the loss gradient), ``list-scenes`` and ``hertz-report``
(the benchmark sweep table).  Exit codes: 0 success, 2 validation error,
3 numerical failure, 4 I/O error.

The output root defaults to the ``CONTACT_PINN_OUT`` environment variable
(falling back to ``./out``).  ``--deterministic`` asserts the documented
fixed-order reduction mode; the numpy backend always reduces in a fixed
sequential order, so the flag is a recorded no-op kept for compatibility
with parallel builds.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import os
import sys

import numpy as np

from .errors import ConfigurationError, ContactPinnError, NumericalError
from . import scenes as S

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _parse_value(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def load_config_file(path, overrides):
    """Flat key = value sections; body sections map onto prefixed params.

    ``[scene]`` holds name/preset/seed/out; any other section contributes
    parameter overrides.  A ``[body.<name>]`` section first tries the
    ``<key>_<name>`` spelling (e.g. E under [body.cyl] becomes E_cyl).
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case sensitive (E vs e)
    read = parser.read(path)
    if not read:
        raise OSError(f"cannot read config file {path}")
    meta = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            value = _parse_value(raw)
            if section == "scene":
                meta[key] = value
            elif section.startswith("body."):
                body = section.split(".", 1)[1]
                overrides[f"{key}_{body}"] = value
            else:
                overrides[key] = value
    return meta


def _out_root(args):
    if getattr(args, "out", None):
        return args.out
    return os.environ.get("CONTACT_PINN_OUT", "out")


def cmd_run(args):
    overrides = {}
    meta = {}
    if args.config:
        meta = load_config_file(args.config, overrides)
    for item in args.override or []:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        overrides[key.strip()] = _parse_value(raw.strip())
    name = args.scene or meta.get("name")
    if not name:
        raise ConfigurationError("no scene given (use --scene or a config file)")
    preset = args.preset or meta.get("preset", "desk")
    seed = args.seed if args.seed is not None else int(meta.get("seed", 0))
    config = S.build_scene(name, overrides=overrides, preset=preset,
                           seed=seed, out_dir=_out_root(args))
    result = S.run_scene(config)
    last = result["history"][-1]["breakdown"] if result["history"] else None
    print(f"scene {name} ({preset}, seed {seed}): "
          f"{len(result['history'])} epochs, outputs in {result['out_dir']}")
    if last is not None:
        print(f"final loss {last.total:.6e}")
    if "errors" in result:
        e = result["errors"]
        print(f"pressure MAPE {e['mape']:.2f}%  RMAE {e['rmae']:.2f}%  "
              f"integrated load {e['integrated_load']:.4f}  "
              f"min gap {e['min_gap']:.3e}")
    return EXIT_OK


def cmd_gradcheck(args):
    names = [args.scene] if args.scene else S.list_scenes()
    tol = 1e-5
    failed = []
    for name in names:
        worst, draws = S.gradcheck_scene(name, draws=args.draws)
        ok = worst < tol
        print(f"{name:12s} worst rel err {worst:.3e} over {draws} draws: "
              f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            failed.append(name)
    if failed:
        raise NumericalError(f"gradient check failed for: {', '.join(failed)}")
    return EXIT_OK


def cmd_list_scenes(_args):
    for name in S.list_scenes():
        print(name)
    return EXIT_OK


def cmd_hertz_report(args):
    seeds = tuple(range(args.seeds))
    S.hertz_report(seeds=seeds, preset=args.preset)
    return EXIT_OK


def make_parser():
    parser = argparse.ArgumentParser(
        prog="contact-pinn",
        description="Energy-minimizing neural networks for 2D frictionless "
                    "contact problems")
    parser.add_argument("--deterministic", action="store_true",
                        help="force fixed-order reductions (already the "
                             "default for this backend)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train a built-in scene")
    p_run.add_argument("--scene", help="scene name (see list-scenes)")
    p_run.add_argument("--config", help="key = value config file")
    p_run.add_argument("--preset", choices=S.PRESETS, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", help="output root (default CONTACT_PINN_OUT)")
    p_run.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="override one scene parameter (repeatable)")
    p_run.set_defaults(fn=cmd_run)

    p_gc = sub.add_parser("gradcheck",
                          help="finite-difference check of the loss gradient")
    p_gc.add_argument("--scene", default=None)
    p_gc.add_argument("--draws", type=int, default=20)
    p_gc.set_defaults(fn=cmd_gradcheck)

    p_ls = sub.add_parser("list-scenes", help="print the built-in scenes")
    p_ls.set_defaults(fn=cmd_list_scenes)

    p_hz = sub.add_parser("hertz-report",
                          help="pressure-error sweep over r0/phi0 cells")
    p_hz.add_argument("--seeds", type=int, default=5)
    p_hz.add_argument("--preset", choices=S.PRESETS, default="desk")
    p_hz.set_defaults(fn=cmd_hertz_report)
    return parser


def cli(argv=None):
    """Entry point returning a process exit code."""
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ContactPinnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
