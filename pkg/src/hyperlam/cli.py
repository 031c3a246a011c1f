"""Command line runner: ``hyperlam <subcommand> [options]``.

Every subcommand writes its CSV artifacts and a ``summary.csv`` with columns
``criterion,value,threshold,pass`` into the output directory, chosen by
``--out``, else the ``HYPERLAM_OUT`` environment variable, else
``./hyperlam-out``.  Exit status: 0 if every criterion passes, 1 if one
fails, 2 for a configuration error, 3 when a numerical routine fails its
own accuracy or stopping test.
"""

import argparse
import os
import sys
from pathlib import Path

from . import experiments
from .errors import NumericalError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

CONFIG_KEYS = {"seed", "out", "threads", "max_paths", "max_grid", "n"}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _nonnegative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return v


def _n_list(text):
    try:
        vals = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("orders n must be positive integers")
    return vals


def _tolerance(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    if name not in experiments.DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(f"unknown tolerance {name!r}")
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name} must be a number")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"tolerance {name} must be positive")
    return name, v


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_nonnegative_int, help="random seed (default 2024)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=_positive_int, help="worker threads (default: all cores)")
    common.add_argument("--config", help="key=value file; command line flags take precedence")
    common.add_argument("--tol", action="append", type=_tolerance, default=[], metavar="NAME=VALUE",
                        help="override a pass/fail threshold")
    common.add_argument("--max-paths", type=_positive_int, help="cap on Monte Carlo path counts")
    common.add_argument("--max-grid", type=_positive_int, help="cap on grid and quadrature sizes")

    parser = _Parser(prog="hyperlam", description="Run the numerical experiments and check their criteria.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in experiments.RECIPES:
        p = sub.add_parser(name, parents=[common])
        if name == "kb-invariance":
            p.add_argument("--n", type=_n_list, help="orders of the means, e.g. 8,16,32,64")
    p = sub.add_parser("all", parents=[common], help="every subcommand plus the reproducibility check")
    p.add_argument("--n", type=_n_list, help="orders of the means for kb-invariance")
    return parser


def read_config(path):
    """Parse a ``key = value`` file (``#`` comments).  ``tol.NAME`` keys set thresholds."""
    values, tols = {}, {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        if key.startswith("tol."):
            try:
                tols.update([_tolerance(f"{key[4:]}={value}")])
            except argparse.ArgumentTypeError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}")
        elif key in CONFIG_KEYS:
            values[key] = value
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    converters = {"seed": _nonnegative_int, "threads": _positive_int, "max_paths": _positive_int,
                  "max_grid": _positive_int, "n": _n_list, "out": str}
    out = {}
    for key, value in values.items():
        try:
            out[key] = converters[key](value)
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(f"{path}: {key}: {exc}")
    return out, tols


def make_context(args):
    cfg, tols = read_config(args.config) if args.config else ({}, {})

    def pick(name, default=None):
        v = getattr(args, name, None)
        return v if v is not None else cfg.get(name, default)

    out = args.out or cfg.get("out") or os.environ.get("HYPERLAM_OUT") or "hyperlam-out"
    tol = dict(experiments.DEFAULT_TOLERANCES)
    tol.update(tols)
    tol.update(dict(args.tol))
    ctx = experiments.Context(
        out=Path(out),
        seed=pick("seed", 2024),
        threads=pick("threads"),
        caps=experiments.Caps(pick("max_paths"), pick("max_grid")),
        tol=tol,
    )
    ns = pick("n")
    if ns is not None:
        ctx.kb_ns = tuple(ns)
    return ctx


def write_summary(path, rows):
    lines = ["criterion,value,threshold,pass"]
    for name, value, thr, ok in rows:
        lines.append(f"{name},{float(value):.17g},{float(thr):.17g},{'pass' if ok else 'fail'}")
    Path(path).write_text("\n".join(lines) + "\n")


def run(args):
    ctx = make_context(args)
    try:
        ctx.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {ctx.out}: {exc.strerror}")
    if args.command == "all":
        rows = []
        for recipe in experiments.RECIPES.values():
            rows += recipe(ctx)
        rows += experiments.reproducibility(ctx)
    else:
        rows = experiments.RECIPES[args.command](ctx)
    write_summary(ctx.path("summary.csv"), rows)
    for name, value, thr, ok in rows:
        print(f"{'pass' if ok else 'FAIL'}  {name}  value={value:.6g}  threshold={thr:.6g}")
    return EXIT_OK if all(r[3] for r in rows) else EXIT_FAIL


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return run(args)
    except ConfigError as exc:
        print(f"hyperlam: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"hyperlam: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
