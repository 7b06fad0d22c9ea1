"""Command-line runner: run, validate and list-experiments.

Exit codes: 0 all criteria pass, 1 a criterion failed (or a module raised
during the run), 2 configuration error.
"""
import argparse
import os
import platform
import sys
import traceback

import numpy as np
import scipy

from . import __version__, _backend
from .errors import ConfigError, DropletLabError
from .experiments import DESCRIPTIONS, EXPERIMENTS, ExperimentConfig, run_experiment, validate
from .output import jsonable, write_json

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def load_config(args):
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = ExperimentConfig.from_json(fh.read())
        except OSError as e:
            raise ConfigError("cannot read config: %s" % e)
        if args.experiment and args.experiment != cfg.experiment:
            raise ConfigError("experiment %r conflicts with config tag %r"
                              % (args.experiment, cfg.experiment))
    elif args.experiment:
        cfg = ExperimentConfig.from_dict({"experiment": args.experiment})
    else:
        raise ConfigError("give an experiment name or --config PATH")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    return cfg


def versions():
    return {"dropletlab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "backend": _backend.BACKEND}


def cmd_run(args):
    cfg = load_config(args)
    problems = validate(cfg)
    if problems:
        for p in problems:
            print("config: %s" % p, file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w") as fh:
        fh.write(cfg.to_json())
    manifest = {"config": cfg.to_dict(), "resolved": cfg.with_defaults().to_dict(),
                "versions": versions(), "jobs": args.jobs}
    try:
        crits, files, _ = run_experiment(cfg, out, args.jobs)
    except ConfigError:
        raise
    except DropletLabError as e:
        manifest["error"] = {"type": type(e).__name__, "message": str(e),
                             "traceback": traceback.format_exc()}
        manifest["passed"] = False
        write_json(os.path.join(out, "manifest.json"), manifest)
        print("FAIL %s: %s: %s" % (cfg.experiment, type(e).__name__, e), file=sys.stderr)
        return EXIT_FAIL
    manifest["criteria"] = crits
    manifest["files"] = sorted(os.path.relpath(f, out) for f in files)
    manifest["passed"] = all(c["passed"] for c in crits)
    write_json(os.path.join(out, "manifest.json"), manifest)
    for c in crits:
        print("%s %s: %s (value=%s)" % ("PASS" if c["passed"] else "FAIL", c["id"], c["name"],
                                        jsonable(c["value"])))
    return EXIT_OK if manifest["passed"] else EXIT_FAIL


def cmd_validate(args):
    cfg = load_config(args)
    problems = validate(cfg)
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return EXIT_CONFIG if problems else EXIT_OK


def cmd_list(args):
    for name in EXPERIMENTS:
        print("%-16s %s" % (name, DESCRIPTIONS[name]))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="dropletlab",
                                 description="Coulomb-gas droplet and kernel experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, hlp in (("run", cmd_run, "run an experiment"),
                          ("validate", cmd_validate, "static checks of a config")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--seed", metavar="N", type=int)
        p.add_argument("--jobs", metavar="N", type=int, default=1)
        p.set_defaults(func=fn)
    p = sub.add_parser("list-experiments", help="list experiment tags")
    p.set_defaults(func=cmd_list)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
