"""Command line entry point: ``stardamp run|ensemble|sweep|validate``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

from .config import ConfigError, ExperimentConfig, load_config

log = logging.getLogger("stardamp")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stardamp", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON config file (defaults if omitted)")
    common.add_argument("--seed", type=int, help="override initial_data.seed")
    common.add_argument("--out", help="override output.directory")
    common.add_argument("--stride", type=int, help="override output.stride")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub.add_parser("run", parents=[common], help="single simulation")
    e = sub.add_parser("ensemble", parents=[common], help="seeded ensemble")
    e.add_argument("--n", type=int, help="ensemble size (default analysis.ensemble_size)")
    e.add_argument("--workers", type=int, help="parallel processes")
    s = sub.add_parser("sweep", parents=[common], help="one run per value of a config field")
    s.add_argument("--axis", required=True, help="dotted config path, e.g. graph.L")
    s.add_argument("--values", required=True, type=float, nargs="+")
    sub.add_parser("validate", parents=[common], help="check a config and exit")
    return ap


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    d = cfg.to_dict()
    if args.seed is not None:
        d["initial_data"]["seed"] = args.seed
    if args.out is not None:
        d["output"]["directory"] = args.out
    if args.stride is not None:
        d["output"]["stride"] = args.stride
    return ExperimentConfig.from_dict(d)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")
    if args.quiet:
        warnings.simplefilter("ignore")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.verb == "validate":
        log.info("config ok")
        return 0

    from . import experiment
    if args.verb == "run":
        status, summary = experiment.run_experiment(cfg)
        if summary["status"] == "blow_up":
            log.warning("blow-up at step %d (t = %g)", summary["blow_up"]["step"],
                        summary["blow_up"]["time"])
        else:
            log.info(json.dumps({"checks": summary["checks"],
                                 "energy_identity": summary["energy_identity"]["residual"]}))
        return status
    if args.verb == "ensemble":
        summary = experiment.run_ensemble(cfg, args.n, workers=args.workers)
        log.info(json.dumps({"c_hat": summary["c_hat"], "checks": summary["checks"],
                             "failures": len(summary["failures"])}))
        ok = all(summary["checks"].values()) and not summary["failures"]
        return 0 if ok else 1
    try:
        rows = experiment.sweep(cfg, args.axis, args.values)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    for r in rows:
        log.info(json.dumps(r))
    return 0 if all(r["status"] == "ok" for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
