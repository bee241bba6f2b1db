"""Command-line front end.

Precedence for every setting: command-line flag, then the ``--config``
document, then ``MARKETDEF_SEED`` (seed only), then the built-in default.

Exit status: 0 success, 2 config/schema error, 3 data/domain error,
4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from marketdef import __version__
from marketdef.errors import ConfigError, MarketDefError, OutputError
from marketdef.pipeline import REFERENCE_ALIASES, RunConfig, run, write_run

log = logging.getLogger("marketdef")

SEED_ENV = "MARKETDEF_SEED"


def _add_run_flags(p: argparse.ArgumentParser, clustering: bool) -> None:
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (replaced atomically)")
    if clustering:
        kg = p.add_mutually_exclusive_group()
        kg.add_argument("--k", type=int, help="skip k selection and use this k for the final fit")
        kg.add_argument("--k-max", type=int, dest="k_max")
        p.add_argument("--restarts", type=int)
        p.add_argument("--B", type=int, dest="B", help="gap reference datasets")
        p.add_argument("--reference", choices=sorted(REFERENCE_ALIASES))
        p.add_argument("--anchor", help="product id used as the first seed center")
        p.add_argument("--emit-svg", action="store_true", default=None, dest="emit_svg")
        p.add_argument("--drop-constant", action="store_true", default=None, dest="drop_constant")
        p.add_argument("--workers", type=int, help="threads for restarts and gap replicates")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="marketdef", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("cluster", help="two-step substitutability clustering"), True)
    _add_run_flags(sub.add_parser("cla", help="critical loss analysis"), False)
    _add_run_flags(sub.add_parser("screen", help="HHI merger screening"), False)
    sim = sub.add_parser("simulate-wholesalers", help="write the synthetic 30 x 9 wholesaler data")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", required=True)
    sim.add_argument("--raw", action="store_true", help="write unstandardized values")
    return ap


def env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None


def load_config(args) -> RunConfig:
    path = Path(args.config)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if doc.setdefault("pipeline", args.command) != args.command:
        raise ConfigError(f"config is for pipeline {doc['pipeline']!r}, not {args.command!r}")
    if "seed" not in doc:
        s = env_seed()
        if s is not None:
            doc["seed"] = s
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("config", "command", "verbose", "raw") and v is not None}
    if "k_max" in overrides:
        doc.pop("k", None)  # an explicit k_max asks for k selection
    doc.update(overrides)
    return RunConfig.from_dict(doc, config_dir=path.resolve().parent)


def simulate(args) -> Path:
    from marketdef.dataset import csv_text
    from marketdef.pipeline import AnalysisReport
    from marketdef.simulate import WHOLESALER_FEATURES, simulate_wholesalers

    seed = args.seed if args.seed is not None else env_seed()
    seed = 1 if seed is None else seed
    m = simulate_wholesalers(seed, standardized=not args.raw)
    cfg = {
        "features": [{"kind": "numeric", "name": n, "transform": "zscore"} for n in WHOLESALER_FEATURES],
        "id_column": m.id_column,
        "input": "wholesalers.csv",
        "k_max": 10,
        "pipeline": "cluster",
        "seed": seed,
    }
    # a report.json makes the directory recognizable (and replaceable) as a run
    report = AnalysisReport(config={"raw": args.raw, "seed": seed}, results={"n": m.n, "d": m.d},
                            provenance={"tool": "marketdef", "tool_version": __version__, "seed": seed},
                            files={"wholesalers.csv": csv_text(m),
                                   "config.json": json.dumps(cfg, sort_keys=True, indent=2) + "\n"})
    return write_run(report, args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="marketdef: %(levelname)s: %(message)s")
    try:
        if args.command == "simulate-wholesalers":
            out = simulate(args)
        else:
            cfg = load_config(args)
            report = run(cfg)
            for w in report.warnings:
                log.warning(w)
            out = write_run(report, cfg.resolve(cfg.out) if args.out is None else args.out)
    except MarketDefError as exc:
        print(f"marketdef: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"marketdef: error: {exc}", file=sys.stderr)
        return OutputError.exit_code
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
