"""Command line entry point: ``qsim run|fit|optimize|validate``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .evolution import IntegrationError
from .fitting import FitError
from .model import RegisterError, ScheduleError
from .optimize import BoundsError
from .scenarios import (
    ConfigError,
    ScenarioConfig,
    ValidationFailed,
    load_profile,
    run_fit,
    run_optimize,
    run_scenario,
    validate,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

log = logging.getLogger("qsim")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="scenario config (JSON)")
    p.add_argument("--jobs", type=int, help="sweep points simulated concurrently")
    p.add_argument("--seed", type=int, help="seed for shot sampling")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="use exact probabilities (default)")
    mode.add_argument("--shots", type=int, metavar="N", help="sample N shots per point")
    p.add_argument("--mitigate", nargs="?", const=0.05, type=float, metavar="EPS",
                   help="also write readout-mitigated histograms (default eps 0.05)")
    p.add_argument("--mitigation-method", choices=["first_order", "exact"],
                   help="inverse used for mitigation (default first_order)")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsim", description="Rydberg atom array simulator and experiment runner")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("run", help="simulate a scenario and write its artifacts"))
    _add_run_flags(sub.add_parser("optimize", help="optimize the detuning drive for a target bitstring"))
    v = sub.add_parser("validate", help="check a config against the device profile")
    v.add_argument("config")
    f = sub.add_parser("fit", help="fit a damped sinusoid to a CSV with columns t, p, sigma")
    f.add_argument("csv")
    f.add_argument("--model", default="damped_sinusoid")
    f.add_argument("--out", default="qsim-fit")
    return parser


def _apply_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.seed is not None:
        cfg.seed = args.seed
    if args.exact:
        cfg.shots = None
    if args.shots is not None:
        cfg.shots = args.shots
    if args.mitigate is not None:
        cfg.mitigation, cfg.epsilon = True, args.mitigate
    if args.mitigation_method:
        cfg.mitigation_method = args.mitigation_method
    if args.out:
        cfg.output = args.out
    cfg.check()
    return cfg


def _main(args: argparse.Namespace) -> int:
    if args.command == "fit":
        record = run_fit(args.csv, args.out, args.model)
        print(json.dumps(record["params"]))
        return EXIT_OK
    profile = load_profile(os.environ.get("QSIM_PROFILE"))
    cfg = ScenarioConfig.load(args.config)
    if args.command == "validate":
        res, report = validate(cfg, profile)
        for rule, message, _ in report.violations:
            print(f"{rule}: {message}")
        print(f"{res.register.n} atoms, {len(res.schedules)} schedule(s): {'ok' if report.ok else 'INVALID'}")
        return EXIT_OK if report.ok else EXIT_VALIDATION
    cfg = _apply_overrides(cfg, args)
    if args.command == "run":
        results = run_scenario(cfg, profile)
        print(f"wrote {len(results['points'])} point(s) to {cfg.output}")
    else:
        results = run_optimize(cfg, profile)
        print(f"target {results['target']}: {results['target_probability_before']:.4g} -> "
              f"{results['target_probability_after']:.4g} after {results['iterations']} evaluations; "
              f"argmax {results['argmax']}; wrote {cfg.output}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _main(args)
    except ValidationFailed as exc:
        for rule, message, _ in exc.report.violations:
            print(f"validation failed: {rule}: {message}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, BoundsError, ScheduleError, RegisterError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IntegrationError, FitError, MemoryError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
