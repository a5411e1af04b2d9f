"""Command-line entry point: ``prepare``, ``run`` and ``report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .data import save_prepared
from .errors import ConfigError, DataError
from .experiment import (ExperimentConfig, load_result, prepare_splits, render,
                         report, run_experiment)
from .parallel import default_workers

log = logging.getLogger("unlearnaudit")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    return config


def cmd_prepare(args) -> int:
    config = _load_config(args)
    pools = prepare_splits(config)
    out = Path(args.output or Path(config.output_dir or ".") / "prepared.npz")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_prepared(out, pools["target_pos"].parent, pools)
    log.info("wrote %s", out)
    print(out)
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load_config(args)
    record = run_experiment(config, workers=args.workers, cache_dir=args.cache_dir)
    out = args.output
    if out is None and config.output_dir:
        out = Path(config.output_dir) / f"{config.name}.{args.format}"
    if out is None:
        sys.stdout.write(render(record, args.format))
    else:
        print(report(record, args.format, out))
    return EXIT_OK


def cmd_report(args) -> int:
    record = load_result(args.input)
    if args.output is None:
        sys.stdout.write(render(record, args.format))
    else:
        print(report(record, args.format, args.output))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unlearnaudit",
        description="Measure membership leakage caused by machine unlearning.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment JSON")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--output", help="output path")

    p = sub.add_parser("prepare", help="encode and split a dataset into an .npz")
    common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("run", help="run one experiment")
    common(p)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--cache-dir", help="reuse farms trained by earlier runs")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="re-render a saved JSON result")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
