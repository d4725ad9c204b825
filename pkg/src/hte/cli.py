"""Command-line experiment driver.

Subcommands run the seeded experiments (``ensemble-gap``,
``synth-bench``, ``param-study``, ``rate-study``, ``real-bench``) or fit
and score individual models.  Exit codes: 0 success, 2 configuration
error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .errors import ConfigError, DataError


def _read_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return obj


def _add_run_flags(parser: argparse.ArgumentParser, default_out: str):
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the root seed")
    parser.add_argument("--out-dir", type=Path, default=Path(default_out))
    parser.add_argument("--threads", type=int, default=1, help="parallel worker processes")


def _run_experiment(args, config_cls, runner, name):
    cfg = experiments.build_config(config_cls, _read_config(args.config), seed=args.seed)
    if args.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    runner(cfg, args.out_dir, threads=args.threads)
    print(f"{name}: wrote {args.out_dir}/results.csv")
    return 0


def _cmd_ensemble_gap(args):
    return _run_experiment(
        args, experiments.EnsembleGapConfig, experiments.run_ensemble_gap, "ensemble-gap"
    )


def _cmd_synth_bench(args):
    return _run_experiment(
        args, experiments.SynthBenchConfig, experiments.run_synth_bench, "synth-bench"
    )


def _cmd_param_study(args):
    return _run_experiment(
        args, experiments.ParamStudyConfig, experiments.run_param_study, "param-study"
    )


def _cmd_rate_study(args):
    return _run_experiment(
        args, experiments.RateStudyConfig, experiments.run_rate_study, "rate-study"
    )


def _cmd_real_bench(args):
    return _run_experiment(
        args, experiments.RealBenchConfig, experiments.run_real_bench, "real-bench"
    )


def _cmd_fit(args):
    config = _read_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    experiments.run_fit(config, args.out)
    print(f"fit: wrote {args.out}")
    return 0


def _cmd_score(args):
    experiments.run_score(
        args.model, args.data, args.out, delimiter=args.delimiter, header=args.header
    )
    print(f"score: wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hte",
        description="Histogram transform ensembles: density estimation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, handler in (
        ("ensemble-gap", _cmd_ensemble_gap),
        ("synth-bench", _cmd_synth_bench),
        ("param-study", _cmd_param_study),
        ("rate-study", _cmd_rate_study),
        ("real-bench", _cmd_real_bench),
    ):
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        _add_run_flags(sp, default_out=f"runs/{name}")
        sp.set_defaults(func=handler)

    fit = sub.add_parser("fit", help="fit one model and write it as JSON")
    fit.add_argument("--config", type=Path, required=True)
    fit.add_argument("--seed", type=int, help="override the config seed")
    fit.add_argument("--out", type=Path, required=True, help="output model JSON path")
    fit.set_defaults(func=_cmd_fit)

    score = sub.add_parser("score", help="evaluate a stored model on query points")
    score.add_argument("--model", type=Path, required=True)
    score.add_argument("--data", type=Path, required=True, help="CSV of query points")
    score.add_argument("--out", type=Path, required=True, help="output densities CSV")
    score.add_argument("--delimiter", default=",")
    score.add_argument("--header", action="store_true", help="query CSV has a header row")
    score.set_defaults(func=_cmd_score)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
