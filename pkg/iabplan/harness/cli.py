"""
Command line entry point.

    python -m iabplan run data/configs/reference.json --jobs 4 --out out/run1
    python -m iabplan sweep data/configs/reference.json --param points.lambda_bl --values 500 1000 2000
    python -m iabplan figure fig8 --instances 5
    python -m iabplan validate my_config.json
    python -m iabplan serve
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.config import configure_logging, settings
from src.schemas import ExperimentConfig, SweepSpec
from src.storage import ResultStorage, write_csv

from ..errors import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, ConfigurationError, IabError, error_envelope
from .events import EventBus
from .recipes import RECIPES, Scale, run_figure
from .runner import config_hash, load_config, run_experiment

logger = logging.getLogger(__name__)


def read_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw: Dict[str, Any] = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}", detail={"path": path}) from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"config file is not valid JSON: {exc.msg}", detail={"path": path, "line": exc.lineno}
        ) from exc
    return load_config(raw)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="Master seed (overrides the config)")
    parser.add_argument("--jobs", type=int, default=settings.DEFAULT_JOBS, help="Worker processes")
    parser.add_argument("--out", default=None, help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iabplan", description="Two-hop IAB network planning simulator")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one experiment config")
    run.add_argument("config")
    _common(run)

    sweep = sub.add_parser("sweep", help="Run a config over values of one parameter")
    sweep.add_argument("config")
    sweep.add_argument("--param", required=True, help="Dotted config path, e.g. points.lambda_bl")
    sweep.add_argument("--values", required=True, nargs="+", type=float)
    _common(sweep)

    figure = sub.add_parser("figure", help="Emit the dataset behind a reference figure")
    figure.add_argument("name", choices=sorted(RECIPES))
    figure.add_argument("--instances", type=int, default=20)
    figure.add_argument("--fading-draws", type=int, default=None)
    figure.add_argument("--iterations", type=int, default=None, help="GA iterations")
    _common(figure)

    validate = sub.add_parser("validate", help="Check a config file against the schema")
    validate.add_argument("config")

    serve = sub.add_parser("serve", help="Start the HTTP API")
    serve.add_argument("--host", default=settings.HOST)
    serve.add_argument("--port", type=int, default=settings.PORT)
    return parser


def _seeded(config: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    if seed is None:
        return config
    return config.model_copy(update={"master_seed": seed})


def _bus(out: Path) -> EventBus:
    return EventBus(base_dir=str(out.parent))


def cmd_run(args: argparse.Namespace, sweep: Optional[SweepSpec] = None) -> int:
    config = _seeded(read_config(args.config), args.seed)
    if sweep is not None:
        config = load_config({**config.model_dump(mode="json"), "sweep": sweep.model_dump()})
    storage = ResultStorage()
    out_arg = args.out or config.output
    if out_arg:
        out = Path(out_arg)
        result_set = run_experiment(config, jobs=args.jobs, bus=_bus(out), run_id=out.name)
        storage.save(result_set, out_dir=str(out))
    else:
        result_set = run_experiment(config, jobs=args.jobs, bus=EventBus(base_dir=str(storage.base_dir)))
        out = storage.save(result_set)
    print(result_set.summary().to_string(index=False))
    print(f"results: {out}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    return cmd_run(args, SweepSpec(param=args.param, values=args.values))


def cmd_figure(args: argparse.Namespace) -> int:
    scale = Scale(
        n_instances=args.instances,
        master_seed=0 if args.seed is None else args.seed,
        n_fading_draws=args.fading_draws,
        ga_iterations=args.iterations,
    )
    out = Path(args.out or Path(settings.DATA_DIR) / "figures")
    result = run_figure(args.name, scale, jobs=args.jobs, bus=EventBus(base_dir=str(out / "events")))
    path = write_csv(result.table, out / f"{args.name}.csv")
    metadata = {
        "figure": args.name,
        "description": RECIPES[args.name].description,
        "n_instances": scale.n_instances,
        "master_seed": scale.master_seed,
        "code_version": settings.BUILD_SHA,
        "runs": [run.metadata() for run in result.runs],
    }
    with open(out / f"{args.name}.json", "w", encoding="utf-8") as f:
        json.dump(metadata, f, indent=2, default=str)
    print(result.table.to_string(index=False))
    print(f"figure data: {path}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = read_config(args.config)
    print(json.dumps({"ok": True, "config_hash": config_hash(config)}))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("src.main:app", host=args.host, port=args.port, reload=settings.RELOAD)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "figure": cmd_figure,
    "validate": cmd_validate,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except IabError as exc:
        print(json.dumps(exc.envelope(), default=str), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(json.dumps(error_envelope("IO_ERROR", str(exc))), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        logger.exception("unexpected failure")
        print(json.dumps(error_envelope("INTERNAL", str(exc))), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
