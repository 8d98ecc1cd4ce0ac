"""Command line front-end: scenario runs, the experiment, and serving."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError
from .harness import (
    ExperimentConfig,
    load_experiment_config,
    load_script,
    render_report,
    run_keyword_experiment,
    run_scenario,
)
from .service import OperatorService
from .system import Simulation, SystemConfig


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="intent-based assistive robot simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="replay a scenario script")
    run_p.add_argument("--scenario", required=True)
    run_p.add_argument("--grammar")
    run_p.add_argument("--rules")
    run_p.add_argument("--store-dir")
    run_p.add_argument("--locations")
    run_p.add_argument("--seed", type=int, default=42)
    run_p.add_argument("--trace", help="write the JSON-lines envelope trace here")

    exp_p = sub.add_parser("experiment", help="run a named experiment")
    exp_p.add_argument("name", choices=["keyword-spotting"])
    exp_p.add_argument("--config")
    exp_p.add_argument("--seed", type=int)
    exp_p.add_argument("--csv", help="write the per-cell CSV here")

    serve_p = sub.add_parser("serve", help="start the system plus the operator HTTP service")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--seed", type=int, default=42)
    serve_p.add_argument("--tick-hz", type=float, default=50.0)
    return parser


def _system_config(args) -> SystemConfig:
    cfg = SystemConfig(seed=args.seed)
    if args.grammar:
        cfg.grammar_path = Path(args.grammar)
    if args.rules:
        cfg.button_rules_path = Path(args.rules)
    if args.store_dir:
        cfg.store_dir = Path(args.store_dir)
    if args.locations:
        cfg.locations_path = Path(args.locations)
    return cfg


def _cmd_run(args) -> int:
    script = load_script(args.scenario)
    result = run_scenario(script, config=_system_config(args), seed=args.seed)
    if args.trace:
        Path(args.trace).write_text(result.trace_text(), encoding="utf-8")
    status = result.status
    print(f"ran {status['tick']} ticks, {len(result.trace_lines)} envelopes")
    for line in result.decision_lines:
        print(line)
    for entry in status["history"]:
        print(f"task {entry['task_name']} -> {entry['outcome']} (tick {entry['tick']})")
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_experiment_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    grid = run_keyword_experiment(cfg)
    report = render_report(grid)
    print(report.table)
    print(report.heatmap)
    if args.csv:
        Path(args.csv).write_text(report.csv, encoding="utf-8")
    else:
        print(report.csv, end="")
    return 0


def _cmd_serve(args) -> int:
    sim = Simulation(SystemConfig(seed=args.seed))
    service = OperatorService(sim, host=args.host, port=args.port, tick_hz=args.tick_hz)
    print(f"operator service on http://{args.host}:{service.port}", flush=True)
    service.serve_forever()
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
