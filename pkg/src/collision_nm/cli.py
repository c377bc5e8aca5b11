"""Command-line entry point: ``collision-nm {run,sweep,compare,consecutive}``.

Flags mirror the fields of :class:`~collision_nm.config.ExperimentConfig`.
``--config FILE`` loads a flat JSON object first; flags given on the command
line override its keys. Exit status is 0 on success, 1 for invalid
configuration and 2 for runtime or numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from .config import ConfigError, config_from_mapping, load_config_file, parse_angle
from .engine import summarize
from .experiments import (
    OutputError,
    compare_models,
    consecutive_separate,
    maximize_pair,
    records_text,
    run_experiment,
    run_sweep,
    write_text,
)
from .linalg import LinalgError
from .measures import axis_pairs, bloch_pairs
from .model import ModelError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("collision_nm")

_CONFIG_FLAGS = (
    "g_se", "g_ee", "env_model", "collisions", "initial_pair", "env_init",
    "bound_mode", "mi_hook", "norm", "output", "format", "workers",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError([message])


def _common(p):
    p.add_argument("--config", metavar="PATH", help="flat JSON config file")
    p.add_argument("--g-se", help="system-environment coupling angle (radians, e.g. 0.05)")
    p.add_argument("--g-ee", help="environment coupling angle, e.g. 'pi/2' or '0.6*pi/2'")
    p.add_argument("--env-model", help="separate:J, collective:R or consecutive:J@G,...")
    p.add_argument("--collisions", type=int)
    p.add_argument("--initial-pair", help="two states, e.g. '+,-' or '0,1'")
    p.add_argument("--env-init", help="state of each fresh environment qubit")
    p.add_argument("--bound-mode", choices=("post_erasure", "pre_erasure"))
    p.add_argument("--mi-hook", choices=("pre_ee", "post_ee"))
    p.add_argument("--norm", choices=("trace", "operator"))
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", type=int, help="worker processes for independent runs")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="collision-nm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="single run, one record per collision")
    _common(p)
    p.add_argument("--pair-grid", help="pick the initial pair maximizing N: 'axes' or 'bloch:NT,NP'")

    p = sub.add_parser("sweep", help="saturated N over a g_ee grid")
    _common(p)
    p.add_argument("--g-ee-min")
    p.add_argument("--g-ee-max")
    p.add_argument("--sweep-steps", type=int)
    p.add_argument("--per-point-dir", help="also write full records for each grid point")
    p.add_argument("--max-collisions", type=int, help="horizon cap when extending to saturation")

    p = sub.add_parser("compare", help="rank models by saturated N")
    _common(p)
    p.add_argument("--model", action="append", default=[], metavar="MODEL[=G_EE]",
                   help="model to compare, optionally with its own g_ee; repeatable")
    p.add_argument("--max-collisions", type=int)

    p = sub.add_parser("consecutive", help="staged separate couplings within one collision")
    _common(p)
    p.add_argument("--stages", help="ordered stages 'J@G,J@G,...', e.g. '1@pi/2,2@pi/2'")
    return parser


def _mapping(args) -> dict:
    data = dict(load_config_file(args.config)) if args.config else {}
    for key in _CONFIG_FLAGS + ("g_ee_min", "g_ee_max", "sweep_steps"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    return data


def _pair_grid(text):
    if text == "axes":
        return axis_pairs()
    if text.startswith("bloch:"):
        try:
            nt, nph = (int(x) for x in text[6:].split(","))
        except ValueError:
            raise ConfigError([f"pair_grid: expected bloch:NT,NP, got {text!r}"]) from None
        return bloch_pairs(nt, nph)
    raise ConfigError([f"pair_grid: expected 'axes' or 'bloch:NT,NP', got {text!r}"])


def _emit(text: str, output: Optional[str]):
    if not output:
        sys.stdout.write(text)


def _cmd_run(args):
    config = config_from_mapping(_mapping(args))
    if args.pair_grid:
        config = maximize_pair(config, _pair_grid(args.pair_grid))
    records = run_experiment(config)
    _emit(records_text(records, config.format), config.output)
    s = summarize(records)
    log.info("N = %.10g, saturation index %d, saturated %s", s["N"], s["saturation_index"], s["saturated"])


def _cmd_consecutive(args):
    data = _mapping(args)
    if args.stages:
        data["env_model"] = "consecutive:" + args.stages
    config = config_from_mapping(data)
    records = consecutive_separate(config)
    _emit(records_text(records, config.format), config.output)


def _cmd_sweep(args):
    config = config_from_mapping(_mapping(args))
    if config.sweep is None:
        raise ConfigError(["sweep: --g-ee-min, --g-ee-max and --sweep-steps are required"])
    res = run_sweep(config, cap=args.max_collisions, per_point_dir=args.per_point_dir)
    _emit(res.text(config.format), config.output)
    sys.stderr.write(f"argmax g_ee = {res.argmax!r} (N = {float(np.max(res.N))!r})\n")


def _cmd_compare(args):
    data = _mapping(args)
    if len(args.model) < 2:
        raise ConfigError(["model: compare needs at least two --model entries"])
    configs, errors = [], []
    for item in args.model:
        model, _, g = item.partition("=")
        d = dict(data, env_model=model)
        if g:
            try:
                d["g_ee"] = parse_angle(g)
            except ValueError as exc:
                errors.append(f"model {item!r}: {exc}")
                continue
        try:
            configs.append(config_from_mapping(d))
        except ConfigError as exc:
            errors.extend(f"model {item!r}: {e}" for e in exc.errors)
    if errors:
        raise ConfigError(errors)
    result = compare_models(configs, cap=args.max_collisions, workers=configs[0].workers)
    text = result.text(configs[0].format)
    if configs[0].output:
        write_text(configs[0].output, text)
    _emit(text, configs[0].output)
    sys.stderr.write(f"ordering: {result.ranking()}\n")


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "consecutive": _cmd_consecutive,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _COMMANDS[args.command](args)
    except (ConfigError, ModelError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except (OutputError, LinalgError, np.linalg.LinAlgError, FloatingPointError,
            ArithmeticError, RuntimeError, ValueError) as exc:
        sys.stderr.write(f"runtime error: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
