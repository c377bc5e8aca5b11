"""Experiment orchestration: single runs, coupling sweeps, model comparisons.

Outputs are flat CSV or JSON files. Floats are written with ``repr`` so a
repeated run of the same config produces byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig
from .engine import RECORD_FIELDS, CollisionRecord, run, run_distances
from .measures import blp_accumulate, blp_maximize, is_saturated, saturation_index
from .model import Consecutive

log = logging.getLogger(__name__)

SATURATION_CAP = 320_000


class OutputError(RuntimeError):
    """Writing a result file failed."""


# --- serialization ---------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def rows_to_json(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    objs = [dict(zip(header, (_json_value(v) for v in row))) for row in rows]
    return json.dumps(objs, indent=1) + "\n"


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def render(header, rows, fmt: str) -> str:
    rows = list(rows)
    if fmt == "csv":
        return rows_to_csv(header, rows)
    if fmt == "json":
        return rows_to_json(header, rows)
    raise ValueError(f"unknown format {fmt!r}")


def write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def records_text(records: Sequence[CollisionRecord], fmt: str = "csv") -> str:
    return render(RECORD_FIELDS, (r.as_tuple() for r in records), fmt)


def read_records_csv(path) -> np.ndarray:
    """Parse a record CSV back into a float array (header checked)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_FIELDS:
            raise ValueError(f"{path}: unexpected header {header}")
        return np.array([[float(x) for x in row] for row in reader], dtype=float)


# --- single runs -----------------------------------------------------------


def run_experiment(config: ExperimentConfig) -> list[CollisionRecord]:
    """Run one configuration and write its records to ``config.output`` if set."""
    records = run(config)
    if config.output:
        write_text(config.output, records_text(records, config.format))
        log.info("wrote %d records to %s", len(records), config.output)
    return records


def consecutive_separate(config: ExperimentConfig) -> list[CollisionRecord]:
    """Run a staged environment coupling; stages must be ordered by range."""
    if not isinstance(config.env_model, Consecutive):
        raise ConfigError([f"env_model: consecutive run needs staged couplings, got {config.env_model}"])
    return run_experiment(config)


def maximize_pair(config: ExperimentConfig, grid) -> ExperimentConfig:
    """Config with ``initial_pair`` replaced by the grid pair of largest backflow."""
    n, pair = blp_maximize(config, grid)
    log.info("best initial pair %s with N = %.6g", pair, n)
    return config.with_(initial_pair=pair)


# --- saturation ------------------------------------------------------------


@dataclass(frozen=True)
class SaturatedN:
    N: float
    saturation_index: int
    collisions: int
    saturated: bool


def saturated_N(config: ExperimentConfig, cap: Optional[int] = None) -> SaturatedN:
    """Backflow run until the trailing increments settle.

    Starts at ``config.collisions`` and doubles the horizon until the last 100
    increments are all below 1e-8 or ``cap`` collisions have been spent.
    """
    n = int(config.collisions)
    cap = max(n, cap if cap is not None else SATURATION_CAP)
    while True:
        d = run_distances(config.with_(collisions=n))
        N, inc = blp_accumulate(d)
        sat = is_saturated(inc)
        if sat or n >= cap:
            if not sat:
                log.warning("%s at g_ee=%r not saturated after %d collisions",
                            config.env_model, config.g_ee, n)
            return SaturatedN(N, saturation_index(inc), n, sat)
        n = min(2 * n, cap)


def _map(fn, items, workers):
    items = list(items)
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _sat_task(args):
    config, cap = args
    return saturated_N(config, cap)


# --- sweeps ----------------------------------------------------------------

SWEEP_FIELDS = ("g_ee", "N", "saturation_index", "collisions", "saturated")


@dataclass(frozen=True)
class SweepResult:
    grid: np.ndarray
    points: tuple[SaturatedN, ...]

    @property
    def N(self) -> np.ndarray:
        return np.array([p.N for p in self.points])

    @property
    def argmax(self) -> float:
        return float(self.grid[int(np.argmax(self.N))])

    def rows(self):
        for g, p in zip(self.grid, self.points):
            yield (float(g), p.N, p.saturation_index, p.collisions, p.saturated)

    def text(self, fmt: str = "csv") -> str:
        if fmt == "json":
            body = {
                "points": [dict(zip(SWEEP_FIELDS, map(_json_value, r))) for r in self.rows()],
                "argmax": self.argmax,
                "N_max": float(np.max(self.N)),
            }
            return json.dumps(body, indent=1) + "\n"
        return render(SWEEP_FIELDS, self.rows(), fmt)


def run_sweep(config: ExperimentConfig, *, cap: Optional[int] = None,
              per_point_dir=None) -> SweepResult:
    """Saturated backflow on the ``g_ee`` grid of ``config.sweep``.

    Grid points are independent and evaluated across ``config.workers``
    processes. ``per_point_dir`` additionally writes the full records of each
    point at the saturating horizon.
    """
    if config.sweep is None:
        raise ConfigError(["sweep: g_ee_min, g_ee_max and sweep_steps are required"])
    grid = config.sweep.grid()
    base = config.with_(sweep=None, output=None)
    tasks = [(base.with_(g_ee=float(g)), cap) for g in grid]
    points = tuple(_map(_sat_task, tasks, config.workers))
    res = SweepResult(grid, points)
    if config.output:
        write_text(config.output, res.text(config.format))
    if per_point_dir is not None:
        out = Path(per_point_dir)
        for i, ((cfg, _), p) in enumerate(zip(tasks, points)):
            records = run(cfg.with_(collisions=p.collisions))
            write_text(out / f"point_{i:03d}.{config.format}", records_text(records, config.format))
    log.info("sweep argmax g_ee=%r", res.argmax)
    return res


# --- model comparison ------------------------------------------------------

COMPARE_FIELDS = ("rank", "env_model", "g_ee", "N", "saturation_index", "collisions", "saturated")


@dataclass(frozen=True)
class Comparison:
    configs: tuple[ExperimentConfig, ...]
    points: tuple[SaturatedN, ...]

    def order(self) -> list[int]:
        """Indices of the configs by decreasing saturated N."""
        return sorted(range(len(self.points)), key=lambda i: -self.points[i].N)

    def ranking(self) -> str:
        return " > ".join(
            f"{self.configs[i].env_model}@{self.configs[i].g_ee:.6g}" for i in self.order()
        )

    def rows(self):
        for rank, i in enumerate(self.order(), 1):
            c, p = self.configs[i], self.points[i]
            yield (rank, str(c.env_model), float(c.g_ee), p.N, p.saturation_index,
                   p.collisions, p.saturated)

    def text(self, fmt: str = "csv") -> str:
        return render(COMPARE_FIELDS, self.rows(), fmt)


def compare_models(configs: Sequence[ExperimentConfig], *, cap: Optional[int] = None,
                   workers: Optional[int] = None) -> Comparison:
    """Run each config to saturation and rank them by backflow."""
    configs = tuple(configs)
    if len(configs) < 2:
        raise ConfigError(["compare: at least two configurations are required"])
    points = tuple(_map(_sat_task, [(c, cap) for c in configs], workers))
    return Comparison(configs, points)
