"""Two-dimensional parameter sweeps of the time-averaged measures."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .errors import ConfigError, DivergenceError, UnphysicalStateError
from .model import Bidirectional, SystemConfig, Unidirectional, apply_overrides, validate
from .simulation import simulate
from .util import atomic_write

__all__ = [
    "AXES",
    "SweepAxis",
    "SweepSpec",
    "SweepRecord",
    "GridPoint",
    "expand",
    "run_sweep",
    "evaluate_point",
    "write_sweep_csv",
    "read_sweep_csv",
    "summarize",
    "load_sweep_spec",
    "CSV_COLUMNS",
]

AXES = ("delta", "lambda_over_kappa", "eta", "n_th")
CSV_COLUMNS = (
    "axis1_name", "axis1_value", "axis2_name", "axis2_value",
    "mean_Sp", "mean_DG", "mean_EN", "converged", "physical",
)
WORKERS_ENV = "OPTOSYNC_WORKERS"


@dataclass(frozen=True)
class SweepAxis:
    name: str
    min: float
    max: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepSpec:
    base: SystemConfig
    axis1: SweepAxis
    axis2: SweepAxis
    workers: int = 1


@dataclass(frozen=True)
class GridPoint:
    i: int
    j: int
    value1: float
    value2: float
    config: SystemConfig


@dataclass
class SweepRecord:
    axis1_name: str
    axis1_value: float
    axis2_name: str
    axis2_value: float
    mean_Sp: float
    mean_DG: float
    mean_EN: float
    converged: bool
    physical: bool
    runtime_seconds: float = 0.0
    error: str | None = None


def _check_axis(axis: SweepAxis, base: SystemConfig) -> None:
    if axis.name not in AXES:
        raise ConfigError(f"unknown sweep parameter {axis.name!r}; valid: {', '.join(AXES)}")
    if axis.count < 2:
        raise ConfigError(f"{axis.name}: count must be >= 2")
    if not (math.isfinite(axis.min) and math.isfinite(axis.max) and axis.min < axis.max):
        raise ConfigError(f"{axis.name}: need finite min < max")
    if axis.name == "eta" and not isinstance(base.topology, Unidirectional):
        raise ConfigError("eta not applicable to a bidirectional topology")
    if axis.name == "lambda_over_kappa" and not isinstance(base.topology, Bidirectional):
        raise ConfigError("lambda_over_kappa not applicable to a unidirectional topology")


def _apply(config: SystemConfig, name: str, value: float) -> SystemConfig:
    value = float(value)
    if name == "delta":
        return replace(config, right=replace(config.right, omega_m=config.left.omega_m + value))
    if name == "lambda_over_kappa":
        return replace(config, topology=replace(config.topology, lam=value * config.left.kappa))
    if name == "eta":
        return replace(config, topology=replace(config.topology, eta=value))
    if name == "n_th":
        return replace(config, bath=replace(config.bath, n_th=value))
    raise ConfigError(f"unknown sweep parameter {name!r}")


def expand(spec: SweepSpec) -> list[GridPoint]:
    """Grid points in row-major order (axis1 outer, axis2 inner)."""
    _check_axis(spec.axis1, spec.base)
    _check_axis(spec.axis2, spec.base)
    if spec.axis1.name == spec.axis2.name:
        raise ConfigError("the two sweep axes must differ")
    points = []
    for i, v1 in enumerate(spec.axis1.values()):
        for j, v2 in enumerate(spec.axis2.values()):
            cfg = _apply(_apply(spec.base, spec.axis1.name, v1), spec.axis2.name, v2)
            report = validate(cfg)
            if not report.ok:
                raise ConfigError(f"grid point ({v1}, {v2}) invalid: {report.violations[0]}")
            points.append(GridPoint(i, j, float(v1), float(v2), cfg))
    return points


def evaluate_point(config: SystemConfig) -> tuple[float, float, float, bool, bool, float, str | None]:
    """Run one grid point; failures become NaN measures instead of raising."""
    t0 = time.perf_counter()
    try:
        res = simulate(config)
        avg = res.averages
        out = (avg.mean_Sp, avg.mean_DG, avg.mean_EN, res.converged, res.physical, None)
    except (DivergenceError, UnphysicalStateError, FloatingPointError, ValueError) as exc:
        nan = float("nan")
        out = (nan, nan, nan, False, False, f"{type(exc).__name__}: {exc}")
    return out[:5] + (time.perf_counter() - t0, out[5])


def _worker_count(spec: SweepSpec, workers: int | None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, workers if workers is not None else spec.workers)


def run_sweep(spec: SweepSpec, workers: int | None = None, progress=None) -> list[SweepRecord]:
    """Evaluate every grid point; output order is row-major regardless of scheduling.

    The worker count comes from ``OPTOSYNC_WORKERS`` when set, then the
    ``workers`` argument, then ``spec.workers``.
    """
    points = expand(spec)
    n_workers = _worker_count(spec, workers)
    slots: list[Any] = [None] * len(points)
    configs = [p.config for p in points]
    if n_workers == 1:
        for k, cfg in enumerate(configs):
            slots[k] = evaluate_point(cfg)
            if progress:
                progress(k + 1, len(points))
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for k, result in enumerate(pool.map(evaluate_point, configs, chunksize=1)):
                slots[k] = result
                if progress:
                    progress(k + 1, len(points))
    records = []
    for p, (sp, dg, en, conv, phys, runtime, err) in zip(points, slots):
        records.append(
            SweepRecord(spec.axis1.name, p.value1, spec.axis2.name, p.value2, sp, dg, en, conv, phys, runtime, err)
        )
    return records


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_sweep_csv(records: list[SweepRecord], path) -> None:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def _parse_bool(text, lineno):
    if text in ("true", "false"):
        return text == "true"
    raise ConfigError(f"line {lineno}: expected true/false, got {text!r}")


def read_sweep_csv(path) -> list[SweepRecord]:
    """Parse a sweep CSV; any malformed line raises with its line number."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ConfigError(f"line 1: header must be {','.join(CSV_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_COLUMNS):
                raise ConfigError(f"line {lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            try:
                nums = [float(row[k]) for k in (1, 3, 4, 5, 6)]
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from None
            records.append(
                SweepRecord(row[0], nums[0], row[2], nums[1], nums[2], nums[3], nums[4],
                            _parse_bool(row[7], lineno), _parse_bool(row[8], lineno))
            )
    if not records:
        raise ConfigError("sweep CSV has no data rows")
    return records


def summarize(records: list[SweepRecord]) -> dict[str, dict[str, Any]]:
    """Min/max of each measure and the grid coordinates where they occur."""
    out = {}
    for measure in ("mean_Sp", "mean_DG", "mean_EN"):
        vals = np.array([getattr(r, measure) for r in records], dtype=float)
        if np.all(np.isnan(vals)):
            out[measure] = {"min": None, "max": None}
            continue
        kmin, kmax = int(np.nanargmin(vals)), int(np.nanargmax(vals))
        out[measure] = {
            "min": float(vals[kmin]),
            "argmin": (records[kmin].axis1_value, records[kmin].axis2_value),
            "max": float(vals[kmax]),
            "argmax": (records[kmax].axis1_value, records[kmax].axis2_value),
        }
    return out


def load_sweep_spec(base: SystemConfig, text: str) -> SweepSpec:
    """Build a SweepSpec from a JSON document and a base config.

    The document holds ``axis1``/``axis2`` (name, min, max, count), an
    optional ``workers`` hint, and optional dotted-path ``set`` overrides
    applied to the base config.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sweep spec is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("sweep spec must be a mapping")
    overrides = doc.get("set") or {}
    if overrides:
        base = SystemConfig.from_dict(apply_overrides(base.to_dict(), overrides))

    def axis(key):
        try:
            a = doc[key]
            count = a["count"]
            if isinstance(count, bool) or not isinstance(count, int):
                raise ConfigError(f"{key}.count must be an integer")
            return SweepAxis(str(a["name"]), float(a["min"]), float(a["max"]), count)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"sweep spec {key} malformed: {exc}") from None

    spec = SweepSpec(base, axis("axis1"), axis("axis2"), int(doc.get("workers", 1)))
    expand(spec)  # validate eagerly
    return spec
