"""Command-line entry point: ``optosync {simulate,sweep,render,presets}``.

Exit codes: 0 on success, 1 when a computation fails (divergence or an
unphysical state), 2 for bad input (config, spec, CSV or arguments).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, DivergenceError, UnphysicalStateError
from .meanfield import write_trajectory_csv
from .measures import write_measures_csv
from .model import PRESETS, SystemConfig, apply_overrides, standard_config, validate
from .render import MEASURES, render_heatmap
from .simulation import simulate
from .sweep import WORKERS_ENV, load_sweep_spec, run_sweep, summarize, write_sweep_csv

__all__ = ["main", "build_parser", "load_config", "parse_overrides"]


def parse_overrides(items: list[str] | None) -> dict:
    """Turn ``["bath.n_th=10", ...]`` into a dict; values are parsed as JSON when possible."""
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def load_config(path, overrides: dict | None = None) -> SystemConfig:
    """Parse a config file (or ``preset:NAME``), apply overrides, then validate."""
    path = str(path)
    if path.startswith("preset:"):
        doc = standard_config(path.split(":", 1)[1]).to_dict()
    else:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if overrides:
        doc = apply_overrides(doc, overrides)
    config = SystemConfig.from_dict(doc)
    report = validate(config)
    if not report.ok:
        raise ConfigError("invalid config: " + "; ".join(report.messages()))
    return config


def _fmt(x) -> str:
    return f"{x:.10g}"


def cmd_simulate(args) -> int:
    config = load_config(args.config, parse_overrides(args.set))
    res = simulate(config)
    out = Path(args.out)
    write_trajectory_csv(res.trajectory, out / "trajectory.csv")
    write_measures_csv(res.series, out / "measures.csv", verbose=args.verbose)
    a = res.averages
    print(f"mean_Sp {_fmt(a.mean_Sp)}")
    print(f"mean_DG {_fmt(a.mean_DG)}")
    print(f"mean_EN {_fmt(a.mean_EN)}")
    print(f"window [{_fmt(a.t_start)}, {_fmt(a.t_stop)}] converged={str(res.converged).lower()} "
          f"physical={str(res.physical).lower()}")
    if args.verbose:
        period = res.trajectory.period_estimate
        print(f"transient_end {res.trajectory.transient_end} period {period}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config, parse_overrides(args.set))
    try:
        text = Path(args.spec).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read spec {args.spec}: {exc.strerror}") from None
    spec = load_sweep_spec(config, text)

    def progress(done, total):
        print(f"\r{done}/{total}", end="" if done < total else "\n", file=sys.stderr, flush=True)

    records = run_sweep(spec, workers=args.workers, progress=progress if args.verbose else None)
    write_sweep_csv(records, args.out)
    n1, n2 = spec.axis1.name, spec.axis2.name
    failed = sum(r.error is not None for r in records)
    print(f"{len(records)} points ({failed} failed)")
    for measure, info in summarize(records).items():
        if info["min"] is None:
            print(f"{measure}: no finite values")
            continue
        (x1, y1), (x2, y2) = info["argmin"], info["argmax"]
        print(f"{measure}: min {_fmt(info['min'])} at {n1}={x1!r} {n2}={y1!r}; "
              f"max {_fmt(info['max'])} at {n1}={x2!r} {n2}={y2!r}")
    return 0


def cmd_render(args) -> int:
    side = render_heatmap(args.input, args.measure, args.out)
    print(side.read_text(encoding="utf-8"), end="")
    return 0


def cmd_presets(args) -> int:
    for name in PRESETS:
        report = validate(standard_config(name))
        if not report.ok:  # pragma: no cover - presets are tested to validate
            raise ConfigError(f"preset {name} fails validation")
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optosync", description="Quantum synchronization of coupled optomechanical oscillators.")
    p.add_argument("-v", "--verbose", action="store_true", help="extra diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one configuration")
    s.add_argument("--config", required=True, help="config JSON path or preset:NAME")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted-path override, repeatable")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a 2-D parameter grid")
    w.add_argument("--config", required=True)
    w.add_argument("--spec", required=True, help="sweep spec JSON")
    w.add_argument("--set", action="append", metavar="KEY=VALUE")
    w.add_argument("--out", required=True, help="output CSV")
    w.add_argument("--workers", type=int, default=None, help=f"worker processes (env {WORKERS_ENV} wins)")
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("render", help="heatmap of a sweep CSV")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--measure", required=True, choices=sorted(MEASURES))
    r.add_argument("--out", required=True, help="image path (.png or .ppm)")
    r.set_defaults(func=cmd_render)

    ps = sub.add_parser("presets", help="list built-in presets")
    ps.set_defaults(func=cmd_presets)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, UnphysicalStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
