"""Command line driver: single runs, parameter sweeps, closed-form model
evaluation and config validation.

Exit status is 0 on success, 1 for a configuration error and 2 for a
runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .analytics.models import (
    AnalyticParams,
    ParamError,
    fork_probability,
    latency_model,
    tps,
)
from .analytics.reduce import NAN, MetricsReport, reduce_trace
from .analytics.report import summary_table, write_report
from .netsim.config import (
    PROTOCOLS,
    ConfigError,
    Scenario,
    dump_scenario,
    load_json,
    scenario_from_dict,
)
from .netsim.engine import run

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
DEFAULT_MAX_CELLS = 500


def bundled(name: str) -> Path:
    return Path(str(resources.files("bbpsim") / "data" / name))


# -- sweep config ------------------------------------------------------------------


@dataclass
class SweepConfig:
    scenario: Scenario
    protocols: list[str]
    n_t: list[int]
    seeds: list[int]
    max_cells: int = DEFAULT_MAX_CELLS
    extra: dict[str, Any] = field(default_factory=dict)

    def cells(self) -> list[Scenario]:
        return [self.scenario.replace(protocol=p, n_t=n, seed=s)
                for p, n, s in itertools.product(self.protocols, self.n_t, self.seeds)]


def _int_list(data: dict, key: str) -> list[int]:
    v = data.get(key)
    if not isinstance(v, list) or not v or not all(
            isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"sweep.{key}", "must be a non-empty list of integers")
    return v


def sweep_from_dict(data: dict) -> SweepConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = set(data) - {"scenario", "sweep"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    scenario = scenario_from_dict(data.get("scenario", {}))
    sw = data.get("sweep")
    if not isinstance(sw, dict):
        raise ConfigError("sweep", "missing sweep axes")
    unknown = set(sw) - {"protocols", "n_t", "seeds", "max_cells"}
    if unknown:
        raise ConfigError("sweep." + sorted(unknown)[0], "unknown key")
    protocols = sw.get("protocols")
    if not isinstance(protocols, list) or not protocols or \
            not all(p in PROTOCOLS for p in protocols):
        raise ConfigError("sweep.protocols", f"must be a non-empty list from {PROTOCOLS}")
    n_t = _int_list(sw, "n_t")
    if any(n < 0 for n in n_t):
        raise ConfigError("sweep.n_t", "values must be non-negative")
    seeds = _int_list(sw, "seeds")
    cap = sw.get("max_cells", DEFAULT_MAX_CELLS)
    if not isinstance(cap, int) or isinstance(cap, bool) or cap < 1:
        raise ConfigError("sweep.max_cells", "must be a positive integer")
    cfg = SweepConfig(scenario, list(protocols), n_t, seeds, cap)
    n = len(protocols) * len(n_t) * len(seeds)
    if n > cap:
        raise ConfigError("sweep.max_cells", f"sweep has {n} cells, cap is {cap}")
    return cfg


# -- model config ------------------------------------------------------------------

MODEL_KEYS = {"params", "grid", "t_l", "protocols"}


def model_rows(data: dict) -> tuple[list[str], list[list[str]]]:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = set(data) - MODEL_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    raw = data.get("params", {})
    names = set(AnalyticParams.__dataclass_fields__)
    for k in list(raw) + list(data.get("grid", {})):
        if k not in names:
            raise ConfigError(f"params.{k}", "unknown symbol")
    grid = data.get("grid", {})
    axes = sorted(grid)
    for k in axes:
        if not isinstance(grid[k], list) or not grid[k]:
            raise ConfigError(f"grid.{k}", "must be a non-empty list")
    protocols = data.get("protocols", list(PROTOCOLS))
    if not all(p in PROTOCOLS for p in protocols):
        raise ConfigError("protocols", f"must be drawn from {PROTOCOLS}")
    t_l = data.get("t_l")

    header = axes + ["tps"]
    if t_l is not None:
        header.append("fork_probability")
    for p in protocols:
        header += [f"{p}_ms", f"{p}_fork_probability"]
    rows = []
    for point in itertools.product(*(grid[k] for k in axes)) if axes else [()]:
        params = AnalyticParams(**{**raw, **dict(zip(axes, point))})
        row = [_num(v) for v in point]
        t_g = params.need("t_g")[0]
        n_t = params.n_t
        row.append(_num(tps(n_t, t_g / 1000.0)) if n_t is not None else "nan")
        if t_l is not None:
            row.append(_num(fork_probability(float(t_l), t_g)))
        for p in protocols:
            ms = latency_model(p, params)
            row += [_num(ms), _num(fork_probability(ms, t_g))]
        rows.append(row)
    return header, rows


def _num(v) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else f"{v:.6f}"


# -- commands ----------------------------------------------------------------------


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _run_cell(scenario: Scenario, out_dir: Path | None) -> MetricsReport:
    trace = run(scenario)
    if out_dir is not None:
        trace.write(out_dir)
    return reduce_trace(trace)


def _failed_row(s: Scenario, err: Exception) -> MetricsReport:
    msg = " ".join(str(err).split())[:200]
    return MetricsReport(s.protocol, s.n_t, s.seed, NAN, NAN, NAN, NAN, NAN, NAN, 0, NAN,
                         status=f"error: {type(err).__name__}: {msg}")


def _safe_cell(job: tuple[Scenario, str | None]) -> MetricsReport:
    scenario, out = job
    try:
        return _run_cell(scenario, Path(out) if out else None)
    except Exception as exc:    # a failed cell is reported, the sweep goes on
        return _failed_row(scenario, exc)


def _scenario_data(args) -> dict:
    path = args.config or bundled("default_scenario.json")
    return load_json(path)


def cmd_run(args) -> int:
    s = scenario_from_dict(_scenario_data(args))
    if args.seed is not None:
        s = s.replace(seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.json").write_text(dump_scenario(s))
    report = _run_cell(s, out)
    write_report([report], out / "report.csv")
    _say(args, summary_table([report]))
    return EXIT_OK


def cmd_sweep(args) -> int:
    path = args.config or bundled("sweep_default.json")
    cfg = sweep_from_dict(load_json(path))
    if args.seed is not None:
        cfg.seeds = [args.seed]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    echo = {"scenario": json.loads(dump_scenario(cfg.scenario)),
            "sweep": {"protocols": cfg.protocols, "n_t": cfg.n_t, "seeds": cfg.seeds,
                      "max_cells": cfg.max_cells}}
    (out / "effective_config.json").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")
    cells = cfg.cells()
    jobs = [(c, str(out / "cells" / f"{c.protocol}_nt{c.n_t}_seed{c.seed}")
             if args.traces else None) for c in cells]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_safe_cell, jobs))
    else:
        reports = []
        for job in jobs:
            reports.append(_safe_cell(job))
            _say(args, f"  {job[0].protocol} n_t={job[0].n_t} seed={job[0].seed}: "
                       f"{reports[-1].status}")
    order = {p: i for i, p in enumerate(PROTOCOLS)}
    reports.sort(key=lambda r: (order[r.protocol], r.n_t, r.seed))
    write_report(reports, out / "report.csv")
    _say(args, summary_table(reports))
    return EXIT_OK if all(r.status == "ok" for r in reports) else EXIT_RUNTIME


def cmd_model(args) -> int:
    path = args.config or bundled("model_params.json")
    header, rows = model_rows(load_json(path))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "model.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    if not args.quiet:
        widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
        print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
        for r in rows:
            print("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return EXIT_OK


def cmd_validate(args) -> int:
    if not args.config:
        raise ConfigError("--config", "a config file is required")
    data = load_json(args.config)
    kind = args.kind
    if kind == "auto":
        kind = ("sweep" if isinstance(data, dict) and "sweep" in data else
                "model" if isinstance(data, dict) and "params" in data else "scenario")
    if kind == "sweep":
        cfg = sweep_from_dict(data)
        _say(args, f"ok: sweep with {len(cfg.cells())} cells")
    elif kind == "model":
        model_rows(data)
        _say(args, "ok: model parameters")
    else:
        scenario_from_dict(data)
        _say(args, "ok: scenario")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbpsim", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required: bool) -> None:
        p.add_argument("--config", metavar="PATH", help="JSON config (bundled default if omitted)")
        p.add_argument("--out", metavar="DIR", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--quiet", action="store_true", help="print nothing on success")

    p = sub.add_parser("run", help="run one scenario")
    common(p, True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run protocol x n_t x seed cells")
    common(p, True)
    p.add_argument("--jobs", type=int, default=1, help="cells to run in parallel")
    p.add_argument("--traces", action="store_true", help="also keep per-cell trace CSVs")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("model", help="evaluate the closed-form models")
    common(p, False)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("validate-config", help="check a config file and exit")
    common(p, False)
    p.add_argument("--kind", choices=("auto", "scenario", "sweep", "model"), default="auto")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParamError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
