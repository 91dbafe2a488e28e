"""Command-line frontend: config files, scenario runs, policy sweeps and
CSV export for plotting.

The config file is JSON with ``//`` line comments allowed, split into the
sections ``cells`` (a list), ``converter``, ``charger``, ``controller`` and
``run``.  Any omitted key falls back to the package default; an empty file
(or no ``--config`` at all) therefore runs the stock four-cell scenario.
``--set section.key=value`` overrides individual entries after the file is
read; a key without a dot is taken from the ``run`` section.

Exit codes: 0 success, 2 user/config error, 3 internal fault.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import csv
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .controller import ControllerConfig
from .ecm import CellParams, CellState, representative_cell_params
from .flyback import ConverterParams
from .harness import (
    ChargerConfig,
    ScenarioConfig,
    Summary,
    TraceRecord,
    run_scenario,
)
from . import rls
from .rls import build_regressor


class ConfigError(Exception):
    """User-facing configuration problem; maps to exit code 2."""


class TraceFormatError(Exception):
    """Malformed trace file; the message names the offending line."""


# -- config handling ---------------------------------------------------------

DEFAULT_SOCS = (0.60, 0.50, 0.45, 0.40)

_RUN_KEYS = (
    "policy",
    "forgetting_factor",
    "initial_covariance",
    "warm_start",
    "noise_std",
    "seed",
    "max_time",
    "record_every",
    "idle_dt",
)

# field -> coercion kind, per section
_CELL_FIELDS = {
    "soc": "float",
    "v1": "float",
    "v2": "float",
    "capacity_coulombs": "float",
    "series_resistance": "float",
    "rc1_resistance": "float",
    "rc1_capacitance": "float",
    "rc2_resistance": "float",
    "rc2_capacitance": "float",
    "ocv_coeffs": "floatlist5",
    "ocv_exponent": "float",
    "v_min": "float",
    "v_max": "float",
    "self_discharge_resistance": "float_or_null",
}
_CONVERTER_FIELDS = {
    "magnetizing_inductance": "float",
    "turns_primary": "int",
    "turns_secondary": "int",
    "peak_current": "float",
}
_CHARGER_FIELDS = {
    "mode": "str",
    "cc_current": "float",
    "cv_voltage": "float",
    "cutoff_current": "float",
    "cell_voltage_limit": "float",
}
_CONTROLLER_FIELDS = {
    "gap_threshold": "float",
    "prediction_source": "str",
    "include_charger": "bool",
}
_RUN_FIELDS = {
    "policy": "str",
    "policies": "strlist",
    "forgetting_factor": "float",
    "initial_covariance": "float",
    "warm_start": "bool",
    "noise_std": "float",
    "seed": "int",
    "max_time": "float",
    "record_every": "int",
    "idle_dt": "float",
}


def strip_json_comments(text: str) -> str:
    """Drop ``//`` comments outside string literals; JSON otherwise."""
    out: list[str] = []
    i, n = 0, len(text)
    in_str = False
    escaped = False
    while i < n:
        c = text[i]
        if in_str:
            out.append(c)
            if escaped:
                escaped = False
            elif c == "\\":
                escaped = True
            elif c == '"':
                in_str = False
            i += 1
        elif c == '"':
            in_str = True
            out.append(c)
            i += 1
        elif c == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
        else:
            out.append(c)
            i += 1
    return "".join(out)


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(strip_json_comments(p.read_text()))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {p} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {p} must contain a JSON object at top level")
    return data


def apply_overrides(raw: dict, assignments: Sequence[str]) -> dict:
    """Apply ``--set key=value`` pairs onto the raw config structure.

    Dotted keys walk sections and list indices (``cells.0.soc=0.5``); a bare
    key is shorthand for the ``run`` section.  Values are parsed as JSON and
    fall back to a literal string, so ``policy=greedy`` works unquoted.
    """
    cfg = copy.deepcopy(raw)
    for item in assignments:
        key, sep, value_text = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        try:
            value = json.loads(value_text)
        except json.JSONDecodeError:
            value = value_text
        parts = key.split(".")
        if len(parts) == 1:
            parts = ["run", parts[0]]
        node: Any = cfg
        for depth, part in enumerate(parts[:-1]):
            if isinstance(node, dict):
                node = node.setdefault(part, [] if parts[depth + 1].isdigit() else {})
            elif isinstance(node, list):
                try:
                    node = node[int(part)]
                except (ValueError, IndexError):
                    raise ConfigError(f"--set {key}: bad list index {part!r}") from None
            else:
                raise ConfigError(f"--set {key}: {'.'.join(parts[:depth])} is not a container")
        leaf = parts[-1]
        if isinstance(node, dict):
            node[leaf] = value
        elif isinstance(node, list):
            try:
                idx = int(leaf)
            except ValueError:
                raise ConfigError(f"--set {key}: bad list index {leaf!r}") from None
            if not 0 <= idx < len(node):
                raise ConfigError(f"--set {key}: index {idx} out of range")
            node[idx] = value
        else:
            raise ConfigError(f"--set {key}: target is not a container")
    return cfg


def _coerce(kind: str, value: Any, where: str) -> Any:
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    if kind == "float_or_null":
        if value is None:
            return None
        return _coerce("float", value, where)
    if kind == "floatlist5":
        if not isinstance(value, list) or len(value) != 5:
            raise ConfigError(f"{where} must be a list of 5 numbers")
        return [_coerce("float", v, where) for v in value]
    if kind == "strlist":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{where} must be a list of strings")
        return list(value)
    raise AssertionError(kind)


def _merge_section(name: str, schema: dict, defaults: dict, given: Any) -> dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"section {name!r} must be an object")
    for key in given:
        if key not in schema:
            raise ConfigError(f"unknown key {name}.{key}")
    out = {}
    for key, kind in schema.items():
        value = given.get(key, defaults[key])
        out[key] = _coerce(kind, value, f"{name}.{key}")
    return out


def _default_cell_entry() -> dict:
    p = representative_cell_params()
    return {
        "soc": 0.5,
        "v1": 0.0,
        "v2": 0.0,
        "capacity_coulombs": p.capacity_coulombs,
        "series_resistance": p.series_resistance,
        "rc1_resistance": p.rc1_resistance,
        "rc1_capacitance": p.rc1_capacitance,
        "rc2_resistance": p.rc2_resistance,
        "rc2_capacitance": p.rc2_capacitance,
        "ocv_coeffs": list(p.ocv_coeffs),
        "ocv_exponent": p.ocv_exponent,
        "v_min": p.v_min,
        "v_max": p.v_max,
        "self_discharge_resistance": p.self_discharge_resistance,
    }


def _run_defaults() -> dict:
    out = {
        f.name: f.default
        for f in dataclasses.fields(ScenarioConfig)
        if f.name in _RUN_KEYS
    }
    out["policies"] = ["ampc", "greedy"]
    return out


def effective_config(raw: dict) -> dict:
    """Fill every default in, coercing types; the result round-trips through
    JSON to an identical structure."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {"cells", "converter", "charger", "controller", "run"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config section {key!r}")

    cells_raw = raw.get("cells")
    if cells_raw is None:
        cells_raw = [{"soc": s} for s in DEFAULT_SOCS]
    if not isinstance(cells_raw, list):
        raise ConfigError("section 'cells' must be a list")
    cells = []
    for i, entry in enumerate(cells_raw):
        cells.append(
            _merge_section(f"cells[{i}]", _CELL_FIELDS, _default_cell_entry(), entry)
        )

    conv_defaults = {
        "magnetizing_inductance": 0.01,
        "turns_primary": 1,
        "turns_secondary": 4,
        "peak_current": 5.0,
    }
    chg = ChargerConfig()
    ctl = ControllerConfig()
    return {
        "cells": cells,
        "converter": _merge_section(
            "converter", _CONVERTER_FIELDS, conv_defaults, raw.get("converter")
        ),
        "charger": _merge_section(
            "charger",
            _CHARGER_FIELDS,
            dataclasses.asdict(chg),
            raw.get("charger"),
        ),
        "controller": _merge_section(
            "controller",
            _CONTROLLER_FIELDS,
            dataclasses.asdict(ctl),
            raw.get("controller"),
        ),
        "run": _merge_section("run", _RUN_FIELDS, _run_defaults(), raw.get("run")),
    }


def build_scenario(effective: dict, policy: str | None = None) -> ScenarioConfig:
    """Turn an effective config into a validated ScenarioConfig.

    ``policy`` overrides run.policy (used by sweep).  Domain validation
    lives in the dataclasses; violations surface as ConfigError.
    """
    try:
        cells = []
        for entry in effective["cells"]:
            kwargs = {k: v for k, v in entry.items() if k not in ("soc", "v1", "v2")}
            kwargs["ocv_coeffs"] = tuple(kwargs["ocv_coeffs"])
            params = CellParams(**kwargs)
            state = CellState(soc=entry["soc"], v1=entry["v1"], v2=entry["v2"])
            cells.append((params, state))
        conv = ConverterParams(n_cells=len(cells), **effective["converter"])
        charger = ChargerConfig(**effective["charger"])
        controller = ControllerConfig(**effective["controller"])
        run = effective["run"]
        return ScenarioConfig(
            cells=cells,
            converter=conv,
            charger=charger,
            policy=policy if policy is not None else run["policy"],
            controller=controller,
            forgetting_factor=run["forgetting_factor"],
            initial_covariance=run["initial_covariance"],
            warm_start=run["warm_start"],
            noise_std=run["noise_std"],
            seed=run["seed"],
            max_time=run["max_time"],
            record_every=run["record_every"],
            idle_dt=run["idle_dt"],
        )
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None


# -- trace CSV ---------------------------------------------------------------

def trace_header(n_cells: int) -> list[str]:
    cols = ["time_s", "cycle"]
    for k in range(1, n_cells + 1):
        cols += [f"soc_{k}", f"v_{k}", f"i_{k}", f"theta1_{k}", f"theta2_{k}", f"theta3_{k}"]
    cols += ["candidate_bits", "std_v", "charger_a"]
    return cols


def _fmt(x: float) -> str:
    # repr gives the shortest string that parses back to the same float
    return repr(float(x))


def write_trace(path: str | Path, trace: Sequence[TraceRecord], n_cells: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_header(n_cells))
        for r in trace:
            row: list[str] = [_fmt(r.time), str(r.cycle)]
            for k in range(n_cells):
                row += [
                    _fmt(r.soc[k]),
                    _fmt(r.voltage[k]),
                    _fmt(r.current[k]),
                    _fmt(r.theta[k][0]),
                    _fmt(r.theta[k][1]),
                    _fmt(r.theta[k][2]),
                ]
            row += [r.candidate_bits, _fmt(r.voltage_std), _fmt(r.charger_current)]
            w.writerow(row)


@dataclasses.dataclass
class TraceTable:
    """Parsed trace.csv contents, column-oriented."""

    n_cells: int
    time: list[float]
    cycle: list[int]
    soc: list[tuple[float, ...]]
    voltage: list[tuple[float, ...]]
    current: list[tuple[float, ...]]
    theta: list[tuple[tuple[float, float, float], ...]]
    candidate_bits: list[str]
    voltage_std: list[float]
    charger_current: list[float]

    def __len__(self) -> int:
        return len(self.time)


def read_trace(path: str | Path) -> TraceTable:
    p = Path(path)
    if not p.is_file():
        raise TraceFormatError(f"trace file not found: {p}")
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError(f"{p}: line 1: missing header") from None
        extra = len(header) - 5
        if extra < 6 or extra % 6 != 0:
            raise TraceFormatError(f"{p}: line 1: unrecognized column count {len(header)}")
        n_cells = extra // 6
        if header != trace_header(n_cells):
            raise TraceFormatError(f"{p}: line 1: header does not match the trace schema")
        table = TraceTable(n_cells, [], [], [], [], [], [], [], [], [])
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise TraceFormatError(
                    f"{p}: line {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                table.time.append(float(row[0]))
                table.cycle.append(int(row[1]))
                soc, volt, cur, theta = [], [], [], []
                for k in range(n_cells):
                    base = 2 + 6 * k
                    soc.append(float(row[base]))
                    volt.append(float(row[base + 1]))
                    cur.append(float(row[base + 2]))
                    theta.append(
                        (float(row[base + 3]), float(row[base + 4]), float(row[base + 5]))
                    )
                table.soc.append(tuple(soc))
                table.voltage.append(tuple(volt))
                table.current.append(tuple(cur))
                table.theta.append(tuple(theta))
                table.candidate_bits.append(row[-3])
                table.voltage_std.append(float(row[-2]))
                table.charger_current.append(float(row[-1]))
            except ValueError as e:
                raise TraceFormatError(f"{p}: line {line_no}: {e}") from None
    return table


def _summary_dict(summary: Summary) -> dict:
    return dataclasses.asdict(summary)


def write_summary(path: str | Path, summary: Summary) -> None:
    with open(path, "w") as fh:
        json.dump(_summary_dict(summary), fh, indent=2)
        fh.write("\n")


# -- commands ----------------------------------------------------------------

def _resolve_out(given: str | None, command: str) -> Path:
    if given is not None:
        out = Path(given)
    else:
        stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
        out = Path("runs") / f"{command}-{stamp}"
        suffix = 0
        while out.exists():
            suffix += 1
            out = Path("runs") / f"{command}-{stamp}-{suffix}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_effective(args: argparse.Namespace) -> dict:
    raw = load_config(args.config)
    raw = apply_overrides(raw, args.set)
    return effective_config(raw)


def cmd_simulate(args: argparse.Namespace) -> int:
    eff = _load_effective(args)
    scenario = build_scenario(eff)
    out = _resolve_out(args.out, "simulate")
    trace, summary = run_scenario(scenario)
    write_trace(out / "trace.csv", trace, len(scenario.cells))
    write_summary(out / "summary.json", summary)
    if args.dump_config:
        with open(out / "effective_config.json", "w") as fh:
            json.dump(eff, fh, indent=2)
            fh.write("\n")
    print(f"wrote {out / 'trace.csv'} ({len(trace)} rows) and {out / 'summary.json'}")
    return 0


_COMPARISON_COLUMNS = ["policy"] + [f.name for f in dataclasses.fields(Summary)]


def _run_one_policy(effective: dict, policy: str) -> tuple[list[TraceRecord], Summary]:
    return run_scenario(build_scenario(effective, policy=policy))


def cmd_sweep(args: argparse.Namespace) -> int:
    eff = _load_effective(args)
    policies = eff["run"]["policies"]
    if not policies:
        raise ConfigError("sweep needs a non-empty run.policies list")
    if len(set(policies)) != len(policies):
        raise ConfigError(f"duplicate policy names in run.policies: {policies}")
    for p in policies:
        if p not in ("ampc", "greedy", "none"):
            raise ConfigError(f"unknown policy {p!r} in run.policies")
    # fail fast on bad cell/converter configs before spawning workers
    build_scenario(eff, policy=policies[0])
    out = _resolve_out(args.out, "sweep")

    jobs = max(1, args.jobs)
    results: dict[str, tuple[list[TraceRecord], Summary]] = {}
    if jobs == 1 or len(policies) == 1:
        for p in policies:
            results[p] = _run_one_policy(eff, p)
    else:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=min(jobs, len(policies))
        ) as pool:
            futures = {p: pool.submit(_run_one_policy, eff, p) for p in policies}
            for p, fut in futures.items():
                results[p] = fut.result()

    n_cells = len(eff["cells"])
    for p in policies:
        sub = out / p
        sub.mkdir(exist_ok=True)
        trace, summary = results[p]
        write_trace(sub / "trace.csv", trace, n_cells)
        write_summary(sub / "summary.json", summary)

    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_COMPARISON_COLUMNS)
        for p in policies:
            summary = results[p][1]
            row = [p]
            for f in dataclasses.fields(Summary):
                value = getattr(summary, f.name)
                row.append("" if value is None else _fmt(value))
            w.writerow(row)
    if args.dump_config:
        with open(out / "effective_config.json", "w") as fh:
            json.dump(eff, fh, indent=2)
            fh.write("\n")
    print(f"wrote {out / 'comparison.csv'} ({len(policies)} policies)")
    return 0


_IDENT_COLUMNS = ["time_s", "cell", "theta1", "theta2", "theta3", "prediction_error_v"]


def replay_identification(
    table: TraceTable,
    capacities: Sequence[float],
    forgetting_factor: float,
    initial_covariance: float,
) -> list[tuple[float, int, float, float, float, float]]:
    """Re-run the estimator offline over a recorded trace.

    Every data row yields one update per cell; the reported error is the
    innovation (measured minus predicted) before that update.  Charge is
    re-integrated from the recorded interval currents, and the estimators
    start cold so the result depends only on the trace and the two tuning
    numbers.
    """
    if len(capacities) != table.n_cells:
        raise ConfigError(
            f"trace has {table.n_cells} cells but the config defines {len(capacities)}"
        )
    estimators = [
        rls.init(np.zeros(3), initial_covariance, forgetting_factor)
        for _ in range(table.n_cells)
    ]
    charge = [0.0] * table.n_cells
    rows = []
    prev_t = 0.0
    for k in range(len(table)):
        dt = table.time[k] - prev_t
        prev_t = table.time[k]
        for j in range(table.n_cells):
            i_j = table.current[k][j]
            charge[j] += i_j * dt
            x = build_regressor(i_j, charge[j], capacities[j])
            err = table.voltage[k][j] - rls.predict(estimators[j], x)
            estimators[j] = rls.update(estimators[j], x, table.voltage[k][j])
            th = estimators[j].theta
            rows.append((table.time[k], j + 1, float(th[0]), float(th[1]), float(th[2]), err))
    return rows


def cmd_identify(args: argparse.Namespace) -> int:
    if args.trace is None:
        raise ConfigError("identify requires --trace pointing at a trace.csv")
    table = read_trace(args.trace)
    if len(table) == 0:
        raise ConfigError(f"{args.trace}: trace has no data rows")
    eff = _load_effective(args)
    capacities = [c["capacity_coulombs"] for c in eff["cells"]]
    run = eff["run"]
    rows = replay_identification(
        table, capacities, run["forgetting_factor"], run["initial_covariance"]
    )
    out = _resolve_out(args.out, "identify")
    with open(out / "identification.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_IDENT_COLUMNS)
        for t, cell, t1, t2, t3, err in rows:
            w.writerow([_fmt(t), str(cell), _fmt(t1), _fmt(t2), _fmt(t3), _fmt(err)])
    final_err = max(abs(r[5]) for r in rows[-table.n_cells:])
    print(f"wrote {out / 'identification.csv'}; final |prediction error| {final_err:.3e} V")
    return 0


def cmd_export_plots(args: argparse.Namespace) -> int:
    if args.trace is None:
        raise ConfigError("export-plots requires --trace pointing at a trace.csv")
    table = read_trace(args.trace)
    if len(table) == 0:
        raise ConfigError(f"{args.trace}: trace has no data rows")
    out = _resolve_out(args.out, "export-plots")

    with open(out / "soc_vs_time.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "cell", "soc"])
        for k in range(len(table)):
            for j in range(table.n_cells):
                w.writerow([_fmt(table.time[k]), str(j + 1), _fmt(table.soc[k][j])])

    # balancing share of each cell's current; the charger part is common mode
    with open(out / "balancing_current_vs_time.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "cell", "current_a"])
        for k in range(len(table)):
            for j in range(table.n_cells):
                w.writerow(
                    [
                        _fmt(table.time[k]),
                        str(j + 1),
                        _fmt(table.current[k][j] - table.charger_current[k]),
                    ]
                )

    first = table.voltage[0]
    hi = max(range(table.n_cells), key=lambda j: (first[j], -j))
    lo = min(range(table.n_cells), key=lambda j: (first[j], j))
    with open(out / "extreme_voltages_vs_time.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "cell", "voltage_v"])
        for k in range(len(table)):
            for j in (hi, lo):
                w.writerow([_fmt(table.time[k]), str(j + 1), _fmt(table.voltage[k][j])])

    print(f"wrote 3 plot files to {out}")
    return 0


# -- entry point -------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellbal",
        description="Closed-loop cell balancing simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, trace: bool, dump: bool) -> None:
        p.add_argument("--config", help="JSON config file (// comments allowed)")
        p.add_argument("--out", help="output directory (default: timestamped under runs/)")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config entry, e.g. run.max_time=100 or cells.0.soc=0.5",
        )
        p.add_argument("--jobs", type=int, default=1, help="parallel runs (sweep only)")
        if trace:
            p.add_argument("--trace", help="input trace.csv to process")
        if dump:
            p.add_argument(
                "--dump-config",
                action="store_true",
                help="also write effective_config.json with every default filled in",
            )

    p_sim = sub.add_parser("simulate", help="run one scenario, write trace and summary")
    common(p_sim, trace=False, dump=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run each policy in run.policies, compare")
    common(p_sweep, trace=False, dump=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_ident = sub.add_parser("identify", help="replay the estimator over a trace")
    common(p_ident, trace=True, dump=False)
    p_ident.set_defaults(func=cmd_identify)

    p_plots = sub.add_parser("export-plots", help="emit tidy CSVs for plotting")
    common(p_plots, trace=True, dump=False)
    p_plots.set_defaults(func=cmd_export_plots)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - the contract pins exit code 3
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
