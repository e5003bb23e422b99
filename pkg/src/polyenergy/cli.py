"""Command-line front end.

Exit codes: 0 success, 1 analyzer/simulator mismatch, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import sys
import time
from importlib import resources
from pathlib import Path

from .analysis import AnalysisError, CompiledReport, EvaluationError, analyze
from .dsl import DSLError, parse_pra
from .energy import CLASSES, EnergyError, load_energy_table
from .mapping import MappingError, load_mapping
from .polycount import CountingError
from .schedule import ScheduleError
from .sim import SimulationError, compare, simulate
from .tiling import TilingError, tile_program

log = logging.getLogger("polyenergy")

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2

INPUT_ERRORS = (
    DSLError,
    MappingError,
    AnalysisError,
    EvaluationError,
    SimulationError,
    EnergyError,
    TilingError,
    ScheduleError,
    CountingError,
    OSError,
    json.JSONDecodeError,
)


class UsageError(ValueError):
    pass


# argument helpers ------------------------------------------------------------


def benchmark_dir() -> Path:
    return Path(str(resources.files("polyenergy").joinpath("benchmarks")))


def resolve(path: str, suffix: str) -> Path:
    """A file path, or the name of a shipped benchmark file."""
    p = Path(path)
    if p.exists():
        return p
    for cand in (benchmark_dir() / path, benchmark_dir() / (path + suffix)):
        if cand.exists():
            return cand
    raise UsageError(f"no such file: {path}")


def parse_bindings(text: str | None) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"bad binding {item!r}, expected NAME=INT")
        try:
            out[key.strip()] = int(value)
        except ValueError:
            raise UsageError(f"binding {key.strip()} must be an integer, got {value!r}") from None
    return out


def parse_sweep(text: str) -> list[dict]:
    """``N0:N1=8,16;N2=4`` -> cartesian product over ``;``-separated axes,
    names joined by ``:`` move together."""
    axes = []
    for axis in text.split(";"):
        axis = axis.strip()
        if not axis:
            continue
        names, sep, values = axis.partition("=")
        if not sep:
            raise UsageError(f"bad sweep axis {axis!r}, expected NAMES=V1,V2,...")
        names = [n.strip() for n in names.split(":") if n.strip()]
        try:
            vals = [int(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"sweep values must be integers in {axis!r}") from None
        if not names or not vals:
            raise UsageError(f"empty sweep axis {axis!r}")
        axes.append([{n: v for n in names} for v in vals])
    if not axes:
        raise UsageError("empty sweep specification")
    points = []
    for combo in itertools.product(*axes):
        env = {}
        for part in combo:
            env.update(part)
        points.append(env)
    return points


def _inputs(args):
    program_arg = args.program or args.program_pos
    mapping_arg = args.mapping or args.mapping_pos
    if not program_arg or not mapping_arg:
        raise UsageError("a program and a mapping are required")
    ppath = resolve(program_arg, ".pra")
    mpath = resolve(mapping_arg, ".map")
    program = parse_pra(ppath.read_text(encoding="utf-8"))
    mapping = load_mapping(mpath)
    table = load_energy_table(args.energy_table or mapping.energy_path)
    return program, mapping, table


def _emit(args, data) -> None:
    text = data if isinstance(data, str) else json.dumps(data, indent=2, sort_keys=False) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _flat_csv(counts: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "key", "value"])
    for section in ("statements", "classes", "ops", "class_energy_fJ", "op_energy_fJ"):
        for k, v in counts.get(section, {}).items():
            w.writerow([section, k, v])
    for key in ("energy_fJ", "latency"):
        if counts.get(key) is not None:
            w.writerow(["total", key, counts[key]])
    return buf.getvalue()


def _emit_counts(args, counts: dict) -> None:
    _emit(args, _flat_csv(counts) if args.format == "csv" else counts)


# commands ------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    program, mapping, table = _inputs(args)
    a = analyze(program, mapping, table)
    report = a.to_json()
    bindings = parse_bindings(args.bind)
    if bindings:
        report["concrete"] = CompiledReport(report).evaluate(bindings)
    _emit(args, report)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    bindings = parse_bindings(args.bind)
    if not bindings:
        raise UsageError("--bind is required")
    if args.report:
        report = CompiledReport(json.loads(Path(args.report).read_text(encoding="utf-8")))
    else:
        program, mapping, table = _inputs(args)
        report = analyze(program, mapping, table).compiled()
    _emit_counts(args, report.evaluate(bindings))
    return EXIT_OK


def cmd_simulate(args) -> int:
    program, mapping, table = _inputs(args)
    bindings = parse_bindings(args.bind)
    tiled = tile_program(program, mapping.tiling)
    counts = simulate(program, mapping.tiling, table, bindings, tiled, mapping.schedule)
    _emit_counts(args, counts.to_json())
    return EXIT_OK


def cmd_compare(args) -> int:
    program, mapping, table = _inputs(args)
    bindings = parse_bindings(args.bind)
    a = analyze(program, mapping, table)
    concrete = a.compiled().evaluate(bindings)
    for sid, delta in parse_bindings(args.perturb).items():
        if sid not in concrete["statements"]:
            raise UsageError(f"--perturb names unknown statement {sid}")
        concrete["statements"][sid] += delta
    counts = simulate(program, mapping.tiling, table, bindings, a.tiled, mapping.schedule).to_json()
    diff = compare(concrete, counts)
    if concrete["latency"] != counts["latency"]:
        diff.append({"section": "latency", "key": "L", "analysis": concrete["latency"],
                     "simulation": counts["latency"], "delta": concrete["latency"] - counts["latency"]})
    _emit(args, {"schema": 1, "bindings": concrete["bindings"], "match": not diff, "diff": diff})
    return EXIT_OK if not diff else EXIT_MISMATCH


def sweep_rows(report: CompiledReport, points: list[dict], base: dict, tile_rule: str) -> tuple[list, list]:
    """Header and rows of the sweep table, in sweep order."""
    tile_names = [str(p) for p in report.tiles]
    params = report.parameters
    ops = sorted(report.op_totals) if report.op_totals else sorted({o for s in report.statements for o in s.ops})
    header = (
        ["index"] + params + ["valid", "E_tot_fJ"]
        + [f"E_{c}_fJ" for c in CLASSES] + [f"E_{o}_fJ" for o in ops]
        + ["L", "analyzer_time_s", "note"]
    )
    rows = []
    for idx, point in enumerate(points):
        env = dict(base)
        env.update(point)
        if tile_rule == "ceil":
            for l, (ub, t) in enumerate(zip(report.bounds, report.counts)):
                name = tile_names[l]
                if name in params and name not in env and ub.variables() <= set(env):
                    env[name] = max(1, math.ceil(int(ub.evaluate(env)) / t))
        row = [idx] + [env.get(p, "") for p in params]
        t0 = time.perf_counter()
        try:
            out = report.evaluate(env)
        except (EvaluationError, CountingError) as e:
            rows.append(row + [0, ""] + [""] * (len(CLASSES) + len(ops)) + ["", "", str(e)])
            continue
        dt = time.perf_counter() - t0
        rows.append(
            row + [1, out["energy_fJ"]]
            + [out["class_energy_fJ"][c] for c in CLASSES]
            + [out["op_energy_fJ"].get(o, 0) for o in ops]
            + [out["latency"], f"{dt:.6f}", ""]
        )
    return header, rows


def cmd_sweep(args) -> int:
    program, mapping, table = _inputs(args)
    points = parse_sweep(args.sweep)
    report = analyze(program, mapping, table).compiled()
    header, rows = sweep_rows(report, points, parse_bindings(args.bind), args.tile_rule)
    if args.format == "json":
        _emit(args, {"schema": 1, "columns": header, "rows": rows})
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        _emit(args, buf.getvalue())
    return EXIT_OK


# entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyenergy", description="Symbolic energy and latency analysis of tiled loop programs.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt="json", inputs=True):
        if inputs:
            p.add_argument("program_pos", nargs="?", metavar="PROGRAM", help="PRA file or shipped benchmark name")
            p.add_argument("mapping_pos", nargs="?", metavar="MAPPING", help="mapping file or shipped mapping name")
            p.add_argument("--program")
            p.add_argument("--mapping")
            p.add_argument("--energy-table", help="energy table file (default: $POLYENERGY_ENERGY_TABLE or built-in)")
        p.add_argument("--bind", help="parameter bindings, e.g. N0=4,N1=5,p0=2,p1=3")
        p.add_argument("--out", help="write output to this file instead of stdout")
        p.add_argument("--format", choices=["json", "csv"], default=fmt)

    p = sub.add_parser("analyze", help="symbolic report (JSON)")
    common(p)
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("evaluate", help="concrete counts from a report or from inputs")
    common(p)
    p.add_argument("--report", help="JSON report written by 'analyze'")
    p.set_defaults(func=cmd_evaluate)
    p = sub.add_parser("simulate", help="reference counts by enumeration")
    common(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("compare", help="analyzer vs simulator; exit 1 on any difference")
    common(p)
    p.add_argument("--perturb", help=argparse.SUPPRESS)  # test hook: ID=DELTA,...
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("sweep", help="evaluate over a parameter grid (CSV)")
    common(p, fmt="csv")
    p.add_argument("--sweep", required=True, help="e.g. 'N0:N1=64,128,256' (';' separates axes)")
    p.add_argument("--tile-rule", choices=["ceil", "none"], default="ceil",
                   help="derive unbound tile sizes as ceil(N/t) (default) or require them bound")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, *INPUT_ERRORS) as e:
        kind = type(e).__name__
        sys.stderr.write(json.dumps({"error": kind, "message": str(e)}) + "\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
