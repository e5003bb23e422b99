"""End-to-end symbolic analysis and the versioned JSON report.

``analyze`` runs tiling, counting, pricing and scheduling once;
``CompiledReport`` evaluates a report (fresh or loaded from JSON) at
concrete parameter points in time independent of the loop bounds.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .constraints import Constraint, ConstraintSystem
from .dsl import format_pra, parse_constraint_text, parse_polynomial
from .energy import CLASSES, EnergyReport, EnergyTable, total_energy
from .mapping import MappingConfig, check_mapping
from .piecewise import PiecewisePolynomial, pw_eval
from .polycount import count_concrete, factor_groups, volume
from .pra import INPUT, Program, build_rdg, validate
from .schedule import compute_iteration_schedule, global_latency
from .tiling import (
    MEMORY,
    exact_gammas_1d,
    tile_program,
    tiling_assumptions,
)

log = logging.getLogger(__name__)

SCHEMA = 1


class AnalysisError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Assumption:
    constraint: Constraint
    reason: str


@dataclass
class Analysis:
    program: Program
    mapping: MappingConfig
    table: EnergyTable
    tiled: list
    energy: EnergyReport
    tau: dict
    Lc: int
    latency: PiecewisePolynomial
    assumptions: list
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return build_report(self)

    def compiled(self) -> "CompiledReport":
        return CompiledReport(self.to_json())

    def evaluate(self, bindings: Mapping[str, int]) -> dict:
        return self.compiled().evaluate(bindings)


def input_reuse_warnings(program: Program) -> list[str]:
    """Inputs whose instances may be fetched by more than one iteration."""
    out = []
    reads: dict = {}
    for s in program.statements:
        for r in s.refs:
            if r.role == INPUT:
                reads.setdefault(r.variable, []).append((s, r))
    for var, uses in sorted(reads.items()):
        if len(uses) > 1:
            labels = ", ".join(s.label for s, _ in uses)
            out.append(f"input {var} is read by several references ({labels}); DRAM traffic may be counted more than once")
            continue
        s, r = uses[0]
        pinned = set()
        for c in s.condition.constraints:
            vs = c.variables() & set(program.iter_vars)
            if c.rel == "==" and len(vs) == 1:
                pinned |= vs
        for l, v in enumerate(program.iter_vars):
            if l not in r.dims and v not in pinned:
                out.append(f"input {var} is read at every {v} in {s.label}; each instance is fetched repeatedly")
    return out


def analyze(program: Program, mapping: MappingConfig, table: EnergyTable) -> Analysis:
    t0 = time.perf_counter()
    diags = validate(program)
    if diags:
        raise AnalysisError("invalid program: " + "; ".join(str(d) for d in diags))
    check_mapping(program, mapping)
    tiling = mapping.tiling
    tiled = tile_program(program, tiling)
    assumptions = [Assumption(c, why) for why, c in tiling_assumptions(program, tiling)]
    context = [a.constraint for a in assumptions]
    groups = factor_groups([ts.condition for ts in tiled], tiling.n, context)
    items = []
    fallbacks = []
    for ts in tiled:
        vol = volume(ts.condition, tiling.tile_counts, context, groups)
        if not vol.symbolic:
            fallbacks.append(ts.id)
        items.append((ts, vol))
    report = total_energy(items, table)
    rdg = build_rdg(program)
    w = {s.label: mapping.schedule.latency(s.label) for s in program.statements}
    it = compute_iteration_schedule(rdg, w)
    latency = global_latency(mapping.schedule, tiling, it.Lc)
    notes = [
        f"initiation interval pi = {mapping.schedule.pi} is reported only; it does not enter the latency formula",
        "every input access is charged DR + IOb + ID and every output write DR + IOb + OD",
    ]
    warnings = input_reuse_warnings(program)
    if fallbacks:
        warnings.append("volumes of " + ", ".join(fallbacks) + " are counted by enumeration at evaluation time")
    for msg in warnings:
        log.warning(msg)
    return Analysis(
        program,
        mapping,
        table,
        tiled,
        report,
        it.tau,
        it.Lc,
        latency,
        assumptions,
        notes,
        warnings,
        time.perf_counter() - t0,
    )


# report ------------------------------------------------------------------------


def _pw(x: PiecewisePolynomial | None):
    return None if x is None else x.to_json()


def program_digest(program: Program) -> str:
    return hashlib.sha256(format_pra(program).encode()).hexdigest()[:16]


def build_report(a: Analysis) -> dict:
    program, tiling, sched = a.program, a.mapping.tiling, a.mapping.schedule
    statements = []
    for item in a.energy.items:
        ts, prof = item.statement, item.profile
        flat = item.volume.flat()
        entry = {
            "id": ts.id,
            "origin": ts.origin,
            "kind": ts.kind,
            "energy_fJ": item.per_exec,
            "read": [[c, m] for c, m in prof.read],
            "write": [[c, m] for c, m in prof.write],
            "ops": [[o, k] for o, k in prof.ops],
            "variables": list(ts.condition.variables),
            "condition": [str(c) for c in ts.condition.constraints],
            "volume": _pw(flat),
        }
        if ts.kind == MEMORY:
            entry.update(
                variable=ts.ref.variable,
                role=ts.ref.role,
                ref_index=ts.ref_index,
                d=list(ts.ref.dependence),
                gamma=list(ts.gamma),
                dJ=[str(x) for x in ts.dJ],
                dK=list(ts.dK),
            )
        statements.append(entry)
    e = a.energy
    return {
        "schema": SCHEMA,
        "program": {
            "digest": program_digest(program),
            "dimensions": program.n,
            "iterators": list(program.iter_vars),
            "parameters": list(program.param_names),
            "bounds": [str(ub) for ub in program.upper_bounds],
        },
        "mapping": {
            "tiles": [str(p) for p in tiling.tile_sizes],
            "counts": list(tiling.tile_counts),
            "minimums": dict(tiling.lower_bounds),
            "lambdaJ": [str(x) for x in sched.lambdaJ],
            "lambdaK": [str(x) for x in sched.lambdaK],
            "pi": sched.pi,
        },
        "energy_table": {"classes": dict(a.table.per_class), "ops": dict(a.table.per_op)},
        "assumptions": [{"constraint": str(x.constraint), "reason": x.reason} for x in a.assumptions],
        "notes": list(a.notes),
        "warnings": list(a.warnings),
        "schedule": {"tau": dict(a.tau), "Lc": a.Lc, "latency": _pw(a.latency)},
        "statements": statements,
        "totals": {
            "energy_fJ": _pw(e.total),
            "classes": {c: _pw(pw) for c, pw in e.class_counts.items()} if e.symbolic else None,
            "ops": {o: _pw(pw) for o, pw in e.op_counts.items()} if e.symbolic else None,
        },
        "analysis_seconds": round(a.seconds, 3),
    }


def _load_pw(data) -> PiecewisePolynomial | None:
    return None if data is None else PiecewisePolynomial.from_json(data)


@dataclass
class _Stmt:
    id: str
    kind: str
    energy: int
    classes: Counter
    ops: dict
    volume: PiecewisePolynomial | None
    system: ConstraintSystem
    origin: str
    ref_index: int | None
    d: tuple
    gamma: tuple


class CompiledReport:
    """A report parsed once and evaluated at many parameter points."""

    def __init__(self, data: dict):
        if data.get("schema") != SCHEMA:
            raise EvaluationError(f"unsupported report schema {data.get('schema')!r}")
        self.data = data
        prog = data["program"]
        self.iterators = list(prog["iterators"])
        self.bounds = [parse_polynomial(b) for b in prog["bounds"]]
        self.tiles = [parse_polynomial(p) for p in data["mapping"]["tiles"]]
        self.counts = list(data["mapping"]["counts"])
        self.parameters = list(prog["parameters"]) + [str(p) for p in self.tiles if not p.is_constant()]
        self.assumptions = [(parse_constraint_text(x["constraint"]), x["reason"]) for x in data["assumptions"]]
        self.table = data["energy_table"]
        self.latency = _load_pw(data["schedule"]["latency"])
        self.statements = []
        for s in data["statements"]:
            classes: Counter = Counter()
            for c, m in s["read"] + s["write"]:
                classes[c] += m
            system = ConstraintSystem(tuple(s["variables"]), tuple(parse_constraint_text(c) for c in s["condition"]))
            self.statements.append(
                _Stmt(
                    s["id"],
                    s["kind"],
                    s["energy_fJ"],
                    classes,
                    dict((o, k) for o, k in s["ops"]),
                    _load_pw(s["volume"]),
                    system,
                    s["origin"],
                    s.get("ref_index"),
                    tuple(s.get("d", ())),
                    tuple(s.get("gamma", ())),
                )
            )
        totals = data["totals"]
        self.total = _load_pw(totals["energy_fJ"])
        self.class_totals = {c: _load_pw(v) for c, v in (totals["classes"] or {}).items()}
        self.op_totals = {o: _load_pw(v) for o, v in (totals["ops"] or {}).items()}

    # checks ----------------------------------------------------------------

    def _check(self, env: Mapping[str, int]) -> None:
        missing = [p for p in self.parameters if p not in env]
        if missing:
            raise EvaluationError(f"unbound parameter(s): {', '.join(missing)}")
        violated = [f"{c} ({why})" for c, why in self.assumptions if not c.holds(env)]
        if violated:
            raise EvaluationError("bindings violate assumptions: " + "; ".join(violated))
        for v, ub, p, t in zip(self.iterators, self.bounds, self.tiles, self.counts):
            if int(p.evaluate(env)) * t < int(ub.evaluate(env)):
                raise EvaluationError(f"tiling does not cover the iteration space along {v}: {p}*{t} < {ub}")
        sizes = [int(p.evaluate(env)) for p in self.tiles]
        listed: dict = {}
        deps: dict = {}
        for s in self.statements:
            if s.kind == MEMORY:
                listed.setdefault((s.origin, s.ref_index), set()).add(s.gamma)
                deps[(s.origin, s.ref_index)] = s.d
        for key, d in deps.items():
            exact = set(itertools.product(*(exact_gammas_1d(dl, p) for dl, p in zip(d, sizes))))
            missing_g = exact - listed[key]
            if missing_g:
                raise EvaluationError(
                    f"{key[0]}: displacement vectors {sorted(missing_g)} are not covered at tile sizes {sizes}"
                )

    def evaluate(self, bindings: Mapping[str, int], check: bool = True) -> dict:
        env = {k: int(v) for k, v in bindings.items()}
        if check:
            self._check(env)
        volumes = {}
        for s in self.statements:
            if s.volume is not None:
                volumes[s.id] = pw_eval(s.volume, env)
            else:
                volumes[s.id] = count_concrete(s.system, env)
        classes = {c: 0 for c in CLASSES}
        ops: Counter = Counter()
        for s in self.statements:
            v = volumes[s.id]
            for c, m in s.classes.items():
                classes[c] += v * m
            for o, k in s.ops.items():
                ops[o] += v * k
        energy = sum(volumes[s.id] * s.energy for s in self.statements)
        if self.total is not None:
            # the flat totals must agree with the statement sums
            if pw_eval(self.total, env) != energy:
                raise EvaluationError("symbolic E_tot disagrees with the per-statement sum")
            for c, pw in self.class_totals.items():
                if pw_eval(pw, env) != classes[c]:
                    raise EvaluationError(f"symbolic {c} count disagrees with the per-statement sum")
        class_energy = {c: classes[c] * self.table["classes"][c] for c in CLASSES}
        op_energy = {o: ops[o] * self.table["ops"].get(o, 0) for o in sorted(ops)}
        return {
            "schema": SCHEMA,
            "bindings": {p: env[p] for p in self.parameters},
            "statements": volumes,
            "classes": classes,
            "ops": dict(sorted(ops.items())),
            "energy_fJ": energy,
            "energy_pJ": format_pj(energy),
            "class_energy_fJ": class_energy,
            "op_energy_fJ": op_energy,
            "latency": pw_eval(self.latency, env) if self.latency is not None else None,
        }


def format_pj(fj: int) -> str:
    sign = "-" if fj < 0 else ""
    q, r = divmod(abs(fj), 1000)
    return f"{sign}{q}.{r:03d}"
