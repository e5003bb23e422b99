"""Reference access counter and functional executor.

``simulate`` enumerates every tile point (j, k), fires each statement
whose condition holds at i = j + P*k, and tallies accesses and operations
directly, without the tiled condition spaces or symbolic counting.  The
memory class of each read follows from where its source instance lives:
same iteration, same tile, or another tile.

``execute`` runs the program on integer data to check that a PRA
transcription computes what it claims.
"""

from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .energy import CLASSES, INPUT_COMPOSITE, OUTPUT_COMPOSITE, EnergyTable
from .pra import INPUT, OUTPUT, Const, Copy, Program, VariableRef, build_rdg, zero_dependence_preds
from .schedule import ScheduleSpec, compute_iteration_schedule, latency_polynomial
from .tiling import MEMORY, TilingSpec

log = logging.getLogger(__name__)


class SimulationError(ValueError):
    pass


@dataclass
class AccessCounts:
    statements: dict
    classes: dict
    ops: dict
    energy_fJ: int
    bindings: dict = field(default_factory=dict)
    latency: int | None = None
    warnings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "bindings": dict(self.bindings),
            "statements": dict(self.statements),
            "classes": dict(self.classes),
            "ops": dict(self.ops),
            "energy_fJ": self.energy_fJ,
            "latency": self.latency,
            "warnings": list(self.warnings),
        }


def _concrete(program: Program, tiling: TilingSpec, bindings: Mapping[str, int]):
    missing = [p for p in list(program.param_names) + tiling.symbolic_sizes() if p not in bindings]
    if missing:
        raise SimulationError(f"unbound parameter(s): {', '.join(missing)}")
    bounds = [int(ub.evaluate(bindings)) for ub in program.upper_bounds]
    sizes = list(tiling.concrete_sizes(bindings))
    counts = list(tiling.tile_counts)
    for l, (n, p, t) in enumerate(zip(bounds, sizes, counts)):
        if p < 1:
            raise SimulationError(f"tile size along dimension {l} must be >= 1, got {p}")
        if p * t < n:
            raise SimulationError(f"tiling does not cover dimension {l}: {p}*{t} < {n}")
    return bounds, sizes, counts


def _memory_ids(tiled: Sequence | None) -> dict:
    ids = {}
    for ts in tiled or ():
        if ts.kind == MEMORY:
            ids[(ts.origin, ts.ref_index, tuple(ts.gamma))] = ts.id
    return ids


def _read_classes(ref: VariableRef, same_tile: bool, same_point: bool) -> tuple:
    if ref.role == INPUT:
        return INPUT_COMPOSITE
    if ref.role == OUTPUT:
        return OUTPUT_COMPOSITE
    if same_tile:
        return (("RD", 1),) if same_point else (("FD", 1),)
    return (("ID", 1),)


def simulate(
    program: Program,
    tiling: TilingSpec,
    table: EnergyTable,
    bindings: Mapping[str, int],
    tiled: Sequence | None = None,
    schedule: ScheduleSpec | None = None,
) -> AccessCounts:
    """Exact access and operation tallies at one concrete configuration.

    ``tiled`` only supplies names for memory statements; a read served by a
    displacement the list does not contain is reported under a ``?`` id.
    """
    env = {k: int(v) for k, v in bindings.items()}
    bounds, sizes, counts = _concrete(program, tiling, env)
    n = program.n
    ids = _memory_ids(tiled)

    # the tiled space J x K, mapped to i = j + p*k
    axes_i, axes_k = [], []
    for p, t in zip(sizes, counts):
        j, k = np.meshgrid(np.arange(p), np.arange(t), indexing="ij")
        axes_i.append((j + p * k).ravel())
        axes_k.append(k.ravel())
    mesh_i = np.meshgrid(*axes_i, indexing="ij")
    mesh_k = np.meshgrid(*axes_k, indexing="ij")
    I = np.stack([m.ravel() for m in mesh_i])
    K = np.stack([m.ravel() for m in mesh_k])
    inside = np.ones(I.shape[1], dtype=bool)
    for l in range(n):
        inside &= I[l] < bounds[l]
    I, K = I[:, inside], K[:, inside]
    point_env = dict(env)
    point_env.update({v: I[l] for l, v in enumerate(program.iter_vars)})

    masks = {}
    for s in program.statements:
        m = np.ones(I.shape[1], dtype=bool)
        for c in s.condition.constraints:
            m &= np.asarray(c.holds(point_env), dtype=bool)
        masks[s.label] = m

    shape = tuple(bounds)
    written: dict = {}
    for s in program.statements:
        if s.lhs.role == OUTPUT:
            continue
        w = written.setdefault(s.lhs.variable, np.zeros(shape, dtype=bool))
        w[tuple(I[:, masks[s.label]])] = True

    per_stmt: Counter = Counter()
    classes: Counter = Counter({c: 0 for c in CLASSES})
    ops: Counter = Counter()
    input_reads: dict = {}
    for s in program.statements:
        m = masks[s.label]
        fired = int(m.sum())
        per_stmt[s.label] += fired
        Ii, Ki = I[:, m], K[:, m]
        # computational part: local operand reads, operations, the write
        classes["RD"] += fired * len(s.refs)
        for o, k in s.ops.items():
            ops[o] += fired * k
        for c, mult in OUTPUT_COMPOSITE if s.lhs.role == OUTPUT else (("RD", 1),):
            classes[c] += fired * mult
        for r_idx, ref in enumerate(s.refs):
            d = np.asarray(ref.dependence).reshape(n, 1)
            src = Ii - d
            if fired and ((src < 0).any() or (src >= np.asarray(bounds).reshape(n, 1)).any()):
                raise SimulationError(f"{s.label}: out-of-bounds variable instance {ref.variable}")
            if ref.role == INPUT:
                flat = np.ravel_multi_index(tuple(src[list(ref.dims)]), tuple(bounds[l] for l in ref.dims))
                input_reads.setdefault(ref.variable, []).append(flat)
            elif fired and not written.get(ref.variable, np.zeros(shape, bool))[tuple(src)].all():
                raise SimulationError(f"{s.label}: reads an instance of {ref.variable} that is never written")
            src_k = src // np.asarray(sizes).reshape(n, 1)
            gamma = src_k - Ki
            same_point = not any(ref.dependence)
            if fired == 0:
                continue
            uniq, cnt = np.unique(gamma.T, axis=0, return_counts=True)
            for g, c in zip(uniq, cnt):
                g = tuple(int(x) for x in g)
                c = int(c)
                sid = ids.get((s.label, r_idx, g), f"{s.label}*?{r_idx}:{g}")
                per_stmt[sid] += c
                same_tile = not any(g)
                for cls, mult in _read_classes(ref, same_tile, same_point and same_tile):
                    classes[cls] += c * mult
                classes["RD"] += c  # the local copy is written once per transfer

    warnings = []
    for var, chunks in sorted(input_reads.items()):
        flat = np.concatenate(chunks)
        if flat.size and np.bincount(flat).max() > 1:
            warnings.append(f"input {var}: some instances are read by more than one iteration")
    for w in warnings:
        log.warning(w)

    energy = sum(classes[c] * table.cls(c) for c in CLASSES) + sum(k * table.op(o) for o, k in ops.items())
    statements = {}
    for ts in tiled or ():
        statements[ts.id] = per_stmt.get(ts.id, 0)
    for sid, c in per_stmt.items():
        statements.setdefault(sid, c)
    latency = None
    if schedule is not None:
        w = {s.label: schedule.latency(s.label) for s in program.statements}
        Lc = compute_iteration_schedule(build_rdg(program), w).Lc
        latency = int(latency_polynomial(schedule, tiling, Lc).evaluate(env))
    return AccessCounts(
        statements,
        dict(classes),
        dict(sorted(ops.items())),
        int(energy),
        {k: env[k] for k in list(program.param_names) + tiling.symbolic_sizes()},
        latency,
        warnings,
    )


# comparison ----------------------------------------------------------------------


def compare(analysis: Mapping, sim: Mapping) -> list[dict]:
    """Per-statement, per-class and per-op deltas; empty iff all agree."""
    a_bind, s_bind = analysis.get("bindings", {}), sim.get("bindings", {})
    if a_bind and s_bind and a_bind != s_bind:
        raise SimulationError(f"configuration mismatch: {a_bind} vs {s_bind}")
    out = []
    for section in ("statements", "classes", "ops"):
        a, s = analysis.get(section, {}), sim.get(section, {})
        for key in sorted(set(a) | set(s)):
            x, y = int(a.get(key, 0)), int(s.get(key, 0))
            if x != y:
                out.append({"section": section, "key": key, "analysis": x, "simulation": y, "delta": x - y})
    x, y = int(analysis["energy_fJ"]), int(sim["energy_fJ"])
    if x != y:
        out.append({"section": "energy", "key": "E_tot", "analysis": x, "simulation": y, "delta": x - y})
    return out


# value semantics --------------------------------------------------------------------


def _statement_order(program: Program) -> list:
    preds = zero_dependence_preds(program)
    order, done = [], set()

    def visit(label):
        if label in done:
            return
        done.add(label)
        for q in preds[label]:
            visit(q)
        order.append(program.statement(label))

    for s in program.statements:
        visit(s.label)
    return order


def execute(program: Program, bindings: Mapping[str, int], inputs: Mapping[str, np.ndarray]) -> dict:
    """Run the program on integer inputs; returns output arrays.

    Iterations run in lexicographic order, statements within an iteration
    in zero-dependence order.  Input and output arrays are indexed by the
    dimensions their references use.
    """
    env = {k: int(v) for k, v in bindings.items()}
    bounds = [int(ub.evaluate(env)) for ub in program.upper_bounds]
    order = _statement_order(program)
    values: dict = {}
    outputs: dict = {}

    def read(ref: VariableRef, i: tuple):
        src = tuple(a - b for a, b in zip(i, ref.dependence))
        if ref.role == INPUT:
            return int(inputs[ref.variable][tuple(src[l] for l in ref.dims)])
        try:
            return values[ref.variable][src]
        except KeyError:
            raise SimulationError(f"{ref.variable}{list(src)} read before it is written") from None

    def ev(e, i):
        if isinstance(e, Const):
            return e.value
        if isinstance(e, VariableRef):
            return read(e, i)
        if isinstance(e, Copy):
            return ev(e.arg, i)
        a, b = ev(e.left, i), ev(e.right, i)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        raise SimulationError(f"unknown operation {e.op}")

    for i in itertools.product(*(range(b) for b in bounds)):
        point = dict(env)
        point.update(zip(program.iter_vars, i))
        for s in order:
            if not all(c.holds(point) for c in s.condition.constraints):
                continue
            v = ev(s.rhs, i)
            if s.lhs.role == OUTPUT:
                arr = outputs.get(s.lhs.variable)
                if arr is None:
                    arr = np.zeros(tuple(bounds[l] for l in s.lhs.dims), dtype=object)
                    outputs[s.lhs.variable] = arr
                arr[tuple(i[l] for l in s.lhs.dims)] = v
            else:
                values.setdefault(s.lhs.variable, {})[i] = v
    return outputs
