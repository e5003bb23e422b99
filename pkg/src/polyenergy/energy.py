"""Memory-class access pricing and total energy assembly.

All energies are integer femtojoules.
"""

from __future__ import annotations

import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .pra import INPUT, OUTPUT, VariableRef
from .polycount import Volume, combine_volumes
from .piecewise import PiecewisePolynomial, pw_eval
from .tiling import COMPUTATIONAL, MEMORY, TiledStatement

log = logging.getLogger(__name__)

CLASSES = ("RD", "FD", "ID", "OD", "IOb", "DR")
ENV_TABLE = "POLYENERGY_ENERGY_TABLE"

INPUT_COMPOSITE = (("DR", 1), ("IOb", 1), ("ID", 1))
OUTPUT_COMPOSITE = (("DR", 1), ("IOb", 1), ("OD", 1))


class EnergyError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyTable:
    per_class: Mapping
    per_op: Mapping

    def __post_init__(self):
        per_class = {k: int(v) for k, v in self.per_class.items()}
        per_op = {k: int(v) for k, v in self.per_op.items()}
        per_op.setdefault("copy", 0)
        missing = [c for c in CLASSES if c not in per_class]
        if missing:
            raise EnergyError(f"energy table lacks memory classes {missing}")
        for k, v in list(per_class.items()) + list(per_op.items()):
            if v < 0:
                raise EnergyError(f"negative energy for {k}: {v}")
        object.__setattr__(self, "per_class", per_class)
        object.__setattr__(self, "per_op", per_op)

    def cls(self, name: str) -> int:
        try:
            return self.per_class[name]
        except KeyError:
            raise EnergyError(f"missing table key {name}") from None

    def op(self, name: str) -> int:
        try:
            return self.per_op[name]
        except KeyError:
            raise EnergyError(f"operation {name} missing from the energy table") from None

    def price(self, entries: Sequence[tuple]) -> int:
        return sum(self.cls(c) * m for c, m in entries)


def parse_energy_table(text: str) -> EnergyTable:
    """``key = value_fJ`` lines; memory-class keys are classes, anything
    else is an operation energy."""
    classes, ops = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise EnergyError(f"line {lineno}: expected 'key = value'")
        try:
            v = int(value)
        except ValueError:
            raise EnergyError(f"line {lineno}: energy must be an integer number of fJ, got {value!r}") from None
        (classes if key in CLASSES else ops)[key] = v
    return EnergyTable(classes, ops)


def load_energy_table(path: str | os.PathLike | None = None) -> EnergyTable:
    """Load a table file; without a path, use $POLYENERGY_ENERGY_TABLE or
    the shipped default."""
    path = path or os.environ.get(ENV_TABLE)
    if path:
        return parse_energy_table(Path(path).read_text(encoding="utf-8"))
    text = resources.files("polyenergy").joinpath("data/default.energy").read_text(encoding="utf-8")
    return parse_energy_table(text)


# access classification ------------------------------------------------------


def _all_zero(vec) -> bool:
    out = True
    for x in vec:
        if hasattr(x, "is_zero"):
            if not x.is_constant():
                raise EnergyError(f"unresolvable symbolic zero-test on {x}")
            x = x.constant
        out = out and x == 0
    return out


def access_classes(ref: VariableRef, dJ: Sequence, dK: Sequence) -> tuple:
    """Memory classes touched by one read of ``ref`` served over (dJ, dK)."""
    if ref.role == INPUT:
        return INPUT_COMPOSITE
    if ref.role == OUTPUT:
        return OUTPUT_COMPOSITE
    # dK is -gamma, always an integer vector; when it is zero, gamma is
    # zero and dJ equals the constant d, so no symbolic test is needed.
    if _all_zero(dK):
        return (("RD", 1),) if _all_zero(dJ) else (("FD", 1),)
    return (("ID", 1),)


def write_classes(ref: VariableRef) -> tuple:
    return OUTPUT_COMPOSITE if ref.role == OUTPUT else (("RD", 1),)


@dataclass(frozen=True)
class AccessProfile:
    """Accesses and operations of one execution of a tiled statement."""

    read: tuple
    write: tuple
    ops: tuple = ()  # (op, count)

    def class_counts(self) -> Counter:
        out: Counter = Counter()
        for c, m in self.read + self.write:
            out[c] += m
        return out

    def energy(self, table: EnergyTable) -> int:
        return table.price(self.read) + table.price(self.write) + sum(table.op(o) * k for o, k in self.ops)


def _merge(entries) -> tuple:
    acc: Counter = Counter()
    for c, m in entries:
        acc[c] += m
    return tuple(sorted(acc.items(), key=lambda cm: CLASSES.index(cm[0]) if cm[0] in CLASSES else 99))


def profile(ts: TiledStatement) -> AccessProfile:
    if ts.kind == MEMORY:
        return AccessProfile(_merge(access_classes(ts.ref, ts.dJ, ts.dK)), (("RD", 1),))
    # arguments arrive as zero-dependence local copies: one RD read each
    reads = _merge(("RD", 1) for _ in ts.statement.refs)
    ops = tuple(sorted(ts.statement.ops.items()))
    return AccessProfile(reads, _merge(write_classes(ts.statement.lhs)), ops)


def statement_energy_mem(m: TiledStatement, table: EnergyTable) -> int:
    if m.kind != MEMORY:
        raise EnergyError(f"{m.id} is not a memory statement")
    return profile(m).energy(table)


def statement_energy_comp(c: TiledStatement, table: EnergyTable) -> int:
    if c.kind != COMPUTATIONAL:
        raise EnergyError(f"{c.id} is not a computational statement")
    return profile(c).energy(table)


def statement_energy(ts: TiledStatement, table: EnergyTable) -> int:
    return statement_energy_mem(ts, table) if ts.kind == MEMORY else statement_energy_comp(ts, table)


# totals ----------------------------------------------------------------------


@dataclass
class StatementEnergy:
    statement: TiledStatement
    volume: Volume
    per_exec: int
    profile: AccessProfile

    @property
    def id(self) -> str:
        return self.statement.id


@dataclass
class EnergyReport:
    items: list
    table: EnergyTable
    total: PiecewisePolynomial | None = None  # E_tot in fJ
    class_counts: dict = field(default_factory=dict)  # class -> access-count PW
    op_counts: dict = field(default_factory=dict)  # op -> count PW

    @property
    def symbolic(self) -> bool:
        return self.total is not None

    def class_energy(self, name: str) -> PiecewisePolynomial | None:
        pw = self.class_counts.get(name)
        return None if pw is None else pw * self.table.cls(name)

    def op_energy(self, name: str) -> PiecewisePolynomial | None:
        pw = self.op_counts.get(name)
        return None if pw is None else pw * self.table.op(name)

    def evaluate(self, bindings: Mapping[str, int]) -> dict:
        """Concrete counts and energies at a fully bound parameter point."""
        volumes = {it.id: it.volume.evaluate(bindings) for it in self.items}
        classes: Counter = Counter({c: 0 for c in CLASSES})
        ops: Counter = Counter()
        for it in self.items:
            v = volumes[it.id]
            for c, m in it.profile.class_counts().items():
                classes[c] += v * m
            for o, k in it.profile.ops:
                ops[o] += v * k
        energy = sum(volumes[it.id] * it.per_exec for it in self.items)
        if self.total is not None:
            symbolic = pw_eval(self.total, bindings)
            if symbolic != energy:
                raise EnergyError(f"E_tot {symbolic} fJ disagrees with the statement sum {energy} fJ")
        return {
            "statements": volumes,
            "classes": dict(classes),
            "ops": dict(sorted(ops.items())),
            "energy_fJ": energy,
        }


def total_energy(items: Sequence[tuple], table: EnergyTable) -> EnergyReport:
    """Assemble E_tot from (tiled statement, volume) pairs.

    Volumes must share one factor-group structure (as produced by the
    analysis pipeline) for the flat symbolic totals to be built.
    """
    seen = set()
    entries = []
    for ts, vol in items:
        if ts.id in seen:
            raise EnergyError(f"duplicate statement {ts.id}")
        seen.add(ts.id)
        prof = profile(ts)
        entries.append(StatementEnergy(ts, vol, prof.energy(table), prof))
    weights: dict = {"energy": [e.per_exec for e in entries]}
    classes = [c for c in CLASSES if any(e.profile.class_counts()[c] for e in entries)]
    for c in classes:
        weights["class:" + c] = [e.profile.class_counts()[c] for e in entries]
    op_names = sorted({o for e in entries for o, _ in e.profile.ops})
    for o in op_names:
        weights["op:" + o] = [dict(e.profile.ops).get(o, 0) for e in entries]
    combined = combine_volumes([e.volume for e in entries], weights)
    report = EnergyReport(entries, table)
    if combined["energy"] is None:
        log.warning("some volumes need concrete enumeration; symbolic totals unavailable")
        return report
    report.total = combined["energy"]
    report.class_counts = {c: combined.get("class:" + c, PiecewisePolynomial()) for c in CLASSES}
    report.op_counts = {o: combined["op:" + o] for o in op_names}
    return report
