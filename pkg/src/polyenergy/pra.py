"""Piecewise regular algorithm (PRA) data model, validation and the
reduced dependence graph."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Union

from .constraints import Constraint, ConstraintSystem
from .polynomial import Polynomial

LOOP_BOUND = "loop-bound"
TILE_SIZE = "tile-size"
TILE_COUNT = "tile-count"

INPUT = "input"
OUTPUT = "output"
INTERNAL = "internal"

OPS = ("add", "sub", "mul")


@dataclass(frozen=True)
class Parameter:
    name: str
    kind: str = LOOP_BOUND


@dataclass(frozen=True)
class VariableRef:
    """``variable[i - dependence]``.

    ``dims`` lists which iteration dimensions the index positions use;
    internal variables index every dimension in order, inputs and outputs
    may index a subset (``X[i1]`` in a 2-D space).  ``dependence`` always
    has full length, zero on dimensions the reference does not index.
    """

    variable: str
    dependence: tuple
    role: str = INTERNAL
    dims: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "dependence", tuple(int(x) for x in self.dependence))
        if not self.dims:
            object.__setattr__(self, "dims", tuple(range(len(self.dependence))))
        else:
            object.__setattr__(self, "dims", tuple(self.dims))

    @property
    def is_zero(self) -> bool:
        return not any(self.dependence)


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Copy:
    arg: "Expr"


Expr = Union[Const, VariableRef, BinOp, Copy]


def expr_refs(e: Expr) -> Iterator[VariableRef]:
    """Right-hand-side references in source order."""
    if isinstance(e, VariableRef):
        yield e
    elif isinstance(e, BinOp):
        yield from expr_refs(e.left)
        yield from expr_refs(e.right)
    elif isinstance(e, Copy):
        yield from expr_refs(e.arg)


def expr_ops(e: Expr) -> Counter:
    ops: Counter = Counter()
    if isinstance(e, BinOp):
        ops[e.op] += 1
        ops += expr_ops(e.left)
        ops += expr_ops(e.right)
    elif isinstance(e, Copy):
        ops["copy"] += 1
        ops += expr_ops(e.arg)
    return ops


@dataclass(frozen=True)
class Statement:
    label: str
    lhs: VariableRef
    rhs: Expr
    condition: ConstraintSystem = field(default_factory=ConstraintSystem)

    @property
    def refs(self) -> list[VariableRef]:
        return list(expr_refs(self.rhs))

    @property
    def ops(self) -> Counter:
        return expr_ops(self.rhs)


@dataclass(frozen=True)
class Program:
    iter_vars: tuple
    upper_bounds: tuple  # Polynomial per dimension: 0 <= i_l < upper_bounds[l]
    parameters: tuple
    statements: tuple
    inputs: frozenset = frozenset()
    outputs: frozenset = frozenset()

    @property
    def n(self) -> int:
        return len(self.iter_vars)

    @property
    def param_names(self) -> tuple:
        return tuple(p.name for p in self.parameters)

    @property
    def iteration_space(self) -> ConstraintSystem:
        cs = []
        for v, ub in zip(self.iter_vars, self.upper_bounds):
            cs.append(Constraint.ge(Polynomial.var(v), 0))
            cs.append(Constraint.lt(Polynomial.var(v), ub))
        return ConstraintSystem(self.iter_vars, cs)

    def statement(self, label: str) -> Statement:
        for s in self.statements:
            if s.label == label:
                return s
        raise KeyError(label)

    def writers(self) -> dict:
        out: dict = {}
        for s in self.statements:
            out.setdefault(s.lhs.variable, []).append(s.label)
        return out

    def variables(self) -> list:
        seen = {}
        for name in sorted(self.inputs):
            seen[name] = None
        for s in self.statements:
            seen[s.lhs.variable] = None
            for r in s.refs:
                seen[r.variable] = None
        return list(seen)


# validation --------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    statement: str | None
    message: str

    def __str__(self) -> str:
        where = f"{self.statement}: " if self.statement else ""
        return f"{where}{self.kind}: {self.message}"


def zero_dependence_preds(program: Program) -> dict:
    """Statement label -> labels writing a variable it reads at distance 0."""
    writers = program.writers()
    preds = {}
    for s in program.statements:
        ps = []
        for r in s.refs:
            if r.is_zero:
                for w in writers.get(r.variable, []):
                    if w not in ps:
                        ps.append(w)
        preds[s.label] = ps
    return preds


def find_cycle(preds: dict) -> list | None:
    """A cycle in the predecessor graph as a label list, or None."""
    state: dict = {}
    stack: list = []

    def visit(u):
        state[u] = 1
        stack.append(u)
        for v in preds.get(u, []):
            if state.get(v) == 1:
                return stack[stack.index(v) :] + [v]
            if v not in state:
                found = visit(v)
                if found:
                    return found
        stack.pop()
        state[u] = 2
        return None

    for u in preds:
        if u not in state:
            found = visit(u)
            if found:
                return list(reversed(found))
    return None


def validate(program: Program) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    allowed = set(program.iter_vars) | set(program.param_names)
    read_vars, written_vars = set(), set()
    labels = set()
    for s in program.statements:
        if s.label in labels:
            diags.append(Diagnostic("duplicate label", s.label, f"label {s.label} used twice"))
        labels.add(s.label)
        written_vars.add(s.lhs.variable)
        if not s.lhs.is_zero:
            diags.append(Diagnostic("lhs dependence", s.label, "left-hand side must be indexed at i"))
        if s.lhs.variable in program.inputs:
            diags.append(Diagnostic("input written", s.label, f"input {s.lhs.variable} on a left-hand side"))
        for r in s.refs:
            read_vars.add(r.variable)
            if r.variable in program.outputs:
                diags.append(Diagnostic("output read", s.label, f"output {r.variable} on a right-hand side"))
        stray = s.condition.parameters - allowed
        if stray:
            diags.append(Diagnostic("unknown identifier", s.label, f"condition uses {sorted(stray)}"))
    for v in sorted(program.outputs - written_vars):
        diags.append(Diagnostic("output unwritten", None, f"output {v} is never written"))
    for v in sorted(read_vars - written_vars - program.inputs):
        diags.append(Diagnostic("undefined variable", None, f"{v} is read but never written"))
    # roles by occurrence must agree with the declarations
    for v in sorted(read_vars - written_vars):
        if v not in program.inputs:
            diags.append(Diagnostic("role mismatch", None, f"{v} occurs only on right-hand sides but is not declared input"))
    for v in sorted(written_vars - read_vars):
        if v not in program.outputs:
            diags.append(Diagnostic("role mismatch", None, f"{v} occurs only on left-hand sides but is not declared output"))
    for v in sorted(program.inputs - read_vars):
        diags.append(Diagnostic("role mismatch", None, f"input {v} is never read"))
    cycle = find_cycle(zero_dependence_preds(program))
    if cycle:
        diags.append(Diagnostic("zero-dependence cycle", cycle[0], " -> ".join(cycle)))
    return diags


# reduced dependence graph ---------------------------------------------------


@dataclass(frozen=True)
class RDGEdge:
    source: str
    target: str
    dependence: tuple
    statement: str


@dataclass(frozen=True)
class RDG:
    nodes: tuple
    edges: tuple
    statements: tuple = ()  # (label, written variable) in source order

    def writers(self) -> dict:
        out: dict = {}
        for label, var in self.statements:
            out.setdefault(var, []).append(label)
        return out

    def incoming(self, node: str) -> list[RDGEdge]:
        return [e for e in self.edges if e.target == node]

    def zero_edges(self) -> list[RDGEdge]:
        return [e for e in self.edges if not any(e.dependence)]


def build_rdg(program: Program) -> RDG:
    """One node per variable family, one edge per right-hand-side reference
    (from the read variable to the written one, labelled by statement)."""
    edges = []
    for s in program.statements:
        for r in s.refs:
            edges.append(RDGEdge(r.variable, s.lhs.variable, r.dependence, s.label))
    stmts = tuple((s.label, s.lhs.variable) for s in program.statements)
    return RDG(tuple(program.variables()), tuple(edges), stmts)


def rdg_zero_preds(rdg: RDG) -> dict:
    """Statement-level zero-distance predecessor map derived from the RDG."""
    writers = rdg.writers()
    preds = {label: [] for label, _ in rdg.statements}
    for e in rdg.zero_edges():
        for w in writers.get(e.source, []):
            if w not in preds[e.statement]:
                preds[e.statement].append(w)
    return preds
