"""Diagonal (LSGP) tiling of PRA iteration spaces.

Each statement splits into a computational part with zero dependencies and
one memory statement per right-hand-side reference and displacement
vector gamma.  The memory statement reads ``x[j - d - P*gamma, k + gamma]``,
so its intra-tile / inter-tile split is ``d_J = d + P*gamma`` and
``d_K = -gamma``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .constraints import Constraint, ConstraintSystem
from .polynomial import Polynomial
from .pra import Program, Statement, VariableRef

COMPUTATIONAL = "computational"
MEMORY = "memory"


class TilingError(ValueError):
    pass


@dataclass(frozen=True)
class TilingSpec:
    tile_sizes: tuple  # Polynomial per dimension: a tile-size parameter or a constant
    tile_counts: tuple  # concrete ints
    lower_bounds: Mapping = field(default_factory=dict)  # declared minimum per symbolic tile size

    def __post_init__(self):
        sizes = tuple(Polynomial.lift(p) for p in self.tile_sizes)
        object.__setattr__(self, "tile_sizes", sizes)
        object.__setattr__(self, "tile_counts", tuple(int(t) for t in self.tile_counts))
        object.__setattr__(self, "lower_bounds", dict(self.lower_bounds))
        if len(sizes) != len(self.tile_counts):
            raise TilingError("dimension mismatch between tile sizes and tile counts")
        for t in self.tile_counts:
            if t < 1:
                raise TilingError(f"tile counts must be >= 1, got {t}")
        for p in sizes:
            if p.is_constant():
                if p.constant < 1:
                    raise TilingError(f"tile sizes must be >= 1, got {p.constant}")
            elif len(p.variables()) != 1 or p != Polynomial.var(next(iter(p.variables()))):
                raise TilingError(f"tile size must be a parameter or an integer, got {p}")

    @property
    def n(self) -> int:
        return len(self.tile_counts)

    def symbolic_sizes(self) -> list:
        return [str(p) for p in self.tile_sizes if not p.is_constant()]

    def minimum(self, name: str) -> int:
        return max(1, int(self.lower_bounds.get(name, 1)))

    def concrete_sizes(self, bindings: Mapping[str, int]) -> tuple:
        return tuple(int(p.evaluate(bindings)) for p in self.tile_sizes)


def j_var(l: int) -> str:
    return f"j{l}"


def k_var(l: int) -> str:
    return f"k{l}"


@dataclass(frozen=True)
class TiledStatement:
    id: str
    origin: str
    kind: str
    statement: Statement
    condition: ConstraintSystem
    ref: VariableRef | None = None
    ref_index: int | None = None
    gamma: tuple = ()
    dJ: tuple = ()
    dK: tuple = ()

    @property
    def dependence(self) -> tuple:
        """(d_J, d_K) as one 2n-vector."""
        return tuple(self.dJ) + tuple(Polynomial.const(x) for x in self.dK)


# displacement vectors ---------------------------------------------------------


def exact_gammas_1d(d: int, p: int) -> list[int]:
    """All integers g with -1 < g + d/p < 1, i.e. -p < p*g + d < p."""
    if p < 1:
        raise TilingError(f"tile size must be >= 1, got {p}")
    lo = -((p + d) // p)  # candidates bracket the open interval
    return [g for g in range(lo - 1, lo + 3) if -p < p * g + d < p]


def enumerate_gammas(d: Sequence[int], sizes: Sequence, lower_bounds: Mapping | None = None) -> list[tuple]:
    """Displacement vectors gamma for dependence ``d``, ordered with the
    intra-tile vector first (descending lexicographic order)."""
    lower_bounds = lower_bounds or {}
    per_dim = []
    for dl, p in zip(d, sizes):
        p = Polynomial.lift(p)
        if dl == 0:
            per_dim.append([0])
        elif p.is_constant():
            per_dim.append(exact_gammas_1d(dl, p.constant))
        else:
            name = str(p)
            lb = max(1, int(lower_bounds.get(name, 1)))
            if abs(dl) > lb:
                raise TilingError(
                    f"unresolvable gamma set: |d| = {abs(dl)} may exceed tile size {name} (declared minimum {lb})"
                )
            per_dim.append([0, -1 if dl > 0 else 1])
    return sorted(itertools.product(*per_dim), reverse=True)


# statement decomposition ---------------------------------------------------------


def _base_conditions(program: Program, stmt: Statement, tiling: TilingSpec) -> list[Constraint]:
    cs = []
    sub = {}
    for l, (v, ub) in enumerate(zip(program.iter_vars, program.upper_bounds)):
        j, k = Polynomial.var(j_var(l)), Polynomial.var(k_var(l))
        p, t = tiling.tile_sizes[l], tiling.tile_counts[l]
        i = j + p * k
        sub[v] = i
        cs += [Constraint.ge(j, 0), Constraint.lt(j, p)]
        cs += [Constraint.ge(k, 0), Constraint.lt(k, t)]
        cs += [Constraint.ge(i, 0), Constraint.lt(i, ub)]
    cs += [c.subs(sub) for c in stmt.condition.constraints]
    return cs


def tiled_variables(n: int) -> tuple:
    return tuple(j_var(l) for l in range(n)) + tuple(k_var(l) for l in range(n))


def _dedupe(cs: list[Constraint]) -> tuple:
    seen = {}
    for c in cs:
        seen.setdefault(c, None)
    return tuple(seen)


def decompose_statement(program: Program, stmt: Statement, tiling: TilingSpec) -> tuple:
    n = program.n
    if tiling.n != n:
        raise TilingError(f"dimension mismatch: program has {n} dimensions, tiling has {tiling.n}")
    clash = set(tiled_variables(n)) & set(program.param_names)
    if clash:
        raise TilingError(f"parameter names clash with tiled index names: {sorted(clash)}")
    variables = tiled_variables(n)
    base = _base_conditions(program, stmt, tiling)
    comp = TiledStatement(
        id=stmt.label,
        origin=stmt.label,
        kind=COMPUTATIONAL,
        statement=stmt,
        condition=ConstraintSystem(variables, _dedupe(base)),
        dJ=tuple(Polynomial() for _ in range(n)),
        dK=(0,) * n,
    )
    memory = []
    serial = 0
    for r_idx, ref in enumerate(stmt.refs):
        for gamma in enumerate_gammas(ref.dependence, tiling.tile_sizes, tiling.lower_bounds):
            serial += 1
            dJ = tuple(Polynomial.const(d) + tiling.tile_sizes[l] * g for l, (d, g) in enumerate(zip(ref.dependence, gamma)))
            extra = []
            for l in range(n):
                src = Polynomial.var(j_var(l)) - dJ[l]
                extra += [Constraint.ge(src, 0), Constraint.lt(src, tiling.tile_sizes[l])]
            memory.append(
                TiledStatement(
                    id=f"{stmt.label}*{serial}",
                    origin=stmt.label,
                    kind=MEMORY,
                    statement=stmt,
                    condition=ConstraintSystem(variables, _dedupe(base + extra)),
                    ref=ref,
                    ref_index=r_idx,
                    gamma=tuple(gamma),
                    dJ=dJ,
                    dK=tuple(-g for g in gamma),
                )
            )
    return comp, memory


def tile_program(program: Program, tiling: TilingSpec) -> list[TiledStatement]:
    out = []
    for s in program.statements:
        comp, mem = decompose_statement(program, s, tiling)
        out.append(comp)
        out.extend(mem)
    return out


def check_cover(program: Program, tiling: TilingSpec, bindings: Mapping[str, int]) -> bool:
    """True iff the tiles J + P*K cover the whole iteration space."""
    sizes = tiling.concrete_sizes(bindings)
    for p, t, ub in zip(sizes, tiling.tile_counts, program.upper_bounds):
        if p * t < int(ub.evaluate(bindings)):
            return False
    return True


def tiling_assumptions(program: Program, tiling: TilingSpec) -> list[tuple[str, Constraint]]:
    """Assumptions the symbolic analysis relies on, with a reason each."""
    out = []
    for l, p in enumerate(tiling.tile_sizes):
        if p.is_constant():
            continue
        name = str(p)
        need = tiling.minimum(name)
        reach = max((abs(r.dependence[l]) for s in program.statements for r in s.refs), default=0)
        reason = f"tile size {name} >= {need} (declared minimum)"
        if reach > 1 and reach <= need:
            reason += f"; closed-form gamma set needs {name} >= {reach}"
        out.append((reason, Constraint.ge(p, max(need, reach))))
    return out


def gamma_sets_consistent(program: Program, tiling: TilingSpec, bindings: Mapping[str, int]) -> list[str]:
    """Problems where a concrete tile size admits a gamma the symbolic set lacks."""
    sizes = tiling.concrete_sizes(bindings)
    problems = []
    for s in program.statements:
        for ref in s.refs:
            symbolic = set(enumerate_gammas(ref.dependence, tiling.tile_sizes, tiling.lower_bounds))
            exact = set(itertools.product(*(exact_gammas_1d(d, p) for d, p in zip(ref.dependence, sizes))))
            missing = exact - symbolic
            if missing:
                problems.append(f"{s.label}: gamma {sorted(missing)} not covered for d={ref.dependence}")
    return problems
