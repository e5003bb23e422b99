"""Parameter guards: conjunctions of affine constraints over parameters only.

Satisfiability is decided over the integers.  A cheap witness search on a
small box settles most queries; anything left goes to an exact integer
feasibility problem (HiGHS through ``scipy.optimize.milp``).
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .constraints import EQ, FALSE, GE, Constraint
from .polynomial import Polynomial

_MILP_BOUND = 10**7


def _direction(e: Polynomial):
    return tuple(sorted((m, c) for m, c in e.terms.items() if m))


def _simplify(constraints: Iterable[Constraint]) -> tuple | None:
    """Canonical sorted constraint tuple, or None when trivially empty."""
    return _simplify_cached(tuple(constraints))


@lru_cache(maxsize=200_000)
def _simplify_cached(constraints: tuple) -> tuple | None:
    ge: dict = {}
    eq: dict = {}
    for c in constraints:
        c = c.normalized()
        if c.is_trivial():
            if not c.truth():
                return None
            continue
        d = _direction(c.expr)
        k = c.expr.constant
        if c.rel == EQ:
            if d in eq and eq[d] != k:
                return None
            eq[d] = k
        else:
            # keep the tightest of parallel half-spaces
            if d not in ge or k < ge[d]:
                ge[d] = k
    for d, k in eq.items():
        neg = tuple((m, -c) for m, c in d)
        neg = tuple(sorted(neg))
        # e + k == 0 pins e = -k
        if d in ge:
            if ge.pop(d) - k < 0:
                return None
        if neg in ge:
            if ge.pop(neg) + k < 0:
                return None
    for d, k in list(ge.items()):
        neg = tuple(sorted((m, -c) for m, c in d))
        if neg in ge and k + ge[neg] < 0:
            return None
    out = []
    for d, k in eq.items():
        out.append(Constraint(Polynomial(dict(d)) + k, EQ))
    for d, k in ge.items():
        out.append(Constraint(Polynomial(dict(d)) + k, GE))
    out.sort(key=Constraint.sort_key)
    return tuple(out)


class ParamGuard:
    """Immutable conjunction of parameter constraints."""

    __slots__ = ("constraints", "_hash")

    def __init__(self, constraints: Iterable[Constraint] = (), _canonical=False):
        if _canonical:
            self.constraints = tuple(constraints)
        else:
            simple = _simplify(constraints)
            self.constraints = (FALSE,) if simple is None else simple
        self._hash = hash(self.constraints)

    @property
    def is_false(self) -> bool:
        return self.constraints == (FALSE,)

    @property
    def is_true(self) -> bool:
        return not self.constraints

    def variables(self) -> frozenset:
        out = set()
        for c in self.constraints:
            out |= c.variables()
        return frozenset(out)

    def __and__(self, other: "ParamGuard | Iterable[Constraint]") -> "ParamGuard":
        more = other.constraints if isinstance(other, ParamGuard) else tuple(other)
        return ParamGuard(self.constraints + tuple(more))

    def holds(self, env: Mapping[str, int]) -> bool:
        for c in self.constraints:
            if not c.holds(env):
                return False
        return True

    def satisfiable(self) -> bool:
        if self.is_false:
            return False
        return _sat(self.constraints)

    def implies(self, c: Constraint) -> bool:
        return _implies(self.constraints, c)

    def minimized(self) -> "ParamGuard":
        """Drop constraints implied by the remaining ones."""
        cs = list(self.constraints)
        i = 0
        while i < len(cs):
            rest = ParamGuard(cs[:i] + cs[i + 1 :], _canonical=True)
            if rest.implies(cs[i]):
                cs.pop(i)
            else:
                i += 1
        return ParamGuard(cs, _canonical=True)

    def __eq__(self, other) -> bool:
        return isinstance(other, ParamGuard) and self.constraints == other.constraints

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return " and ".join(str(c) for c in self.constraints) or "true"

    def __repr__(self) -> str:
        return f"ParamGuard({str(self)!r})"


TRUE_GUARD = ParamGuard()


@lru_cache(maxsize=200_000)
def _implies(constraints: tuple, c: Constraint) -> bool:
    if c in constraints:
        return True
    if constraints == (FALSE,):
        return True
    return not any(ParamGuard(constraints + (n,)).satisfiable() for n in c.negations())


def subtract(region: ParamGuard, cut: ParamGuard) -> list[ParamGuard]:
    """Disjoint guards covering ``region`` minus ``cut``."""
    if cut.is_true:
        return []
    if not (region & cut).satisfiable():
        return [region]
    out = []
    prefix: list[Constraint] = []
    for h in cut.constraints:
        if h in region.constraints:
            continue
        for n in h.negations():
            piece = region & (prefix + [n])
            if piece.satisfiable():
                out.append(piece)
        prefix.append(h)
    return out


# satisfiability ---------------------------------------------------------


def _components(constraints: tuple) -> list[tuple]:
    parent: dict = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in constraints:
        vs = sorted(c.variables())
        for v in vs[1:]:
            parent[find(v)] = find(vs[0])
        if vs:
            find(vs[0])
    groups: dict = {}
    for c in constraints:
        vs = sorted(c.variables())
        groups.setdefault(find(vs[0]), []).append(c)
    return [tuple(g) for g in groups.values()]


@lru_cache(maxsize=200_000)
def _sat(constraints: tuple) -> bool:
    for comp in _components(constraints):
        if not _sat_component(comp):
            return False
    return True


_BOX = {1: range(-2, 200), 2: range(-2, 48), 3: range(-1, 20)}


@lru_cache(maxsize=200_000)
def _sat_component(constraints: tuple) -> bool:
    names = sorted(set().union(*(c.variables() for c in constraints)))
    affine = all(c.expr.is_affine() for c in constraints)
    if len(names) in _BOX:
        axis = np.arange(_BOX[len(names)].start, _BOX[len(names)].stop)
        grids = np.meshgrid(*([axis] * len(names)), indexing="ij")
        env = {n: g.ravel() for n, g in zip(names, grids)}
        ok = np.ones(axis.size ** len(names), dtype=bool)
        for c in constraints:
            ok &= np.asarray(c.holds(env), dtype=bool)
        if ok.any():
            return True
    if not affine:
        return True  # cannot decide exactly; keep the piece
    return _milp_feasible(constraints, names)


def _milp_feasible(constraints: tuple, names: list) -> bool:
    idx = {n: i for i, n in enumerate(names)}
    rows, lo, hi = [], [], []
    for c in constraints:
        row = np.zeros(len(names))
        for v, k in c.expr.linear_part().items():
            row[idx[v]] = k
        rows.append(row)
        lo.append(-c.expr.constant)
        hi.append(-c.expr.constant if c.rel == EQ else np.inf)
    res = milp(
        c=np.zeros(len(names)),
        constraints=LinearConstraint(np.array(rows), lo, hi),
        integrality=np.ones(len(names)),
        bounds=Bounds(-_MILP_BOUND, _MILP_BOUND),
    )
    if res.status == 2:  # infeasible
        return False
    if res.status == 0:
        point = {n: int(round(x)) for n, x in zip(names, res.x)}
        if all(c.holds(point) for c in constraints):
            return True
        # numerically shaky answer: probe the integer neighbourhood
        for delta in itertools.product((-1, 0, 1), repeat=len(names)):
            p = {n: point[n] + d for n, d in zip(names, delta)}
            if all(c.holds(p) for c in constraints):
                return True
    return True
