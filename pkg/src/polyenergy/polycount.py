"""Parametric integer-point counting for tiled condition spaces.

The tile-origin variables k range over a fixed box (the processor array is
fixed), so the products p*k can be unfolded into one affine system per
origin.  Every system produced this way from a box iteration space is
separable in j, and its count is a product of interval lengths; the
min/max inside each length are resolved by splitting on parameter
orderings, giving polynomial pieces under affine guards.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .constraints import EQ, GE, Constraint, ConstraintSystem
from .guards import ParamGuard
from .piecewise import (
    PiecewisePolynomial,
    merge_pieces,
    overlay,
    pw_eval,
    pw_mul,
    pw_sum,
)
from .polynomial import Polynomial


class CountingError(ValueError):
    pass


class NonSeparable(CountingError):
    """The system is outside the separable class; use concrete enumeration."""


# k-unfolding --------------------------------------------------------------------


def _check_unfoldable(cs: ConstraintSystem, kvars: Sequence[str]) -> None:
    kset = set(kvars)
    for c in cs.constraints:
        for mono in c.expr.terms:
            if sum(e for _, e in mono) <= 1:
                continue
            names = [n for n, _ in mono]
            ks = [n for n in names if n in kset]
            others = [n for n in names if n not in kset and n in cs.variables]
            if len(mono) != 2 or len(ks) != 1 or others or any(e != 1 for _, e in mono):
                raise CountingError(f"non-unfoldable nonlinearity in {c}")


def unfold_k(cs: ConstraintSystem, tile_counts: Mapping[str, int] | Sequence[int]) -> list[ConstraintSystem]:
    """One system over the remaining variables per point of the k box.

    ``tile_counts`` maps k variable names to t; a sequence is read as
    counts for k0, k1, ...
    """
    if not isinstance(tile_counts, Mapping):
        tile_counts = {f"k{l}": t for l, t in enumerate(tile_counts)}
    kvars = [k for k in tile_counts if k in cs.variables]
    _check_unfoldable(cs, kvars)
    out = []
    for point in itertools.product(*(range(tile_counts[k]) for k in kvars)):
        sub = dict(zip(kvars, point))
        system = cs.subs(sub)
        if system.trivially_false():
            continue
        system = ConstraintSystem(system.variables, tuple(c for c in system.constraints if not c.is_trivial()))
        out.append(system)
    return out


# separable counting ---------------------------------------------------------------


def _prune_bounds(bounds: list[Polynomial], keep_max: bool) -> list[Polynomial]:
    """Drop duplicates and bounds dominated by a constant offset."""
    uniq = list(dict.fromkeys(bounds))
    out = []
    for b in uniq:
        dominated = False
        for other in uniq:
            if other is b:
                continue
            diff = other - b
            if diff.is_constant():
                c = diff.constant
                if (c > 0 if keep_max else c < 0):
                    dominated = True
                    break
        if not dominated:
            out.append(b)
    return out


def _dimension_cases(lowers: list, uppers: list) -> list[tuple[list[Constraint], Polynomial]]:
    """(guard constraints, count) for max(lowers) .. min(uppers)."""
    cases = []
    for a, L in enumerate(lowers):
        for b, U in enumerate(uppers):
            g = []
            for a2, L2 in enumerate(lowers):
                if a2 < a:
                    g.append(Constraint.gt(L, L2))
                elif a2 > a:
                    g.append(Constraint.ge(L, L2))
            for b2, U2 in enumerate(uppers):
                if b2 < b:
                    g.append(Constraint.lt(U, U2))
                elif b2 > b:
                    g.append(Constraint.le(U, U2))
            g.append(Constraint.ge(U, L))
            cases.append((g, U - L + 1))
    return cases


def count_separable(cs: ConstraintSystem, context: Iterable[Constraint] = ()) -> PiecewisePolynomial:
    """Symbolic point count of a system whose constraints each mention at
    most one variable (with unit coefficient)."""
    guard = list(context)
    lowers: dict = {v: [] for v in cs.variables}
    uppers: dict = {v: [] for v in cs.variables}
    for c in cs.constraints:
        vs = [v for v in c.variables() if v in lowers]
        if not vs:
            guard.append(c)
            continue
        if len(vs) > 1 or not c.expr.is_affine():
            raise NonSeparable(f"fallback required: {c} couples {vs}")
        v = vs[0]
        a = c.expr.coeff(v)
        if abs(a) != 1:
            raise NonSeparable(f"fallback required: non-unit coefficient in {c}")
        for part in c.split_eq():
            a = part.expr.coeff(v)
            rest = part.expr - Polynomial.var(v, a)
            if a == 1:
                lowers[v].append(-rest)
            else:
                uppers[v].append(rest)
    pieces = [(ParamGuard(guard), Polynomial.const(1))]
    if pieces[0][0].is_false or not pieces[0][0].satisfiable():
        return PiecewisePolynomial()
    for v in cs.variables:
        if not lowers[v] or not uppers[v]:
            raise CountingError(f"unbounded polyhedron: {v} lacks a lower or upper bound")
        cases = _dimension_cases(_prune_bounds(lowers[v], True), _prune_bounds(uppers[v], False))
        nxt = []
        for g, val in pieces:
            for cg, cval in cases:
                h = g & cg
                if not h.is_false and h.satisfiable():
                    nxt.append((h, val * cval))
        pieces = nxt
        if not pieces:
            break
    return PiecewisePolynomial(merge_pieces(pieces))


# concrete counting -------------------------------------------------------------------


def count_concrete(cs: ConstraintSystem, bindings: Mapping[str, int]) -> int:
    """Exact number of integer points, by nested interval enumeration."""
    system = cs.subs({k: v for k, v in bindings.items() if k not in cs.variables})
    order = list(system.variables)
    pos = {v: i for i, v in enumerate(order)}
    levels: list[list[Constraint]] = [[] for _ in order]
    for c in system.constraints:
        names = c.variables()
        stray = names - set(order)
        if stray:
            raise CountingError(f"unbound parameter(s) {sorted(stray)}")
        if not names:
            if not c.truth():
                return 0
            continue
        levels[max(pos[v] for v in names)].append(c)
    if not order:
        return 1

    prepared = []
    for lvl, v in enumerate(order):
        items = []
        for c in levels[lvl]:
            a = c.expr.coeff(v)
            rest = c.expr - Polynomial.var(v, a)
            if v in rest.variables():
                raise CountingError(f"non-linear constraint {c}")
            items.append((a, rest, c.rel))
        prepared.append(items)

    last = len(order) - 1
    box: list = []

    def rec(lvl: int, env: dict) -> int:
        v = order[lvl]
        lo, hi = -math.inf, math.inf
        for a, rest, rel in prepared[lvl]:
            r = rest.evaluate(env) if rest.variables() else rest.constant
            if rel == GE:
                if a > 0:
                    lo = max(lo, -(r // a))  # ceil(-r / a)
                else:
                    hi = min(hi, r // (-a))
            else:
                if r % a:
                    return 0
                x = -r // a
                lo, hi = max(lo, x), min(hi, x)
        if lo == -math.inf or hi == math.inf:
            # bounds come from later levels (coupled constraints): use the
            # LP bounding box, the enumeration below stays exact
            if not box:
                box.extend(_lp_box(system, order))
            if box[0] is None:
                return 0
            lo, hi = max(lo, box[lvl][0]), min(hi, box[lvl][1])
        if hi < lo:
            return 0
        if lvl == last:
            return hi - lo + 1
        total = 0
        for x in range(lo, hi + 1):
            env[v] = x
            total += rec(lvl + 1, env)
        del env[v]
        return total

    return rec(0, {})


def _lp_box(system: ConstraintSystem, order: list) -> list:
    """Integer bounding box of the LP relaxation; ``[None]`` when empty."""
    rows, lo_b, hi_b = [], [], []
    for c in system.constraints:
        if not c.expr.is_affine():
            raise CountingError(f"non-linear constraint {c}")
        rows.append([c.expr.coeff(v) for v in order])
        b = -c.expr.constant
        lo_b.append(b)
        hi_b.append(b if c.rel == EQ else np.inf)
    cons = LinearConstraint(np.array(rows, dtype=float), lo_b, hi_b) if rows else ()
    out = []
    for i, v in enumerate(order):
        ends = []
        for sign in (1, -1):
            obj = np.zeros(len(order))
            obj[i] = sign
            res = milp(obj, constraints=cons, bounds=Bounds(-np.inf, np.inf))
            if res.status == 2:  # infeasible
                return [None]
            if res.status != 0:
                raise CountingError(f"unbounded polyhedron: no finite bounds for {v}")
            ends.append(sign * res.fun)
        out.append((math.ceil(ends[0] - 1e-9), math.floor(ends[1] + 1e-9)))
    return out


# factor groups and volumes ----------------------------------------------------------


def factor_groups(systems: Iterable[ConstraintSystem], n: int, extra: Iterable[Constraint] = ()) -> list[tuple]:
    """Partition dimensions and parameters into independent groups.

    Two dimensions share a group when some constraint (after k-unfolding)
    mentions both, or both mention a common parameter.  Returns
    ``(dims, params)`` pairs; dims is empty for parameter-only groups.
    """
    parent: dict = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def node(name: str):
        if len(name) > 1 and name[0] in "jk" and name[1:].isdigit():
            return ("dim", int(name[1:]))
        return ("param", name)

    for l in range(n):
        find(("dim", l))
    constraints = [c for s in systems for c in s.constraints] + list(extra)
    for c in constraints:
        nodes = [node(v) for v in sorted(c.variables())]
        for x in nodes:
            find(x)
        for x in nodes[1:]:
            parent[find(x)] = find(nodes[0])
    groups: dict = {}
    for x in list(parent):
        groups.setdefault(find(x), []).append(x)
    out = []
    for members in groups.values():
        dims = tuple(sorted(m[1] for m in members if m[0] == "dim"))
        params = tuple(sorted(m[1] for m in members if m[0] == "param"))
        out.append((dims, params))
    out.sort(key=lambda dp: (not dp[0], dp[0], dp[1]))
    return out


@dataclass(frozen=True)
class Volume:
    """Statement volume as a product of piecewise factors over independent
    parameter groups, or a concrete-only fallback system."""

    factors: tuple = ()
    fallback: ConstraintSystem | None = None

    @property
    def symbolic(self) -> bool:
        return self.fallback is None

    def evaluate(self, bindings: Mapping[str, int]) -> int:
        if self.fallback is not None:
            return count_concrete(self.fallback, bindings)
        out = 1
        for f in self.factors:
            out *= pw_eval(f, bindings)
        return out

    def flat(self) -> PiecewisePolynomial | None:
        if self.fallback is not None:
            return None
        out = PiecewisePolynomial.constant(1)
        for f in self.factors:
            out = pw_mul(out, f)
        return out


def _group_constraints(cs: ConstraintSystem, dims: tuple, params: tuple) -> list[Constraint]:
    names = {f"j{l}" for l in dims} | {f"k{l}" for l in dims} | set(params)
    out = []
    for c in cs.constraints:
        vs = c.variables()
        if vs and vs <= names:
            out.append(c)
        elif not vs and not c.truth():
            out.append(c)
    return out


def volume(
    cs: ConstraintSystem,
    tile_counts: Sequence[int],
    context: Iterable[Constraint] = (),
    groups: Sequence[tuple] | None = None,
) -> Volume:
    """Symbolic execution count of a tiled condition space."""
    n = len(tile_counts)
    context = list(context)
    if groups is None:
        groups = factor_groups([cs], n, context)
    if cs.trivially_false():
        return Volume(tuple(PiecewisePolynomial() for _ in groups))
    cs = ConstraintSystem(cs.variables, tuple(c for c in cs.constraints if not c.is_trivial()))
    factors = []
    try:
        for dims, params in groups:
            local = _group_constraints(cs, dims, params)
            ctx = [c for c in context if c.variables() and c.variables() <= set(params)]
            jvars = tuple(f"j{l}" for l in dims)
            sub = ConstraintSystem(jvars + tuple(f"k{l}" for l in dims), local)
            parts = [
                count_separable(s, ctx)
                for s in unfold_k(sub, {f"k{l}": tile_counts[l] for l in dims})
            ]
            factors.append(pw_sum(parts))
    except NonSeparable:
        return Volume(fallback=cs)
    # every constraint must have landed in exactly one group
    covered = sum(len(_group_constraints(cs, d, p)) for d, p in groups)
    if covered != len(cs.constraints):
        raise CountingError("factor groups do not partition the constraint system")
    return Volume(tuple(factors))


def combine_volumes(
    volumes: Sequence[Volume], weights: Mapping[str, Sequence[int]]
) -> dict:
    """Flat piecewise polynomials for several linear combinations of
    volumes that share one factor-group structure.

    ``weights[name][s]`` multiplies ``volumes[s]``.  Returns None entries
    when any volume fell back to concrete counting.
    """
    if any(not v.symbolic for v in volumes):
        return {name: None for name in weights}
    if not volumes:
        return {name: PiecewisePolynomial() for name in weights}
    m = len(volumes)
    ngroups = len(volumes[0].factors)
    zero = Polynomial()
    per_group = []
    for gi in range(ngroups):
        acc = [(ParamGuard(), ())]
        first = True
        for s, vol in enumerate(volumes):
            f = vol.factors[gi].pieces
            if first:
                acc = [(g, (v,)) for g, v in f]
                first = False
                continue
            width = s
            acc = overlay(
                acc,
                f,
                lambda va, vb: va + (vb,),
                lambda va: va + (zero,),
                lambda vb, w=width: (zero,) * w + (vb,),
            )
            acc = [(g, v) for g, v in merge_pieces(acc, hull_limit=12) if any(not x.is_zero() for x in v)]
        per_group.append(acc)
    results = {name: [] for name in weights}
    for combo in itertools.product(*per_group):
        guard = ParamGuard()
        for g, _ in combo:
            guard = guard & g
        prods = []
        for s in range(m):
            p = Polynomial.const(1)
            for _, vec in combo:
                p = p * vec[s]
                if p.is_zero():
                    break
            prods.append(p)
        for name, w in weights.items():
            total = Polynomial()
            for s in range(m):
                if w[s] and not prods[s].is_zero():
                    total = total + prods[s] * w[s]
            if not total.is_zero():
                results[name].append((guard, total))
    return {name: PiecewisePolynomial(p) for name, p in results.items()}
