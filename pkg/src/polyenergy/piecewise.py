"""Piecewise polynomials: disjoint affine parameter guards, each carrying a
polynomial value, zero outside every guard."""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Sequence

from .constraints import Constraint
from .guards import TRUE_GUARD, ParamGuard, subtract
from .polynomial import Polynomial, Scalar

Piece = tuple  # (ParamGuard, Polynomial)


class PiecewisePolynomial:
    __slots__ = ("pieces",)

    def __init__(self, pieces: Iterable[Piece] = ()):
        self.pieces = tuple(
            (g, Polynomial.lift(v)) for g, v in pieces if not g.is_false and not Polynomial.lift(v).is_zero()
        )

    @classmethod
    def constant(cls, value: Scalar, guard: ParamGuard = TRUE_GUARD) -> "PiecewisePolynomial":
        return cls([(guard, Polynomial.lift(value))])

    @property
    def parameters(self) -> frozenset:
        out = set()
        for g, v in self.pieces:
            out |= g.variables() | v.variables()
        return frozenset(out)

    def __len__(self) -> int:
        return len(self.pieces)

    def __add__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        return pw_add(self, other)

    def __mul__(self, other) -> "PiecewisePolynomial":
        if isinstance(other, int):
            return pw_scale(self, other)
        return pw_mul(self, other)

    __rmul__ = __mul__

    def __call__(self, bindings: Mapping[str, int]) -> int:
        return pw_eval(self, bindings)

    def canonical(self) -> list:
        """Piece list sorted for diff-stable rendering."""
        return sorted(
            ((str(g), str(v)) for g, v in self.pieces), key=lambda gv: (gv[1], gv[0])
        )

    def __str__(self) -> str:
        if not self.pieces:
            return "0"
        return "\n".join(f"{v}  if {g}" for g, v in self.canonical())

    def __repr__(self) -> str:
        return f"PiecewisePolynomial({len(self.pieces)} pieces)"

    def to_json(self) -> list:
        return [{"guard": [str(c) for c in g.constraints], "value": str(v)} for g, v in self.pieces]

    @classmethod
    def from_json(cls, data: list) -> "PiecewisePolynomial":
        from .dsl import parse_constraint_text, parse_polynomial

        pieces = []
        for item in data:
            cs = [parse_constraint_text(s) for s in item["guard"]]
            pieces.append((ParamGuard(cs, _canonical=True), parse_polynomial(item["value"])))
        return cls(pieces)


ZERO_PW = PiecewisePolynomial()


def pw_eval(a: PiecewisePolynomial, bindings: Mapping[str, int]) -> int:
    """Value at a fully bound parameter point (0 outside every guard).

    All guards are tested so the cost does not depend on which piece
    matches; a point inside two guards is an error.
    """
    hit = None
    for g, v in a.pieces:
        if g.holds(bindings):
            if hit is not None:
                raise ValueError(f"guards overlap at {dict(bindings)}")
            hit = v
    if hit is None:
        return 0
    return int(hit.evaluate(bindings))


def pw_scale(a: PiecewisePolynomial, c: int) -> PiecewisePolynomial:
    if c == 0:
        return ZERO_PW
    return PiecewisePolynomial((g, v * c) for g, v in a.pieces)


def overlay(a: Sequence[Piece], b: Sequence[Piece], both, only_a, only_b) -> list[Piece]:
    """Common refinement of two disjoint piece lists.

    ``both(va, vb)``, ``only_a(va)`` and ``only_b(vb)`` build the value of
    each region of the refinement.
    """
    out: list[Piece] = []
    for ga, va in a:
        for gb, vb in b:
            g = ga & gb
            if not g.is_false and g.satisfiable():
                out.append((g, both(va, vb)))
    for src, other, make in ((a, b, only_a), (b, a, only_b)):
        for g, v in src:
            regions = [g]
            for go, _ in other:
                regions = [r for reg in regions for r in subtract(reg, go)]
                if not regions:
                    break
            out.extend((r, make(v)) for r in regions)
    return out


def _add_pieces(a: Sequence[Piece], b: Sequence[Piece]) -> list[Piece]:
    return overlay(a, b, lambda x, y: x + y, lambda x: x, lambda y: y)


def pw_add(a: PiecewisePolynomial, b: PiecewisePolynomial) -> PiecewisePolynomial:
    if not a.pieces:
        return b
    if not b.pieces:
        return a
    return PiecewisePolynomial(merge_pieces(_add_pieces(a.pieces, b.pieces)))


def pw_sum(items: Iterable[PiecewisePolynomial]) -> PiecewisePolynomial:
    total = ZERO_PW
    for x in items:
        total = pw_add(total, x)
    return total


def pw_mul(a: PiecewisePolynomial, b: PiecewisePolynomial) -> PiecewisePolynomial:
    """Pointwise product; guards are intersected and empty ones dropped."""
    disjoint = not (a.parameters & b.parameters)
    out = []
    for (ga, va), (gb, vb) in itertools.product(a.pieces, b.pieces):
        g = ga & gb
        if g.is_false or (not disjoint and not g.satisfiable()):
            continue
        out.append((g, va * vb))
    return PiecewisePolynomial(out)


def restrict(a: PiecewisePolynomial, guard: ParamGuard) -> PiecewisePolynomial:
    out = []
    for g, v in a.pieces:
        h = g & guard
        if not h.is_false and h.satisfiable():
            out.append((h, v))
    return PiecewisePolynomial(out)


# canonicalization -------------------------------------------------------


def _complement_merge(g1: ParamGuard, g2: ParamGuard) -> ParamGuard | None:
    s1, s2 = set(g1.constraints), set(g2.constraints)
    only1, only2 = s1 - s2, s2 - s1
    if len(only1) != 1 or len(only2) != 1:
        return None
    (c1,), (c2,) = only1, only2
    common = s1 & s2
    if c2 in c1.negations() and len(c1.negations()) == 1:
        return ParamGuard(common)
    # e == 0 next to e >= 1 (or e <= -1) unions to a half-space
    for eqc, gec in ((c1, c2), (c2, c1)):
        if eqc.rel == "==" and gec in eqc.negations():
            widened = Constraint(gec.expr + 1, ">=").normalized()
            return ParamGuard(common | {widened})
    return None


def _hull_merge(g1: ParamGuard, g2: ParamGuard) -> ParamGuard | None:
    hull = [c for c in g1.constraints if g2.implies(c)]
    hull += [c for c in g2.constraints if g1.implies(c)]
    h = ParamGuard(hull)
    for r in subtract(h, g1):
        if subtract(r, g2):
            return None
    return h


def _agrees(va, vb, gb: ParamGuard) -> bool:
    """True when value ``va`` equals ``vb`` everywhere on ``gb``."""
    if isinstance(va, tuple):
        return all(_agrees(x, y, gb) for x, y in zip(va, vb))
    diff = va - vb
    if diff.is_zero():
        return True
    if diff.is_constant() or not diff.is_affine():
        return False
    return gb.implies(Constraint.eq(diff, 0))


def merge_pieces(pieces: Iterable[Piece], hull_limit: int = 24) -> list[Piece]:
    """Merge neighbouring pieces whose union is convex and whose values
    coincide on the union (equal polynomials, or one value agreeing with
    the other on the smaller piece)."""
    items = [(g.minimized(), v) for g, v in pieces if not (isinstance(v, Polynomial) and v.is_zero())]
    changed = True
    while changed and len(items) > 1:
        changed = False
        small = len(items) <= hull_limit
        for i, j in itertools.combinations(range(len(items)), 2):
            (gi, vi), (gj, vj) = items[i], items[j]
            if vi == vj:
                value = vi
            elif not small:
                continue
            elif _agrees(vi, vj, gj):
                value = vi
            elif _agrees(vj, vi, gi):
                value = vj
            else:
                continue
            m = _complement_merge(gi, gj)
            if m is None and small:
                m = _hull_merge(gi, gj)
            if m is not None:
                items = [it for k, it in enumerate(items) if k not in (i, j)]
                items.append((m.minimized(), value))
                changed = True
                break
    return items
