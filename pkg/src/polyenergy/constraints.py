"""Affine constraints and conjunctive constraint systems.

Every constraint is stored in canonical form ``expr >= 0`` or ``expr == 0``
with integer tightening applied, so two constraints describing the same
integer half-space compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .polynomial import Polynomial, Scalar

GE = ">="
EQ = "=="


@dataclass(frozen=True)
class Constraint:
    expr: Polynomial
    rel: str = GE

    def __post_init__(self):
        if self.rel not in (GE, EQ):
            raise ValueError(f"bad relation {self.rel!r}")

    # canonical constructors -------------------------------------------
    @staticmethod
    def ge(lhs: Scalar, rhs: Scalar = 0) -> "Constraint":
        """``lhs >= rhs``."""
        return Constraint(Polynomial.lift(lhs) - rhs, GE).normalized()

    @staticmethod
    def le(lhs: Scalar, rhs: Scalar) -> "Constraint":
        return Constraint.ge(rhs, lhs)

    @staticmethod
    def gt(lhs: Scalar, rhs: Scalar) -> "Constraint":
        return Constraint(Polynomial.lift(lhs) - rhs - 1, GE).normalized()

    @staticmethod
    def lt(lhs: Scalar, rhs: Scalar) -> "Constraint":
        return Constraint.gt(rhs, lhs)

    @staticmethod
    def eq(lhs: Scalar, rhs: Scalar = 0) -> "Constraint":
        return Constraint(Polynomial.lift(lhs) - rhs, EQ).normalized()

    def normalized(self) -> "Constraint":
        e = self.expr
        g = e.content()
        if g == 0:
            return self  # constant constraint
        if self.rel == GE:
            if g > 1:
                terms = {m: c // g for m, c in e.terms.items() if m}
                terms[()] = e.constant // g  # floor: integer tightening
                e = Polynomial(terms)
            return Constraint(e, GE)
        if e.constant % g:
            return FALSE
        if g > 1:
            e = e.exact_div(g)
        lead = min((m for m in e.terms if m), key=lambda m: (-len(m), m))
        if e.terms[lead] < 0:
            e = -e
        return Constraint(e, EQ)

    # queries ----------------------------------------------------------
    def variables(self) -> frozenset:
        return self.expr.variables()

    def is_trivial(self) -> bool:
        return self.expr.is_constant()

    def truth(self) -> bool:
        """Truth value of a constant constraint."""
        c = self.expr.constant
        return c >= 0 if self.rel == GE else c == 0

    def holds(self, env: Mapping[str, object]):
        v = self.expr.evaluate(env)
        return v >= 0 if self.rel == GE else v == 0

    def subs(self, bindings: Mapping[str, Scalar]) -> "Constraint":
        return Constraint(self.expr.subs(bindings), self.rel).normalized()

    def negations(self) -> list["Constraint"]:
        """Disjoint constraints whose union is the integer complement."""
        if self.rel == GE:
            return [Constraint(-self.expr - 1, GE).normalized()]
        return [
            Constraint(self.expr - 1, GE).normalized(),
            Constraint(-self.expr - 1, GE).normalized(),
        ]

    def split_eq(self) -> list["Constraint"]:
        if self.rel == GE:
            return [self]
        return [Constraint(self.expr, GE), Constraint(-self.expr, GE).normalized()]

    def sort_key(self):
        return (self.rel, self.expr._key())

    def __str__(self) -> str:
        return f"{self.expr} {self.rel} 0"


FALSE = Constraint(Polynomial.const(-1), GE)
TRUE = Constraint(Polynomial.const(0), GE)


@dataclass(frozen=True)
class ConstraintSystem:
    """A conjunction of constraints over declared variables.

    Identifiers that are not declared variables are parameters.
    """

    variables: tuple = ()
    constraints: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @property
    def parameters(self) -> frozenset:
        names = set()
        for c in self.constraints:
            names |= c.variables()
        return frozenset(names - set(self.variables))

    def conjoin(self, *more: Iterable[Constraint]) -> "ConstraintSystem":
        cs = list(self.constraints)
        for group in more:
            cs.extend(group)
        return ConstraintSystem(self.variables, cs)

    def subs(self, bindings: Mapping[str, Scalar]) -> "ConstraintSystem":
        return ConstraintSystem(
            tuple(v for v in self.variables if v not in bindings),
            tuple(c.subs(bindings) for c in self.constraints),
        )

    def holds(self, env: Mapping[str, object]):
        ok = True
        for c in self.constraints:
            ok = ok & c.holds(env)
        return ok

    def trivially_false(self) -> bool:
        return any(c.is_trivial() and not c.truth() for c in self.constraints)

    def __str__(self) -> str:
        body = " and ".join(str(c) for c in self.constraints) or "true"
        return f"{{ ({', '.join(self.variables)}) : {body} }}"
