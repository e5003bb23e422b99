"""Multivariate polynomials with integer coefficients over named variables.

Affine expressions, constraint left-hand sides, schedule entries and
counting results all share this one representation.  A monomial is a
sorted tuple of ``(name, exponent)`` pairs; the empty tuple is the
constant monomial.
"""

from __future__ import annotations

from math import gcd
from typing import Iterable, Mapping, Union

Monomial = tuple  # tuple[tuple[str, int], ...]
Scalar = Union[int, "Polynomial"]

_ONE: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for name, e in b:
        exps[name] = exps.get(name, 0) + e
    return tuple(sorted(exps.items()))


def _mono_key(m: Monomial):
    # total degree descending, then lexicographic on names
    return (-sum(e for _, e in m), m)


class Polynomial:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, int] | None = None):
        self._terms = {m: c for m, c in (terms or {}).items() if c}
        self._hash = None

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, c: int) -> "Polynomial":
        return cls({_ONE: int(c)})

    @classmethod
    def var(cls, name: str, coeff: int = 1) -> "Polynomial":
        return cls({((name, 1),): coeff})

    @classmethod
    def lift(cls, x: Scalar) -> "Polynomial":
        if isinstance(x, Polynomial):
            return x
        if isinstance(x, str) and x.isidentifier():
            return cls.var(x)  # a bare parameter name
        if isinstance(x, bool) or not isinstance(x, int):
            raise TypeError(f"cannot lift {x!r} to a polynomial")
        return cls.const(x)

    @classmethod
    def linear(cls, coeffs: Mapping[str, int], constant: int = 0) -> "Polynomial":
        terms = {((v, 1),): c for v, c in coeffs.items()}
        terms[_ONE] = constant
        return cls(terms)

    # inspection ---------------------------------------------------------
    @property
    def terms(self) -> dict:
        return self._terms

    def variables(self) -> frozenset:
        return frozenset(name for m in self._terms for name, _ in m)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    @property
    def constant(self) -> int:
        return self._terms.get(_ONE, 0)

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=0)

    def is_affine(self) -> bool:
        return self.degree() <= 1

    def coeff(self, name: str) -> int:
        """Coefficient of the linear monomial ``name``."""
        return self._terms.get(((name, 1),), 0)

    def linear_part(self) -> dict:
        """Map of variable to coefficient; only valid for affine polynomials."""
        return {m[0][0]: c for m, c in self._terms.items() if m}

    def content(self) -> int:
        """gcd of the non-constant coefficients (0 if constant)."""
        g = 0
        for m, c in self._terms.items():
            if m:
                g = gcd(g, c)
        return g

    def split_by(self, names: Iterable[str]) -> tuple["Polynomial", "Polynomial"]:
        """Split into (terms touching any of ``names``, the rest)."""
        names = set(names)
        inside, outside = {}, {}
        for m, c in self._terms.items():
            target = inside if any(n in names for n, _ in m) else outside
            target[m] = c
        return Polynomial(inside), Polynomial(outside)

    def as_int(self) -> int:
        if not self.is_constant():
            raise ValueError(f"polynomial {self} is not constant")
        return self.constant

    # arithmetic ---------------------------------------------------------
    def __add__(self, other: Scalar) -> "Polynomial":
        other = Polynomial.lift(other)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, 0) + c
        return Polynomial(terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Scalar) -> "Polynomial":
        return self + (-Polynomial.lift(other))

    def __rsub__(self, other: Scalar) -> "Polynomial":
        return Polynomial.lift(other) - self

    def __mul__(self, other: Scalar) -> "Polynomial":
        if isinstance(other, int) and not isinstance(other, bool):
            return Polynomial({m: c * other for m, c in self._terms.items()})
        other = Polynomial.lift(other)
        terms: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                terms[m] = terms.get(m, 0) + c1 * c2
        return Polynomial(terms)

    __rmul__ = __mul__

    def exact_div(self, k: int) -> "Polynomial":
        if any(c % k for c in self._terms.values()):
            raise ValueError(f"{self} is not divisible by {k}")
        return Polynomial({m: c // k for m, c in self._terms.items()})

    # evaluation ---------------------------------------------------------
    def subs(self, bindings: Mapping[str, Scalar]) -> "Polynomial":
        """Substitute integers or polynomials for some variables."""
        if not bindings:
            return self
        out = Polynomial()
        for m, c in self._terms.items():
            term = Polynomial.const(c)
            rest = []
            for name, e in m:
                if name in bindings:
                    value = Polynomial.lift(bindings[name])
                    for _ in range(e):
                        term = term * value
                else:
                    rest.append((name, e))
            if rest:
                term = term * Polynomial({tuple(rest): 1})
            out = out + term
        return out

    def evaluate(self, env: Mapping[str, object]):
        """Evaluate with every variable bound.

        Values may be ints or numpy arrays; the result has the same kind.
        """
        total = 0
        for m, c in self._terms.items():
            term = c
            for name, e in m:
                try:
                    v = env[name]
                except KeyError:
                    raise KeyError(f"unbound variable {name!r} in {self}") from None
                term = term * (v if e == 1 else v**e)
            total = total + term
        return total

    # comparison / hashing -----------------------------------------------
    def _key(self):
        return tuple(sorted(self._terms.items(), key=lambda mc: _mono_key(mc[0])))

    def __eq__(self, other) -> bool:
        if isinstance(other, int) and not isinstance(other, bool):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __lt__(self, other: "Polynomial") -> bool:
        return self._key() < other._key()

    # rendering ----------------------------------------------------------
    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m, c in sorted(self._terms.items(), key=lambda mc: _mono_key(mc[0])):
            factors = [n if e == 1 else f"{n}^{e}" for n, e in m]
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(("+ " if c > 0 else "- ") + body)
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"Polynomial({str(self)!r})"


def poly(x: Scalar | str) -> Polynomial:
    """Convenience: ints, polynomials, and expression strings."""
    if isinstance(x, str):
        from .dsl import parse_polynomial

        return parse_polynomial(x)
    return Polynomial.lift(x)


ZERO = Polynomial()
ONE = Polynomial.const(1)
