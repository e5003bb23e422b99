import numpy as np
import pytest

from polyenergy.polynomial import Polynomial, poly


def test_arithmetic_and_rendering():
    p0, p1 = poly("p0"), poly("p1")
    L = (p0 * p1 - 1) + p0 * 1 + (p0 * (p1 - 1) + 1) * 1 + 4
    assert str(L) == "2*p0*p1 + 4"
    assert L.evaluate({"p0": 2, "p1": 3}) == 16
    assert (p0 - p0).is_zero()
    assert str(-(p1 - 1)) == "-p1 + 1"


def test_degree_and_affinity():
    p = poly("N0") * poly("p1") + 3
    assert p.degree() == 2
    assert not p.is_affine()
    assert (poly("N0") - 2 * poly("p0") + 1).is_affine()


def test_subs_partial_and_full():
    p = poly("j0") + poly("p0") * poly("k0")
    q = p.subs({"k0": 1})
    assert q == poly("j0") + poly("p0")
    assert p.subs({"k0": 0}) == poly("j0")
    assert p.subs({"j0": 1, "p0": 2, "k0": 3}).as_int() == 7


def test_evaluate_vectorised():
    p = poly("i0") * 2 - poly("N0")
    out = p.evaluate({"i0": np.arange(4), "N0": 3})
    assert list(out) == [-3, -1, 1, 3]


def test_exact_div_and_content():
    p = 4 * poly("p0") - 6
    assert p.content() == 4  # gcd of the non-constant coefficients
    assert p.exact_div(2) == 2 * poly("p0") - 3
    with pytest.raises(ValueError):
        (2 * poly("p0") + 1).exact_div(2)


def test_equality_and_hash_are_structural():
    a = poly("x") + poly("y")
    b = poly("y") + poly("x")
    assert a == b and hash(a) == hash(b)
    assert Polynomial.const(0) == Polynomial()
