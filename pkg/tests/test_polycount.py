import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyenergy.constraints import Constraint, ConstraintSystem
from polyenergy.guards import ParamGuard
from polyenergy.piecewise import PiecewisePolynomial, pw_add, pw_eval, pw_scale
from polyenergy.polycount import count_concrete, count_separable, unfold_k, volume
from polyenergy.polynomial import Polynomial
from polyenergy.tiling import TilingSpec, check_cover, tile_program

from conftest import REF_POINT, program

SPEC = TilingSpec(("p0", "p1"), (2, 2))
GRID = [
    dict(N0=N0, N1=N1, p0=p0, p1=p1)
    for N0, N1, p0, p1 in itertools.product(range(1, 8), range(1, 8), range(1, 5), range(1, 5))
]


def _tiled(spec=SPEC):
    return {t.id: t for t in tile_program(program("gesummv"), spec)}


def _vol(sid):
    t = _tiled()[sid]
    return volume(t.condition, SPEC.tile_counts)


def test_unfold_counts():
    assert len(unfold_k(_tiled()["S7*1"].condition, (2, 2))) == 4
    one = TilingSpec(("p0", "p1"), (1, 1))
    assert len(unfold_k(_tiled(one)["S7*1"].condition, (1, 1))) == 1
    big = TilingSpec(("p0", "p1"), (50, 50))
    assert len(unfold_k(_tiled(big)["S3"].condition, (50, 50))) == 2500


def test_unfolded_systems_are_affine():
    for system in unfold_k(_tiled()["S7*2"].condition, (2, 2)):
        assert all(c.expr.is_affine() for c in system.constraints)


def test_reference_point_counts():
    t = _tiled()
    assert [count_concrete(t[s].condition, REF_POINT) for s in ("S7*1", "S7*2")] == [12, 4]
    # too-small tiles cannot cover the space; the counts then miss points
    assert count_concrete(t["S7*2"].condition, dict(N0=4, N1=5, p0=2, p1=5)) == 0
    assert _vol("S7*1").evaluate(REF_POINT) == 12
    assert _vol("S7*2").evaluate(REF_POINT) == 4


def test_s7_piece_with_one_short_tile():
    # tile 0 holds p1 - 1 = N1 - 2 forwarded reads, tile 1 starts with a transfer
    v = _vol("S7*1")
    for N0 in range(1, 6):
        for N1 in range(3, 9):
            env = dict(N0=N0, N1=N1, p0=N0, p1=N1 - 1)
            assert v.evaluate(env) == N0 * (N1 - 2)


def test_closed_forms_over_grid():
    s3, s11 = _vol("S3"), _vol("S11")
    for env in GRID:
        if check_cover(program("gesummv"), SPEC, env):
            assert s3.evaluate(env) == env["N0"] * env["N1"]
            assert s11.evaluate(env) == env["N0"]
    assert s3.evaluate(REF_POINT) == 20


@pytest.mark.parametrize("sid", sorted(_tiled()))
def test_volume_matches_enumeration(sid):
    t = _tiled()[sid]
    v = volume(t.condition, SPEC.tile_counts)
    assert v.symbolic
    for env in GRID:
        assert v.evaluate(env) == count_concrete(t.condition, env), env


def test_unfold_is_sound():
    t = _tiled()["S9*2"]
    parts = unfold_k(t.condition, (2, 2))
    for env in GRID[::7]:
        assert sum(count_concrete(s, env) for s in parts) == count_concrete(t.condition, env)


def _factor_pieces():
    for t in _tiled().values():
        for f in volume(t.condition, SPEC.tile_counts).factors:
            yield f


def test_guards_are_disjoint_and_values_nonnegative():
    rng = random.Random(3)
    factors = list(_factor_pieces())
    for _ in range(10_000):
        env = {k: rng.randint(-2, 12) for k in ("N0", "N1", "p0", "p1")}
        f = rng.choice(factors)
        hits = [v for g, v in f.pieces if g.holds(env)]
        assert len(hits) <= 1
        if env["p0"] >= 1 and env["p1"] >= 1 and hits:
            assert hits[0].evaluate(env) >= 0


def test_count_separable_min_max_cases():
    # 0 <= x < min(a, b)
    x = Polynomial.var("x")
    cs = ConstraintSystem(("x",), (Constraint.ge(x, 0), Constraint.lt(x, "a"), Constraint.lt(x, "b")))
    pw = count_separable(cs)
    for a, b in itertools.product(range(-3, 6), repeat=2):
        assert pw_eval(pw, dict(a=a, b=b)) == max(0, min(a, b))


def test_coupled_system_falls_back_to_enumeration():
    x, y = Polynomial.var("j0"), Polynomial.var("j1")
    cs = ConstraintSystem(("j0", "j1"), (Constraint.ge(x, 0), Constraint.ge(y, 0), Constraint.lt(x + y, "N0")))
    v = volume(cs, (1, 1), groups=[((0, 1), ("N0",))])
    assert not v.symbolic
    assert v.evaluate(dict(N0=4)) == 10


# piecewise algebra ------------------------------------------------------------

PARAMS = ("a", "b")
affine = st.builds(
    lambda ca, cb, c0: Polynomial.var("a", ca) + Polynomial.var("b", cb) + c0,
    st.integers(-2, 2), st.integers(-2, 2), st.integers(-4, 4),
)


@st.composite
def piecewise(draw):
    # disjoint guards by slicing one parameter into intervals
    cuts = sorted(set(draw(st.lists(st.integers(-5, 5), min_size=1, max_size=4))))
    pieces = []
    a = Polynomial.var("a")
    for lo, hi in zip(cuts, cuts[1:] + [None]):
        cs = [Constraint.ge(a, lo)]
        if hi is not None:
            cs.append(Constraint.lt(a, hi))
        if draw(st.booleans()):
            cs.append(Constraint.ge(Polynomial.var("b"), draw(st.integers(-3, 3))))
        pieces.append((ParamGuard(cs), draw(affine)))
    return PiecewisePolynomial(pieces)


POINTS = [dict(a=a, b=b) for a in range(-7, 8) for b in range(-5, 6)]


def _same(f, g):
    return all(pw_eval(f, e) == pw_eval(g, e) for e in POINTS)


@settings(max_examples=60, deadline=None)
@given(piecewise(), piecewise())
def test_add_is_pointwise_and_commutative(f, g):
    h = pw_add(f, g)
    assert all(pw_eval(h, e) == pw_eval(f, e) + pw_eval(g, e) for e in POINTS)
    assert _same(h, pw_add(g, f))


@settings(max_examples=30, deadline=None)
@given(piecewise(), piecewise(), piecewise())
def test_add_is_associative(f, g, h):
    assert _same(pw_add(pw_add(f, g), h), pw_add(f, pw_add(g, h)))


@settings(max_examples=40, deadline=None)
@given(piecewise(), st.integers(-5, 5))
def test_identity_and_scaling(f, c):
    assert _same(pw_add(f, PiecewisePolynomial()), f)
    scaled = pw_scale(f, c)
    assert all(pw_eval(scaled, e) == c * pw_eval(f, e) for e in POINTS)


def test_json_round_trip():
    for f in list(_factor_pieces())[:20]:
        g = PiecewisePolynomial.from_json(f.to_json())
        assert g.canonical() == f.canonical()
