import itertools

import pytest

from polyenergy.dsl import parse_pra
from polyenergy.polycount import count_concrete
from polyenergy.sim import simulate
from polyenergy.tiling import (
    COMPUTATIONAL,
    MEMORY,
    TilingError,
    TilingSpec,
    check_cover,
    enumerate_gammas,
    exact_gammas_1d,
    gamma_sets_consistent,
    tile_program,
)

from conftest import REF_POINT, mapping, program, table

SPEC = TilingSpec(("p0", "p1"), (2, 2))


def _by_id(tiled):
    return {t.id: t for t in tiled}


@pytest.mark.parametrize(
    "d,sizes,expected",
    [
        ((0, 1), ("p0", "p1"), [(0, 0), (0, -1)]),
        ((1, 0), ("p0", "p1"), [(0, 0), (-1, 0)]),
        ((1, -1), ("p0", "p1"), [(0, 1), (0, 0), (-1, 1), (-1, 0)]),
        ((0, 0), ("p0", "p1"), [(0, 0)]),
        ((0, 2), (4, 1), [(0, -2)]),  # p=1: the source is always two tiles back
    ],
)
def test_gamma_examples(d, sizes, expected):
    assert enumerate_gammas(d, sizes) == expected


def test_exact_gamma_sets_are_complete():
    # every offset j - d with j in [0, p) lands in a tile listed by the set
    for d in range(-2, 3):
        for p in range(1, 7):
            got = set(exact_gammas_1d(d, p))
            reached = {(j - d) // p for j in range(p)}
            assert reached <= got
            assert all(-p < p * g + d < p for g in got)


def test_symbolic_gamma_set_needs_declared_minimum():
    with pytest.raises(TilingError, match="unresolvable gamma set"):
        enumerate_gammas((2,), ("p0",))
    assert enumerate_gammas((2,), ("p0",), {"p0": 2}) == [(0,), (-1,)]


def test_s7_decomposition():
    tiled = _by_id(tile_program(program("gesummv"), SPEC))
    s1, s2 = tiled["S7*1"], tiled["S7*2"]
    assert (s1.gamma, s2.gamma) == ((0, 0), (0, -1))
    assert [str(x) for x in s1.dJ] == ["0", "1"] and s1.dK == (0, 0)
    assert [str(x) for x in s2.dJ] == ["0", "-p1 + 1"] and s2.dK == (0, 1)
    assert [str(x) for x in s2.dependence] == ["0", "-p1 + 1", "0", "1"]
    assert count_concrete(s1.condition, REF_POINT) == 12
    assert count_concrete(s2.condition, REF_POINT) == 4


def test_s2_decomposition_splits_along_i0():
    tiled = _by_id(tile_program(program("gesummv"), SPEC))
    assert tiled["S2*2"].gamma == (-1, 0)
    assert (count_concrete(tiled["S2*1"].condition, REF_POINT), count_concrete(tiled["S2*2"].condition, REF_POINT)) == (10, 5)


def test_gesummv_statement_count():
    tiled = tile_program(program("gesummv"), SPEC)
    assert sum(t.kind == COMPUTATIONAL for t in tiled) == 11
    assert sum(t.kind == MEMORY for t in tiled) == 19
    assert len(tiled) == 30


def test_trivial_program_tiles_to_two_statements():
    p = parse_pra("params N;\nspace (i): 0 <= i < N;\ninput X; output Y;\nS1: Y[i] = X[i];\n")
    tiled = tile_program(p, TilingSpec(("p0",), (2,)))
    assert [(t.id, t.kind) for t in tiled] == [("S1", COMPUTATIONAL), ("S1*1", MEMORY)]


def test_displacement_identity():
    # d_J + P*d_K reproduces the original dependence
    for name in ("gesummv", "gemm", "jacobi1d", "fir"):
        m = mapping(f"{name}-2x2")
        for t in tile_program(program(name), m.tiling):
            if t.kind != MEMORY:
                continue
            back = [dj + p * dk for dj, p, dk in zip(t.dJ, m.tiling.tile_sizes, t.dK)]
            assert all(b.is_constant() and b.constant == d for b, d in zip(back, t.ref.dependence))


def test_decomposition_is_a_bijection():
    # each computational instance is served exactly once per reference
    for name in ("gesummv", "jacobi1d"):
        prog, m = program(name), mapping(f"{name}-2x2")
        tiled = tile_program(prog, m.tiling)
        for N0, N1, p0, p1 in itertools.product(range(1, 6), range(1, 6), range(1, 4), range(1, 4)):
            env = dict(N0=N0, N1=N1, p0=p0, p1=p1)
            if not check_cover(prog, m.tiling, env):
                continue
            comp = {t.origin: count_concrete(t.condition, env) for t in tiled if t.kind == COMPUTATIONAL}
            for s in prog.statements:
                for r_idx in range(len(s.refs)):
                    served = sum(
                        count_concrete(t.condition, env)
                        for t in tiled
                        if t.kind == MEMORY and t.origin == s.label and t.ref_index == r_idx
                    )
                    assert served == comp[s.label], (name, env, s.label, r_idx)


def test_single_tile_has_no_inter_tile_traffic():
    prog = program("gesummv")
    spec = TilingSpec((4, 5), (1, 1))
    tiled = tile_program(prog, spec)
    counts = simulate(prog, spec, table(), dict(N0=4, N1=5), tiled)
    crossing = [t.id for t in tiled if t.kind == MEMORY and any(t.gamma)]
    assert crossing and all(counts.statements[sid] == 0 for sid in crossing)
    # the only ID accesses left are the ones inside the input composite
    assert counts.classes["ID"] == counts.classes["IOb"] - counts.classes["OD"] == 45
    assert counts.classes["FD"] > 0


def test_check_cover():
    prog = program("gesummv")
    assert check_cover(prog, SPEC, REF_POINT)
    assert check_cover(prog, SPEC, dict(N0=4, N1=6, p0=2, p1=3))
    assert not check_cover(prog, SPEC, dict(N0=5, N1=5, p0=2, p1=3))
    assert not check_cover(prog, SPEC, dict(N0=4, N1=5, p0=2, p1=2))


def test_gamma_consistency_for_concrete_one():
    prog = program("jacobi1d")
    m = mapping("jacobi1d-2x2")
    assert gamma_sets_consistent(prog, m.tiling, dict(N0=4, N1=4, p0=2, p1=2)) == []


def test_dimension_mismatch():
    with pytest.raises(TilingError, match="dimension mismatch"):
        tile_program(program("gemm"), SPEC)
