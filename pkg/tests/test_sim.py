import numpy as np
import pytest

from polyenergy.dsl import parse_pra
from polyenergy.polycount import count_concrete
from polyenergy.sim import SimulationError, compare, execute, simulate
from polyenergy.tiling import TilingSpec, check_cover, tile_program

from conftest import CORPUS, REF_POINT, compiled, mapping, program, table

RNG = np.random.default_rng(11)
SIZES = dict(N0=4, N1=5)


def _ints(*shape):
    return RNG.integers(-9, 10, size=shape).astype(object)


def _jacobi(x, steps):
    a = x.copy()
    for _ in range(steps - 1):
        b = a.copy()
        b[1:-1] = a[:-2] + a[1:-1] + a[2:]
        a = b
    return a


def _fir(h, x):
    return np.array([sum(h[k] * x[n - k] for k in range(len(h)) if n - k >= 0) for n in range(len(x))], dtype=object)


ORACLES = {
    "gesummv": (lambda n0, n1: dict(A=_ints(n0, n1), B=_ints(n0, n1), X=_ints(n1)),
                lambda d: dict(Y=d["A"].dot(d["X"]) + d["B"].dot(d["X"]))),
    "mvt": (lambda n0, n1: dict(A=_ints(n0, n1), Y1=_ints(n1), Y2=_ints(n0)),
            lambda d: dict(X1=d["A"].dot(d["Y1"]), X2=d["A"].T.dot(d["Y2"]))),
    "bicg": (lambda n0, n1: dict(A=_ints(n0, n1), P=_ints(n1), R=_ints(n0)),
             lambda d: dict(Q=d["A"].dot(d["P"]), S=d["A"].T.dot(d["R"]))),
    "gemv": (lambda n0, n1: dict(A=_ints(n0, n1), X=_ints(n1), Z=_ints(n0)),
             lambda d: dict(Y=3 * d["A"].dot(d["X"]) + d["Z"])),
    "ger": (lambda n0, n1: dict(A=_ints(n0, n1), X=_ints(n0), Y=_ints(n1)),
            lambda d: dict(B=d["A"] + np.outer(d["X"], d["Y"]))),
    "fir": (lambda n0, n1: dict(H=_ints(n1), X=_ints(n0)),
            lambda d: dict(Y=_fir(d["H"], d["X"]))),
    "jacobi1d": (lambda n0, n1: dict(In=_ints(n1)),
                 lambda d, n0=SIZES["N0"]: dict(Out=_jacobi(d["In"], n0))),
}


@pytest.mark.parametrize("name", sorted(ORACLES))
def test_execute_matches_reference(name):
    make, expect = ORACLES[name]
    data = make(SIZES["N0"], SIZES["N1"])
    got = execute(program(name), SIZES, data)
    for var, want in expect(data).items():
        assert np.array_equal(got[var], want), var


@pytest.mark.parametrize("n2", [1, 2, 5])
def test_execute_gemm(n2):
    env = dict(N0=3, N1=4, N2=n2)
    A, B = _ints(3, n2), _ints(n2, 4)
    got = execute(program("gemm"), env, dict(A=A, B=B))
    assert np.array_equal(got["C"], A.dot(B))


def test_execute_single_iteration():
    got = execute(program("gesummv"), dict(N0=1, N1=1), dict(A=np.array([[2]]), B=np.array([[3]]), X=np.array([5])))
    assert list(got["Y"]) == [25]


@pytest.mark.parametrize("name", CORPUS)
def test_simulator_matches_region_enumeration(name):
    prog, m = program(name), mapping(f"{name}-2x2")
    tiled = tile_program(prog, m.tiling)
    env = dict(REF_POINT, N2=3, p2=3) if prog.n == 3 else dict(REF_POINT)
    env = {k: v for k, v in env.items() if k in set(prog.param_names) | set(m.tiling.symbolic_sizes())}
    counts = simulate(prog, m.tiling, table(), env, tiled)
    for t in tiled:
        assert counts.statements[t.id] == count_concrete(t.condition, env), t.id


def test_simulator_is_deterministic():
    prog, m = program("gesummv"), mapping("gesummv-2x2")
    runs = [simulate(prog, m.tiling, table(), REF_POINT, tile_program(prog, m.tiling), m.schedule).to_json() for _ in range(2)]
    assert runs[0] == runs[1]
    assert runs[0]["latency"] == 16
    assert runs[0]["energy_fJ"] == 63673980


def test_compare_flags_a_single_perturbation():
    prog, m = program("gesummv"), mapping("gesummv-2x2")
    sim = simulate(prog, m.tiling, table(), REF_POINT, tile_program(prog, m.tiling)).to_json()
    concrete = compiled("gesummv", "gesummv-2x2").evaluate(REF_POINT)
    assert compare(concrete, sim) == []
    concrete["statements"]["S7*1"] += 1
    diff = compare(concrete, sim)
    assert [(d["section"], d["key"], d["delta"]) for d in diff] == [("statements", "S7*1", 1)]


def test_compare_rejects_configuration_mismatch():
    prog, m = program("gesummv"), mapping("gesummv-2x2")
    sim = simulate(prog, m.tiling, table(), REF_POINT).to_json()
    other = compiled("gesummv", "gesummv-2x2").evaluate(dict(REF_POINT, N1=6))
    with pytest.raises(SimulationError, match="configuration mismatch"):
        compare(other, sim)


def test_simulator_rejects_uncovered_and_unbound():
    prog, m = program("gesummv"), mapping("gesummv-2x2")
    with pytest.raises(SimulationError, match="does not cover"):
        simulate(prog, m.tiling, table(), dict(REF_POINT, N1=7))
    with pytest.raises(SimulationError, match="unbound"):
        simulate(prog, m.tiling, table(), dict(N0=4, N1=5))


def test_simulator_reports_unknown_displacements():
    # a displacement missing from the tiled list shows up under a '?' id
    prog = program("gesummv")
    spec = TilingSpec((2, 3), (2, 2))
    tiled = [t for t in tile_program(prog, spec) if t.id != "S7*2"]
    counts = simulate(prog, spec, table(), dict(N0=4, N1=5), tiled)
    assert counts.statements["S7*?0:(0, -1)"] == 4


def test_input_reuse_warning():
    prog = parse_pra("params N0 N1;\nspace (i0, i1): 0 <= i0 < N0, 0 <= i1 < N1;\n"
                     "input X; output Y;\nS1: Y[i0,i1] = X[i1];\n")
    counts = simulate(prog, TilingSpec((2, 2), (1, 1)), table(), dict(N0=2, N1=2))
    assert counts.warnings and "X" in counts.warnings[0]


def test_cover_grid_agreement_gesummv():
    prog, m = program("gesummv"), mapping("gesummv-2x2")
    c = compiled("gesummv", "gesummv-2x2")
    tiled = tile_program(prog, m.tiling)
    for N0 in range(1, 7):
        for N1 in range(1, 7):
            for p0 in range(1, 4):
                for p1 in range(1, 4):
                    env = dict(N0=N0, N1=N1, p0=p0, p1=p1)
                    if not check_cover(prog, m.tiling, env):
                        continue
                    sim = simulate(prog, m.tiling, table(), env, tiled).to_json()
                    assert compare(c.evaluate(env), sim) == [], env
