from functools import lru_cache
from pathlib import Path

import pytest

from polyenergy.analysis import analyze
from polyenergy.dsl import parse_pra
from polyenergy.energy import load_energy_table
from polyenergy.mapping import load_mapping

BENCH = Path(__file__).resolve().parents[1] / "src" / "polyenergy" / "benchmarks"
CORPUS = ["gesummv", "gemm", "mvt", "bicg", "gemv", "ger", "fir", "jacobi1d"]
REF_POINT = dict(N0=4, N1=5, p0=2, p1=3)


@lru_cache(maxsize=None)
def program(name: str):
    return parse_pra((BENCH / f"{name}.pra").read_text())


@lru_cache(maxsize=None)
def mapping(name: str):
    return load_mapping(BENCH / f"{name}.map")


@lru_cache(maxsize=None)
def table():
    return load_energy_table()


@lru_cache(maxsize=None)
def analysis(prog: str, mp: str):
    return analyze(program(prog), mapping(mp), table())


@lru_cache(maxsize=None)
def compiled(prog: str, mp: str):
    return analysis(prog, mp).compiled()


def default_map(name: str) -> str:
    return f"{name}-2x2"


@pytest.fixture
def gesummv():
    return program("gesummv")


@pytest.fixture(autouse=True)
def _no_table_env(monkeypatch):
    monkeypatch.delenv("POLYENERGY_ENERGY_TABLE", raising=False)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
