"""Intra-iteration offsets, single-iteration latency and global latency."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .piecewise import PiecewisePolynomial
from .polynomial import Polynomial
from .pra import RDG, find_cycle, rdg_zero_preds
from .tiling import TilingSpec


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleSpec:
    lambdaJ: tuple
    lambdaK: tuple
    pi: int = 1
    latencies: Mapping = field(default_factory=dict)  # label -> cycles, default 1

    def __post_init__(self):
        object.__setattr__(self, "lambdaJ", tuple(Polynomial.lift(x) for x in self.lambdaJ))
        object.__setattr__(self, "lambdaK", tuple(Polynomial.lift(x) for x in self.lambdaK))
        object.__setattr__(self, "latencies", dict(self.latencies))
        if self.pi < 1:
            raise ScheduleError(f"initiation interval must be >= 1, got {self.pi}")
        for label, w in self.latencies.items():
            if int(w) < 1:
                raise ScheduleError(f"latency of {label} must be >= 1, got {w}")

    def latency(self, label: str) -> int:
        return int(self.latencies.get(label, 1))


@dataclass(frozen=True)
class IterationSchedule:
    tau: dict
    Lc: int


def compute_iteration_schedule(rdg: RDG, w: Mapping[str, int] | None = None) -> IterationSchedule:
    """Longest-path start offsets over zero-dependence edges."""
    w = w or {}
    preds = rdg_zero_preds(rdg)
    cycle = find_cycle(preds)
    if cycle:
        raise ScheduleError("zero-dependence cycle: " + " -> ".join(cycle))
    tau: dict = {}

    def start(label: str) -> int:
        if label not in tau:
            tau[label] = max((start(q) + int(w.get(q, 1)) for q in preds[label]), default=0)
        return tau[label]

    for label, _ in rdg.statements:
        start(label)
    if not tau:
        return IterationSchedule({}, 0)
    Lc = max(tau[q] + int(w.get(q, 1)) for q in tau)
    return IterationSchedule({label: tau[label] for label, _ in rdg.statements}, Lc)


def latency_polynomial(sched: ScheduleSpec, tiling: TilingSpec, Lc: int) -> Polynomial:
    n = tiling.n
    if len(sched.lambdaJ) != n or len(sched.lambdaK) != n:
        raise ScheduleError(
            f"dimension mismatch: schedule vectors have lengths {len(sched.lambdaJ)}/{len(sched.lambdaK)}, tiling has {n}"
        )
    L = Polynomial.const(Lc)
    for lj, lk, p, t in zip(sched.lambdaJ, sched.lambdaK, tiling.tile_sizes, tiling.tile_counts):
        L = L + lj * (p - 1) + lk * (t - 1)
    return L


def global_latency(sched: ScheduleSpec, tiling: TilingSpec, Lc: int) -> PiecewisePolynomial:
    """L = lambdaJ.(p - 1) + lambdaK.(t - 1) + Lc as a single unguarded piece."""
    return PiecewisePolynomial.constant(latency_polynomial(sched, tiling, Lc))

