"""Mapping configuration files: tiling, schedule vectors and latencies.

Format, one ``key = value`` per line (``#`` comments)::

    tiles   = p0, p1          # tile sizes: parameter names or integers
    counts  = 2, 2            # tile counts (processor array shape)
    lambdaJ = 1, p0
    lambdaK = p0, p0*(p1-1)+1
    pi      = 1
    latency S3 = 2            # per-statement override, default 1
    min p1  = 2               # declared lower bound of a tile size
    energy  = table.energy    # relative to the mapping file
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .dsl import DSLError, parse_polynomial
from .pra import Program
from .schedule import ScheduleSpec
from .tiling import TilingSpec


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class MappingConfig:
    tiling: TilingSpec
    schedule: ScheduleSpec
    energy_path: Path | None = None

    @property
    def n(self) -> int:
        return self.tiling.n

    @property
    def tile_params(self) -> list[str]:
        return self.tiling.symbolic_sizes()


def _poly(text: str, lineno: int):
    try:
        return parse_polynomial(text)
    except DSLError as e:
        raise MappingError(f"line {lineno}: {e}") from None


def _int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise MappingError(f"line {lineno}: {what} must be an integer, got {text!r}") from None


def _vector(value: str) -> list[str]:
    return [x.strip() for x in value.split(",") if x.strip()]


def parse_mapping(text: str, base_dir: str | Path | None = None) -> MappingConfig:
    fields: dict = {}
    latencies: dict = {}
    minimums: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not value:
            raise MappingError(f"line {lineno}: expected 'key = value'")
        words = key.split()
        if len(words) == 2 and words[0] == "latency":
            latencies[words[1]] = _int(value, lineno, "latency")
        elif len(words) == 2 and words[0] == "min":
            minimums[words[1]] = _int(value, lineno, "minimum")
        elif key in ("tiles", "counts", "lambdaJ", "lambdaK", "pi", "energy"):
            if key in fields:
                raise MappingError(f"line {lineno}: duplicate key {key}")
            fields[key] = (value, lineno)
        else:
            raise MappingError(f"line {lineno}: unknown key {key!r}")
    for key in ("tiles", "counts", "lambdaJ", "lambdaK"):
        if key not in fields:
            raise MappingError(f"missing key {key!r}")

    value, ln = fields["tiles"]
    tiles = [_poly(x, ln) for x in _vector(value)]
    value, ln = fields["counts"]
    counts = [_int(x, ln, "tile count") for x in _vector(value)]
    lj = [_poly(x, fields["lambdaJ"][1]) for x in _vector(fields["lambdaJ"][0])]
    lk = [_poly(x, fields["lambdaK"][1]) for x in _vector(fields["lambdaK"][0])]
    n = len(tiles)
    for name, vec in (("counts", counts), ("lambdaJ", lj), ("lambdaK", lk)):
        if len(vec) != n:
            raise MappingError(f"dimension mismatch: {name} has {len(vec)} entries, tiles has {n}")
    pi = _int(*fields["pi"], "pi") if "pi" in fields else 1
    try:
        tiling = TilingSpec(tuple(tiles), tuple(counts), minimums)
        schedule = ScheduleSpec(tuple(lj), tuple(lk), pi, latencies)
    except ValueError as e:
        raise MappingError(str(e)) from None
    unknown = set(minimums) - set(tiling.symbolic_sizes())
    if unknown:
        raise MappingError(f"minimum declared for non-tile-size {sorted(unknown)}")
    energy = None
    if "energy" in fields:
        energy = Path(fields["energy"][0])
        if base_dir is not None and not energy.is_absolute():
            energy = Path(base_dir) / energy
    return MappingConfig(tiling, schedule, energy)


def load_mapping(path: str | Path) -> MappingConfig:
    path = Path(path)
    return parse_mapping(path.read_text(encoding="utf-8"), path.parent)


def check_mapping(program: Program, mapping: MappingConfig) -> None:
    """Cross-check a mapping against the program it is applied to."""
    if mapping.n != program.n:
        raise MappingError(f"dimension mismatch: program has {program.n} dimensions, mapping has {mapping.n}")
    tile_params = set(mapping.tile_params)
    clash = tile_params & set(program.param_names)
    if clash:
        raise MappingError(f"tile-size names clash with program parameters: {sorted(clash)}")
    known = tile_params | set(program.param_names)
    for vec in (mapping.schedule.lambdaJ, mapping.schedule.lambdaK):
        for x in vec:
            stray = x.variables() - known
            if stray:
                raise MappingError(f"schedule vector uses unknown parameter(s) {sorted(stray)}")
    labels = {s.label for s in program.statements}
    bad = sorted(set(mapping.schedule.latencies) - labels)
    if bad:
        raise MappingError(f"latency given for unknown statement(s) {bad}")
