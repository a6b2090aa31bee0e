"""Seed-reproducible random walks under a few unit-variance step laws."""
from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numba as nb
import numpy as np

from . import rng

_KINDS = {"simple": rng.SIMPLE, "lazy": rng.LAZY, "uniform": rng.UNIFORM, "normal": rng.NORMAL}
_KIND_NAMES = {v: k for k, v in _KINDS.items()}


@dataclass(frozen=True)
class StepLaw:
    """One step of a d-dimensional walk; coordinates are independent copies.

    ``uniform`` draws from {-a..a}; ``lazy`` from {-1, 0, 1} w.p. 1/4, 1/2, 1/4.
    Lattice laws are rescaled to unit variance by ``spacing``.
    """

    kind: str = "simple"
    d: int = 1
    a: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown step law {self.kind!r}")
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "uniform" and self.a < 1:
            raise ValueError("uniform law needs a >= 1")

    @classmethod
    def parse(cls, text: str, d: int = 1) -> "StepLaw":
        """Parse ``simple``, ``lazy``, ``normal`` or ``uniform:a``."""
        kind, _, param = text.partition(":")
        if kind == "uniform":
            if not param:
                raise ValueError("uniform law needs a parameter, e.g. uniform:3")
            return cls("uniform", d, int(param))
        if param:
            raise ValueError(f"law {kind!r} takes no parameter")
        return cls(kind, d)

    def __str__(self):
        return f"uniform:{self.a}" if self.kind == "uniform" else self.kind

    @property
    def code(self) -> int:
        return _KINDS[self.kind]

    @property
    def param(self) -> int:
        return self.a if self.kind == "uniform" else 0

    @property
    def spacing(self) -> float:
        if self.kind == "lazy":
            return math.sqrt(2.0)
        if self.kind == "uniform":
            return math.sqrt(3.0 / (self.a * (self.a + 1)))
        return 1.0

    @property
    def integer_valued(self) -> bool:
        return self.kind == "simple"

    @property
    def lattice(self) -> bool:
        return self.kind != "normal"


@dataclass(frozen=True, eq=False)
class Walk:
    """Positions S(0..n) of a walk; ``positions`` has shape (n+1, d)."""

    law: StepLaw
    seed: int
    stream: tuple
    positions: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.positions) - 1

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    @property
    def values(self) -> np.ndarray:
        if self.d != 1:
            raise ValueError("values is only defined for one-dimensional walks")
        return self.positions[:, 0]

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.positions, axis=0)

    def __eq__(self, other):
        if not isinstance(other, Walk):
            return NotImplemented
        return (self.law == other.law and self.seed == other.seed and self.stream == other.stream
                and self.positions.dtype == other.positions.dtype
                and np.array_equal(self.positions, other.positions))

    def __len__(self):
        return len(self.positions)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _to_positions(law: StepLaw, raw: np.ndarray) -> np.ndarray:
    if law.integer_valued:
        return raw.astype(np.int64)
    if law.lattice:
        # scale the exact lattice sums so equal lattice values stay equal
        return raw * law.spacing
    return raw


def generate_walk(law: StepLaw, n: int, seed: int, *stream: int) -> Walk:
    """Walk of ``n`` steps from the stream keyed by ``(seed, *stream)``.

    Step ``i`` only depends on the key and ``i``, so walks from the same key
    are prefixes of one another.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    key = np.uint64(rng.derive_key(seed, *stream))
    raw = np.empty((n + 1, law.d), dtype=np.float64)
    rng.fill_walk(key, law.code, law.param, n, law.d, raw)
    return Walk(law, seed, tuple(stream), _freeze(_to_positions(law, raw)))


def walk_from_values(values, law: StepLaw | None = None) -> Walk:
    """Wrap an explicit path (1-D sequence or (n+1, d) array) as a Walk."""
    arr = np.asarray(values)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or len(arr) == 0:
        raise ValueError("a walk needs at least one point")
    if law is None:
        law = StepLaw("simple" if np.issubdtype(arr.dtype, np.integer) else "normal", arr.shape[1])
    if np.issubdtype(arr.dtype, np.integer):
        arr = arr.astype(np.int64)
    else:
        arr = arr.astype(np.float64)
    return Walk(law, 0, (), _freeze(arr.copy()))


def hitting_time(walk, level) -> int | None:
    """First t >= 0 with S(t) == level, or None if the walk never gets there."""
    values = walk.values if isinstance(walk, Walk) else np.asarray(walk)
    hits = np.flatnonzero(values == level)
    return int(hits[0]) if len(hits) else None


class CapExceeded(Exception):
    """A stopped walk did not reach its level within ``cap`` steps."""

    def __init__(self, level, cap, seed, stream):
        super().__init__(f"level {level} not reached within {cap} steps")
        self.level = level
        self.cap = cap
        self.seed = seed
        self.stream = stream


@nb.njit(cache=True, nogil=True)
def _first_hit(key, code, a, level, cap):
    s = 0.0
    if level == 0:
        return 0
    for i in range(cap):
        s += rng.draw(key, code, a, i)
        if s == level:
            return i + 1
    return -1


def first_hit_time(law: StepLaw, level: int, seed: int, cap: int, *stream: int) -> int | None:
    """tau_level of the keyed walk without materialising it; None if > cap."""
    key = np.uint64(rng.derive_key(seed, *stream))
    t = _first_hit(key, law.code, law.param, float(level), cap)
    return None if t < 0 else int(t)


def generate_until_hit(law: StepLaw, level: int, seed: int, cap: int, *stream: int) -> Walk:
    """The keyed walk stopped at its first visit to ``level``.

    Raises CapExceeded when the level is not reached within ``cap`` steps; the
    caller chooses between resampling and counting the trial as censored.
    """
    if law.d != 1 or not law.integer_valued:
        raise ValueError("stopped walks need a one-dimensional integer-valued law")
    if level <= 0 or cap <= 0:
        raise ValueError("level and cap must be positive")
    t = first_hit_time(law, level, seed, cap, *stream)
    if t is None:
        raise CapExceeded(level, cap, seed, stream)
    return generate_walk(law, t, seed, *stream)


# -- serialization ---------------------------------------------------------

MAGIC = b"LISW"
VERSION = 1
_HEADER = struct.Struct("<4sHHQBiQBH")  # magic, version, d, n, law, param, seed, dtype, len(stream)


def to_bytes(walk: Walk) -> bytes:
    is_int = np.issubdtype(walk.positions.dtype, np.integer)
    head = _HEADER.pack(MAGIC, VERSION, walk.d, walk.n, walk.law.code, walk.law.param,
                        walk.seed & rng.MASK64, 0 if is_int else 1, len(walk.stream))
    stream = struct.pack(f"<{len(walk.stream)}q", *walk.stream)
    body = walk.positions.astype("<i8" if is_int else "<f8").tobytes()
    return head + stream + body


def from_bytes(data: bytes) -> Walk:
    magic, version, d, n, code, param, seed, dtype, nstream = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError("not a walk file")
    if version != VERSION:
        raise ValueError(f"unsupported walk file version {version}")
    off = _HEADER.size
    stream = struct.unpack_from(f"<{nstream}q", data, off)
    off += 8 * nstream
    pos = np.frombuffer(data, dtype="<i8" if dtype == 0 else "<f8", count=(n + 1) * d, offset=off)
    law = StepLaw(_KIND_NAMES[code], d, param if code == rng.UNIFORM else 1)
    pos = pos.astype(np.int64 if dtype == 0 else np.float64).reshape(n + 1, d)
    return Walk(law, seed, tuple(stream), _freeze(pos))


def save(walk: Walk, path) -> None:
    Path(path).write_bytes(to_bytes(walk))


def load(path) -> Walk:
    return from_bytes(Path(path).read_bytes())


def to_csv(walk: Walk) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{c + 1}" for c in range(walk.d)])
    for t, row in enumerate(walk.positions.tolist()):
        w.writerow([t] + [repr(v) for v in row])
    return buf.getvalue()
