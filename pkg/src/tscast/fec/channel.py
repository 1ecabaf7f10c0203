"""Seeded byte-error channel models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np


@dataclass(frozen=True)
class ByteErrors:
    """Each byte is corrupted independently with probability ``rate``."""

    rate: float
    seed: int = 0


@dataclass(frozen=True)
class Burst:
    """``length`` consecutive corrupted bytes every ``period`` bytes, from ``offset``."""

    length: int
    period: int
    offset: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.length < 0 or self.period <= 0 or self.offset < 0:
            raise ValueError("burst needs length >= 0, period > 0, offset >= 0")


@dataclass(frozen=True)
class Positions:
    positions: tuple = ()
    seed: int = 0


ErrorModel = Union[ByteErrors, Burst, Positions]


@dataclass
class ErrorLog:
    positions: list = field(default_factory=list)
    bursts: list = field(default_factory=list)  # (start, length)

    def __len__(self) -> int:
        return len(self.positions)


def _error_positions(n: int, model: ErrorModel, rng: np.random.Generator):
    bursts = []
    if isinstance(model, ByteErrors):
        if not 0 <= model.rate <= 1:
            raise ValueError("byte error rate must be within [0, 1]")
        pos = np.flatnonzero(rng.random(n) < model.rate)
    elif isinstance(model, Burst):
        chunks = []
        for start in range(model.offset, n, model.period):
            length = min(model.length, n - start)
            if length > 0:
                bursts.append((start, length))
                chunks.append(np.arange(start, start + length))
        pos = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    elif isinstance(model, Positions):
        pos = np.unique(np.asarray(model.positions, dtype=np.int64))
        if len(pos) and (pos[0] < 0 or pos[-1] >= n):
            raise ValueError(f"error position outside 0..{n - 1}")
    else:
        raise TypeError(f"unknown error model {model!r}")
    return pos, bursts


def channel(data: bytes, model: ErrorModel) -> tuple[bytes, ErrorLog]:
    """Corrupt ``data`` per ``model``; every logged byte is guaranteed to differ."""
    rng = np.random.default_rng(model.seed)
    arr = np.frombuffer(bytes(data), dtype=np.uint8).copy()
    pos, bursts = _error_positions(len(arr), model, rng)
    if len(pos):
        arr[pos] ^= rng.integers(1, 256, size=len(pos), dtype=np.uint8)
    return arr.tobytes(), ErrorLog(pos.tolist(), bursts)


def parse_error_model(text: str, seed: int = 0) -> ErrorModel:
    """Parse ``none``, ``rate:P``, ``burst:LEN:PERIOD[:OFFSET]`` or ``pos:I,J,...``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind in ("none", ""):
        return Positions((), seed)
    if kind == "rate":
        return ByteErrors(float(rest), seed)
    if kind == "burst":
        parts = [int(x) for x in rest.split(":")]
        return Burst(*parts[:3], seed=seed)
    if kind == "pos":
        return Positions(tuple(int(x) for x in rest.split(",") if x.strip()), seed)
    raise ValueError(f"unknown error model {text!r}")
