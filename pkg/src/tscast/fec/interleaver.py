"""
Convolutional (Forney) byte interleaver, I = 12 branches, M = 17.

Byte ``n`` of the stream travels on branch ``n mod 12``. On the interleaver
branch ``j`` is a FIFO of ``j * M`` cells; because a branch is visited once
every 12 bytes, that is a delay of ``12 * M * j = 204 * j`` byte slots. The
deinterleaver uses the complementary depths ``(11 - j) * M``, so every byte
sees the same end-to-end delay of 11 * 204 = 2244 slots. Sync bytes, which
sit at multiples of 204, always ride branch 0.
"""

from __future__ import annotations

import numpy as np

BRANCHES = 12
CELL = 17
SLOT_DELAY = BRANCHES * CELL  # added delay per branch index, in bytes
TOTAL_DELAY = (BRANCHES - 1) * SLOT_DELAY  # 2244


class _DelayBank:
    def __init__(self, depths):
        # depths are FIFO cells; each branch is clocked once per 12 bytes
        self.delays = np.asarray(depths, dtype=np.int64) * BRANCHES
        self.reset()

    def reset(self) -> None:
        self._history = np.zeros(int(self.delays.max()), dtype=np.uint8)
        self._position = 0

    @property
    def branch(self) -> int:
        """Branch that the next input byte will enter."""
        return self._position

    def process(self, data) -> bytes:
        arr = np.frombuffer(bytes(data), dtype=np.uint8)
        if not len(arr):
            return b""
        hist = len(self._history)
        buf = np.concatenate([self._history, arr])
        idx = np.arange(len(arr))
        branch = (self._position + idx) % BRANCHES
        out = buf[hist + idx - self.delays[branch]]
        self._history = buf[len(buf) - hist:] if hist else self._history
        self._position = (self._position + len(arr)) % BRANCHES
        return out.tobytes()


class Interleaver(_DelayBank):
    """Streaming interleaver; state persists across :meth:`process` calls."""

    def __init__(self):
        super().__init__([j * CELL for j in range(BRANCHES)])


class Deinterleaver(_DelayBank):
    def __init__(self):
        super().__init__([(BRANCHES - 1 - j) * CELL for j in range(BRANCHES)])


def interleave(data: bytes) -> bytes:
    """One-shot interleave from a zeroed state."""
    return Interleaver().process(data)


def deinterleave(data: bytes) -> bytes:
    """One-shot deinterleave from a zeroed state. The first 2244 bytes are fill."""
    return Deinterleaver().process(data)
