"""
Energy-dispersal randomiser.

PRBS generator 1 + x^14 + x^15, register loaded with 100101010000000 at the
start of every group of 8 packets. The group's first sync byte is inverted
(0x47 -> 0xB8); the other seven sync bytes are left alone while the PRBS keeps
running underneath them. Randomisation is an XOR with a fixed 1504-byte mask,
so it is its own inverse apart from sync checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BadSync, WrongLength
from ..packet import PACKET_SIZE, SYNC_BYTE

GROUP_PACKETS = 8
GROUP_BYTES = GROUP_PACKETS * PACKET_SIZE
INVERTED_SYNC = SYNC_BYTE ^ 0xFF
# Stage 1 .. stage 15, left to right.
INIT_STATE = 0b100101010000000


def _step(state: int) -> tuple[int, int]:
    # state bit 14 is stage 1, bit 0 is stage 15
    out = ((state >> 1) ^ state) & 1  # stage 14 xor stage 15
    return ((state >> 1) | (out << 14)), out


def prbs_bytes(count: int, state: int = INIT_STATE) -> bytes:
    """First ``count`` PRBS bytes from ``state``, MSB first."""
    out = bytearray(count)
    for i in range(count):
        byte = 0
        for _ in range(8):
            state, bit = _step(state)
            byte = (byte << 1) | bit
        out[i] = byte
    return bytes(out)


def prbs_state_after(nbytes: int, state: int = INIT_STATE) -> int:
    for _ in range(nbytes * 8):
        state, _ = _step(state)
    return state


def _group_mask() -> np.ndarray:
    seq = prbs_bytes(GROUP_BYTES - 1)
    mask = np.frombuffer(b"\xff" + seq, dtype=np.uint8).copy()
    mask[PACKET_SIZE::PACKET_SIZE] = 0  # later sync bytes pass through
    return mask


GROUP_MASK = _group_mask()


@dataclass
class ScramblerState:
    """Streaming position inside the 8-packet PRBS group."""

    packet_index: int = 0

    @property
    def register(self) -> int:
        """Shift-register contents at the start of the current packet."""
        if self.packet_index == 0:
            return INIT_STATE
        # one inverted-sync byte, then 188 bytes per completed packet minus that sync
        return prbs_state_after(self.packet_index * PACKET_SIZE - 1)

    def apply(self, data: bytes) -> bytes:
        """XOR ``data`` (whole packets) with the PRBS, advancing the position."""
        if len(data) % PACKET_SIZE:
            raise WrongLength(f"randomiser input must be whole packets, got {len(data)} bytes")
        arr = np.frombuffer(bytes(data), dtype=np.uint8)
        npk = len(arr) // PACKET_SIZE
        start = self.packet_index * PACKET_SIZE
        reps = -(-(start + len(arr)) // GROUP_BYTES)
        mask = np.tile(GROUP_MASK, max(reps, 1))[start:start + len(arr)]
        self.packet_index = (self.packet_index + npk) % GROUP_PACKETS
        return (arr ^ mask).tobytes()


def randomize(packets) -> bytes:
    """Randomise a sequence of 188-byte packets (or their concatenation)."""
    data = packets if isinstance(packets, (bytes, bytearray)) else b"".join(bytes(p) for p in packets)
    if len(data) % PACKET_SIZE:
        raise WrongLength(f"randomiser input must be whole packets, got {len(data)} bytes")
    for k in range(0, len(data), PACKET_SIZE):
        if data[k] != SYNC_BYTE:
            raise BadSync(f"packet at byte {k} does not start with 0x47")
    return ScramblerState().apply(data)


def derandomize(data: bytes) -> bytes:
    """Invert :func:`randomize`; checks 0xB8/0x47 at every packet boundary."""
    data = bytes(data)
    if len(data) % PACKET_SIZE:
        raise WrongLength(f"derandomiser input must be whole packets, got {len(data)} bytes")
    for k in range(0, len(data), PACKET_SIZE):
        if data[k] not in (SYNC_BYTE, INVERTED_SYNC):
            raise BadSync(f"byte {k}: expected 0x47 or 0xB8, got {data[k]:#04x}")
    return ScramblerState().apply(data)
