"""
The outer DVB-S channel chain, end to end.

    transmit:  randomize -> RS(204,188) encode -> interleave
    receive:   deinterleave -> RS decode -> derandomize

The interleaved stream carries 11 extra frames (2244 bytes) of flush so every
data byte makes it through both delay lines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import WrongLength
from ..packet import PACKET_SIZE, SYNC_BYTE
from .channel import ErrorLog, ErrorModel, channel
from .interleaver import TOTAL_DELAY, Deinterleaver, Interleaver
from .rs import K, N, rs_decode_many, rs_encode_many
from .scrambler import ScramblerState, randomize


@dataclass
class DecodeReport:
    codewords: int
    corrected_bytes: int
    failed_codewords: int


@dataclass
class ChainReport:
    packets: int
    recovered: int
    failed: int
    corrected_bytes: int
    decode_failures: int
    channel_errors: int

    @property
    def recovery_ratio(self) -> float:
        return self.recovered / self.packets if self.packets else 1.0


def _join(packets) -> bytes:
    if isinstance(packets, (bytes, bytearray)):
        return bytes(packets)
    return b"".join(bytes(p) for p in packets)


def fec_encode(packets, interleave: bool = True) -> bytes:
    """TS packets -> concatenated 204-byte frames ready for the channel."""
    scrambled = np.frombuffer(randomize(_join(packets)), dtype=np.uint8)
    codewords = rs_encode_many(scrambled.reshape(-1, K)).tobytes()
    if not interleave:
        return codewords
    return Interleaver().process(codewords + bytes(TOTAL_DELAY))


def fec_decode(frames: bytes, interleave: bool = True) -> tuple[bytes, DecodeReport]:
    """Inverse of :func:`fec_encode`. Uncorrectable frames are passed on as received."""
    if len(frames) % N:
        raise WrongLength(f"FEC stream must be whole {N}-byte frames, got {len(frames)} bytes")
    if interleave:
        if len(frames) < TOTAL_DELAY:
            raise WrongLength(f"interleaved stream shorter than the {TOTAL_DELAY}-byte flush")
        frames = Deinterleaver().process(frames)[TOTAL_DELAY:]
    cw = np.frombuffer(bytes(frames), dtype=np.uint8).reshape(-1, N)
    data, corrected, failed = rs_decode_many(cw)
    out = ScramblerState().apply(data.tobytes())
    return out, DecodeReport(len(cw), int(corrected.sum()), int(failed.sum()))


def chain_roundtrip(packets, error_model: ErrorModel) -> ChainReport:
    """Push packets through the whole chain with ``error_model`` on the air."""
    source = _join(packets)
    if len(source) % PACKET_SIZE:
        raise WrongLength("chain input must be whole 188-byte packets")
    tx = fec_encode(source)
    rx, log = channel(tx, error_model)
    out, rep = fec_decode(rx)
    npk = len(source) // PACKET_SIZE
    a = np.frombuffer(source, dtype=np.uint8).reshape(-1, PACKET_SIZE)
    b = np.frombuffer(out, dtype=np.uint8).reshape(-1, PACKET_SIZE)
    recovered = int((a == b).all(axis=1).sum()) if npk else 0
    return ChainReport(
        packets=npk,
        recovered=recovered,
        failed=npk - recovered,
        corrected_bytes=rep.corrected_bytes,
        decode_failures=rep.failed_codewords,
        channel_errors=len(log),
    )
