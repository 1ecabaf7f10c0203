"""
MPEG-2 transport stream packets.

A transport packet is exactly 188 bytes:

    Byte 0:     sync byte (0x47)
    Byte 1-2:   transport_error | payload_unit_start | priority | PID (13 bits)
    Byte 3:     scrambling (2) | adaptation_field_control (2) | continuity (4)
    Byte 4-:    optional adaptation field, then payload

Parsing is lossless: ``serialize_packet(parse_packet(raw)) == raw`` for every
well-formed block. Adaptation-field sub-structures that are not interpreted
(OPCR, splice countdown, private data, extension) travel as opaque bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Union

from .errors import (
    NoSyncFound,
    PayloadOverflow,
    ReservedAdaptationControl,
    SyncByteMismatch,
    TsError,
    WrongLength,
)

SYNC_BYTE = 0x47
PACKET_SIZE = 188
HEADER_SIZE = 4
MAX_PAYLOAD = PACKET_SIZE - HEADER_SIZE

PAT_PID = 0x0000
NULL_PID = 0x1FFF
MAX_PID = 0x1FFF

PCR_HZ = 27_000_000
PCR_BASE_MAX = 1 << 33
PCR_MODULUS = PCR_BASE_MAX * 300

# Consecutive lattice hits required before resync declares lock.
RESYNC_HITS = 5

_FLAG_DISCONTINUITY = 0x80
_FLAG_RANDOM_ACCESS = 0x40
_FLAG_ES_PRIORITY = 0x20
_FLAG_PCR = 0x10
_OTHER_FLAGS_MASK = 0x0F


class MalformedPacket(TsError, ValueError):
    """Adaptation field length or contents do not fit the packet."""


@dataclass(frozen=True, order=True)
class Pcr:
    """Program clock reference: 33-bit 90 kHz base plus 9-bit 27 MHz extension."""

    base: int
    extension: int = 0

    def __post_init__(self):
        if not 0 <= self.base < PCR_BASE_MAX:
            raise ValueError(f"PCR base out of range: {self.base}")
        if not 0 <= self.extension < 300:
            raise ValueError(f"PCR extension must be < 300, got {self.extension}")

    @property
    def ticks(self) -> int:
        return self.base * 300 + self.extension

    @classmethod
    def from_ticks(cls, ticks: int) -> "Pcr":
        ticks %= PCR_MODULUS
        return cls(ticks // 300, ticks % 300)


def pcr_ticks(pcr: Pcr) -> int:
    """Return the PCR as a count of 27 MHz ticks."""
    return pcr.base * 300 + pcr.extension


def _encode_pcr(pcr: Pcr, reserved: int) -> bytes:
    b = pcr.base
    return bytes((
        (b >> 25) & 0xFF,
        (b >> 17) & 0xFF,
        (b >> 9) & 0xFF,
        (b >> 1) & 0xFF,
        ((b & 1) << 7) | ((reserved & 0x3F) << 1) | (pcr.extension >> 8),
        pcr.extension & 0xFF,
    ))


def _decode_pcr(data: bytes) -> tuple[Pcr, int]:
    base = (data[0] << 25) | (data[1] << 17) | (data[2] << 9) | (data[3] << 1) | (data[4] >> 7)
    reserved = (data[4] >> 1) & 0x3F
    ext = ((data[4] & 1) << 8) | data[5]
    try:
        return Pcr(base, ext), reserved
    except ValueError as exc:
        raise MalformedPacket(str(exc)) from None


@dataclass(frozen=True)
class AdaptationField:
    """
    Adaptation field of a transport packet.

    ``flags_present=False`` models the one-byte form (length 0, no flags byte)
    used to stuff a single byte. ``other_flags`` keeps the low nibble of the
    flags byte (OPCR, splicing point, private data, extension) and ``opaque``
    the bytes those flags announce.
    """

    discontinuity_indicator: bool = False
    random_access_indicator: bool = False
    es_priority: bool = False
    pcr: Optional[Pcr] = None
    other_flags: int = 0
    opaque: bytes = b""
    stuffing_length: int = 0
    pcr_reserved: int = 0x3F
    flags_present: bool = True

    def __post_init__(self):
        if self.stuffing_length < 0:
            raise ValueError("stuffing_length must be >= 0")
        if not 0 <= self.other_flags <= _OTHER_FLAGS_MASK:
            raise ValueError("other_flags is a 4-bit field")
        if not self.flags_present and (
            self.flags_byte() or self.opaque or self.stuffing_length
        ):
            raise ValueError("an adaptation field without a flags byte carries nothing")

    def __len__(self) -> int:
        if not self.flags_present:
            return 1
        return 2 + (6 if self.pcr is not None else 0) + len(self.opaque) + self.stuffing_length

    def flags_byte(self) -> int:
        return (
            (_FLAG_DISCONTINUITY if self.discontinuity_indicator else 0)
            | (_FLAG_RANDOM_ACCESS if self.random_access_indicator else 0)
            | (_FLAG_ES_PRIORITY if self.es_priority else 0)
            | (_FLAG_PCR if self.pcr is not None else 0)
            | self.other_flags
        )

    def to_bytes(self) -> bytes:
        size = len(self)
        if size > MAX_PAYLOAD:
            raise PayloadOverflow(f"adaptation field of {size} bytes does not fit a packet")
        if not self.flags_present:
            return b"\x00"
        out = bytearray((size - 1, self.flags_byte()))
        if self.pcr is not None:
            out += _encode_pcr(self.pcr, self.pcr_reserved)
        out += self.opaque
        out += b"\xff" * self.stuffing_length
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "AdaptationField":
        """Decode an adaptation field; ``data`` starts at the length byte."""
        length = data[0]
        if length + 1 > len(data):
            raise MalformedPacket(f"adaptation_field_length {length} exceeds packet")
        if length == 0:
            return cls(flags_present=False)
        body = bytes(data[1:1 + length])
        flags = body[0]
        pos = 1
        pcr = None
        reserved = 0x3F
        if flags & _FLAG_PCR:
            if length < 7:
                raise MalformedPacket("PCR flag set but adaptation field too short")
            pcr, reserved = _decode_pcr(body[1:7])
            pos = 7
        start = pos
        # Walk the optional fields only to find where stuffing begins.
        walked = True
        for bit, fixed in ((0x08, 6), (0x04, 1), (0x02, None), (0x01, None)):
            if not flags & bit:
                continue
            if fixed is not None:
                pos += fixed
            elif pos < len(body):
                pos += 1 + body[pos]
            else:
                pos = len(body) + 1
            if pos > len(body):
                walked = False
                break
        if walked:
            rest = body[pos:]
            if rest.count(0xFF) == len(rest):
                opaque, stuffing = body[start:pos], len(rest)
            else:
                opaque, stuffing = body[start:], 0
        else:
            opaque, stuffing = body[start:], 0
        return cls(
            discontinuity_indicator=bool(flags & _FLAG_DISCONTINUITY),
            random_access_indicator=bool(flags & _FLAG_RANDOM_ACCESS),
            es_priority=bool(flags & _FLAG_ES_PRIORITY),
            pcr=pcr,
            other_flags=flags & _OTHER_FLAGS_MASK,
            opaque=opaque,
            stuffing_length=stuffing,
            pcr_reserved=reserved,
        )


@dataclass(frozen=True)
class TsPacket:
    """
    One decomposed transport packet.

    ``adaptation_field_control`` is derived from the adaptation field and
    payload when left as None. Use :func:`make_packet` to get adaptation
    stuffing computed automatically.
    """

    pid: int
    payload: bytes = b""
    continuity_counter: int = 0
    adaptation_field: Optional[AdaptationField] = None
    adaptation_field_control: Optional[int] = None
    payload_unit_start: bool = False
    transport_error: bool = False
    transport_priority: bool = False
    scrambling_control: int = 0

    def __post_init__(self):
        if not 0 <= self.pid <= MAX_PID:
            raise ValueError(f"PID must be 0..0x1FFF, got {self.pid:#x}")
        if not 0 <= self.continuity_counter <= 15:
            raise ValueError(f"continuity counter must be 0..15, got {self.continuity_counter}")
        if not 0 <= self.scrambling_control <= 3:
            raise ValueError(f"scrambling control must be 0..3, got {self.scrambling_control}")
        object.__setattr__(self, "payload", bytes(self.payload))
        afc = self.adaptation_field_control
        if afc is None:
            if self.adaptation_field is None:
                afc = 1
            else:
                afc = 3 if self.payload else 2
            object.__setattr__(self, "adaptation_field_control", afc)
        if afc == 0:
            raise ReservedAdaptationControl("adaptation_field_control 0 is reserved")
        if not 0 < afc <= 3:
            raise ValueError(f"adaptation_field_control must be 1..3, got {afc}")
        if (self.adaptation_field is not None) != (afc in (2, 3)):
            raise ValueError(f"adaptation field presence contradicts control value {afc}")
        if afc == 2 and self.payload:
            raise ValueError("adaptation_field_control 2 carries no payload")

    @property
    def has_payload(self) -> bool:
        return self.adaptation_field_control in (1, 3)

    @property
    def pcr(self) -> Optional[Pcr]:
        af = self.adaptation_field
        return af.pcr if af is not None else None

    @property
    def discontinuity(self) -> bool:
        af = self.adaptation_field
        return af is not None and af.discontinuity_indicator

    def to_bytes(self) -> bytes:
        return serialize_packet(self)


def make_packet(
    pid: int,
    payload: bytes = b"",
    continuity_counter: int = 0,
    *,
    payload_unit_start: bool = False,
    pcr: Optional[Pcr] = None,
    discontinuity: bool = False,
    random_access: bool = False,
    scrambling_control: int = 0,
    stuff_with_adaptation: bool = True,
) -> TsPacket:
    """Build a packet, filling the unused space with adaptation-field stuffing.

    With ``stuff_with_adaptation=False`` a short payload is padded with 0xFF
    instead (the usual convention for PSI sections).
    """
    payload = bytes(payload)
    needs_af = pcr is not None or discontinuity or random_access
    if not stuff_with_adaptation and not needs_af:
        payload = payload + b"\xff" * (MAX_PAYLOAD - len(payload))
    room = MAX_PAYLOAD - len(payload)
    if room < 0:
        raise PayloadOverflow(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    if room == 0 and not needs_af:
        af = None
    elif room == 1 and not needs_af:
        af = AdaptationField(flags_present=False)
    else:
        base = 2 + (6 if pcr is not None else 0)
        if room < base:
            raise PayloadOverflow(f"payload of {len(payload)} bytes leaves no room for the adaptation field")
        af = AdaptationField(
            discontinuity_indicator=discontinuity,
            random_access_indicator=random_access,
            pcr=pcr,
            stuffing_length=room - base,
        )
    return TsPacket(
        pid=pid,
        payload=payload,
        continuity_counter=continuity_counter,
        adaptation_field=af,
        payload_unit_start=payload_unit_start,
        scrambling_control=scrambling_control,
    )


def null_packet(continuity_counter: int = 0) -> TsPacket:
    return TsPacket(NULL_PID, b"\xff" * MAX_PAYLOAD, continuity_counter)


def parse_packet(raw: bytes) -> TsPacket:
    """Decompose a 188-byte block into a :class:`TsPacket`."""
    if len(raw) != PACKET_SIZE:
        raise WrongLength(f"transport packet must be {PACKET_SIZE} bytes, got {len(raw)}")
    if raw[0] != SYNC_BYTE:
        raise SyncByteMismatch(f"expected sync byte 0x47, got {raw[0]:#04x}")
    b1, b2, b3 = raw[1], raw[2], raw[3]
    afc = (b3 >> 4) & 0x3
    if afc == 0:
        raise ReservedAdaptationControl("adaptation_field_control 0 is reserved")
    af = None
    pos = HEADER_SIZE
    if afc in (2, 3):
        af = AdaptationField.from_bytes(raw[HEADER_SIZE:])
        pos += raw[HEADER_SIZE] + 1
        if afc == 2 and pos != PACKET_SIZE:
            raise MalformedPacket("adaptation-only packet must have adaptation_field_length 183")
    return TsPacket(
        pid=((b1 & 0x1F) << 8) | b2,
        payload=bytes(raw[pos:]) if afc != 2 else b"",
        continuity_counter=b3 & 0x0F,
        adaptation_field=af,
        adaptation_field_control=afc,
        payload_unit_start=bool(b1 & 0x40),
        transport_error=bool(b1 & 0x80),
        transport_priority=bool(b1 & 0x20),
        scrambling_control=b3 >> 6,
    )


def serialize_packet(pkt: TsPacket) -> bytes:
    """Inverse of :func:`parse_packet`."""
    af = pkt.adaptation_field.to_bytes() if pkt.adaptation_field is not None else b""
    if len(af) + len(pkt.payload) != MAX_PAYLOAD:
        raise PayloadOverflow(
            f"adaptation field ({len(af)}) + payload ({len(pkt.payload)}) != {MAX_PAYLOAD}"
        )
    header = bytes((
        SYNC_BYTE,
        (0x80 if pkt.transport_error else 0)
        | (0x40 if pkt.payload_unit_start else 0)
        | (0x20 if pkt.transport_priority else 0)
        | (pkt.pid >> 8),
        pkt.pid & 0xFF,
        (pkt.scrambling_control << 6) | (pkt.adaptation_field_control << 4) | pkt.continuity_counter,
    ))
    return header + af + pkt.payload


class Header(NamedTuple):
    pid: int
    payload_unit_start: bool
    transport_error: bool
    scrambling_control: int
    adaptation_field_control: int
    continuity_counter: int


def peek_header(raw: bytes) -> Header:
    """Decode the 4-byte header only; no validation beyond what indexing needs."""
    b1, b3 = raw[1], raw[3]
    return Header(
        ((b1 & 0x1F) << 8) | raw[2],
        bool(b1 & 0x40),
        bool(b1 & 0x80),
        b3 >> 6,
        (b3 >> 4) & 0x3,
        b3 & 0x0F,
    )


def peek_pid(raw: bytes) -> int:
    return ((raw[1] & 0x1F) << 8) | raw[2]


def peek_adaptation(raw: bytes) -> tuple[bool, Optional[int]]:
    """Return (discontinuity_indicator, pcr_ticks or None) without a full parse."""
    if not raw[3] & 0x20 or raw[4] == 0:
        return False, None
    flags = raw[5]
    pcr = None
    if flags & _FLAG_PCR and raw[4] >= 7:
        d = raw[6:12]
        base = (d[0] << 25) | (d[1] << 17) | (d[2] << 9) | (d[3] << 1) | (d[4] >> 7)
        pcr = base * 300 + (((d[4] & 1) << 8) | d[5])
    return bool(flags & _FLAG_DISCONTINUITY), pcr


class ResyncResult(NamedTuple):
    packets: list
    skipped: int


def _locked(data, k: int) -> bool:
    positions = range(k, len(data) - PACKET_SIZE + 1, PACKET_SIZE)
    need = min(RESYNC_HITS, len(positions))
    if need == 0:
        return False
    return all(data[k + i * PACKET_SIZE] == SYNC_BYTE for i in range(need))


def _find_lock(data, start: int) -> int:
    k = data.find(SYNC_BYTE, start)
    while k != -1:
        if _locked(data, k):
            return k
        k = data.find(SYNC_BYTE, k + 1)
    return -1


def resync(stream: bytes) -> ResyncResult:
    """Split a byte stream into aligned 188-byte packets.

    Lock requires sync bytes at five consecutive lattice positions (or at
    every position, for streams shorter than five packets). Sync loss later
    in the stream triggers a fresh search. ``skipped`` counts every byte that
    was not returned: leading garbage, garbage between locks, and any trailing
    partial packet.
    """
    data = bytes(stream)
    if not data:
        return ResyncResult([], 0)
    packets = []
    pos = _find_lock(data, 0)
    if pos == -1:
        raise NoSyncFound(f"no 188-byte sync lattice in {len(data)} bytes")
    skipped = pos
    while pos != -1:
        while pos + PACKET_SIZE <= len(data) and data[pos] == SYNC_BYTE:
            packets.append(data[pos:pos + PACKET_SIZE])
            pos += PACKET_SIZE
        if pos + PACKET_SIZE > len(data):
            skipped += len(data) - pos
            break
        nxt = _find_lock(data, pos + 1)
        skipped += (nxt if nxt != -1 else len(data)) - pos
        pos = nxt
    return ResyncResult(packets, skipped)


PacketLike = Union[TsPacket, bytes, bytearray, memoryview]


def as_bytes(pkt: PacketLike) -> bytes:
    if isinstance(pkt, TsPacket):
        return serialize_packet(pkt)
    return bytes(pkt)


def as_packet(pkt: PacketLike) -> TsPacket:
    if isinstance(pkt, TsPacket):
        return pkt
    return parse_packet(pkt)


def read_ts(path: Union[str, Path]) -> ResyncResult:
    """Read a transport-stream file and resynchronise it into raw packets."""
    return resync(Path(path).read_bytes())


def write_ts(path: Union[str, Path], packets: Iterable[PacketLike]) -> int:
    """Write packets to a file; returns the number of bytes written."""
    data = b"".join(as_bytes(p) for p in packets)
    Path(path).write_bytes(data)
    return len(data)
