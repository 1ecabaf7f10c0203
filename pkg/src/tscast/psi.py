"""
Program-specific information: CRC-32/MPEG-2, section reassembly, PAT and PMT.

Only the long-form sections needed to describe a multiplex are decoded.
Descriptors are kept as opaque bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import MalformedSection, SectionOverflow
from .packet import MAX_PAYLOAD, MAX_PID, TsPacket, as_packet, make_packet

PAT_TABLE_ID = 0x00
PMT_TABLE_ID = 0x02
MAX_SECTION_LENGTH = 1021

_PAT_ENTRY = 4


def _make_crc_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte << 24
        for _ in range(8):
            crc = ((crc << 1) ^ 0x04C11DB7) if crc & 0x80000000 else (crc << 1)
        table.append(crc & 0xFFFFFFFF)
    return table


_CRC_TABLE = _make_crc_table()


def crc32_mpeg(data: bytes) -> int:
    """CRC-32/MPEG-2: poly 0x04C11DB7, init 0xFFFFFFFF, no reflection, no final xor."""
    crc = 0xFFFFFFFF
    for b in data:
        crc = ((crc << 8) & 0xFFFFFFFF) ^ _CRC_TABLE[(crc >> 24) ^ b]
    return crc


def crc_ok(section: bytes) -> bool:
    """True if a section with its trailing CRC leaves a zero remainder."""
    return crc32_mpeg(section) == 0


@dataclass(frozen=True)
class PatSection:
    transport_stream_id: int
    version: int
    entries: tuple = ()
    section_number: int = 0
    last_section_number: int = 0
    current_next: bool = True
    crc: int = field(default=0, compare=False)

    @property
    def programs(self) -> list[tuple[int, int]]:
        """(program_number, pmt_pid) pairs, network entries excluded."""
        return [(n, pid) for n, pid in self.entries if n != 0]

    @property
    def network_pid(self) -> Optional[int]:
        for n, pid in self.entries:
            if n == 0:
                return pid
        return None


@dataclass(frozen=True)
class StreamEntry:
    stream_type: int
    elementary_pid: int
    descriptors: bytes = b""


@dataclass(frozen=True)
class PmtSection:
    program_number: int
    version: int
    pcr_pid: int
    streams: tuple = ()
    program_info: bytes = b""
    section_number: int = 0
    last_section_number: int = 0
    current_next: bool = True
    crc: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "streams",
            tuple(s if isinstance(s, StreamEntry) else StreamEntry(*s) for s in self.streams),
        )
        for pid in [self.pcr_pid] + [s.elementary_pid for s in self.streams]:
            if not 0 <= pid <= MAX_PID:
                raise ValueError(f"PID out of range: {pid:#x}")


def _long_section(table_id: int, extension: int, version: int, body: bytes,
                  section_number: int = 0, last_section_number: int = 0,
                  current_next: bool = True) -> bytes:
    # section_length covers the extended header, the body and the CRC
    length = 5 + len(body) + 4
    if length > MAX_SECTION_LENGTH:
        raise SectionOverflow(f"section_length {length} exceeds {MAX_SECTION_LENGTH}")
    head = bytes((
        table_id,
        0xB0 | (length >> 8),
        length & 0xFF,
        extension >> 8,
        extension & 0xFF,
        0xC0 | ((version & 0x1F) << 1) | int(current_next),
        section_number,
        last_section_number,
    ))
    section = head + body
    return section + crc32_mpeg(section).to_bytes(4, "big")


def _split_long_section(section: bytes, table_id: int):
    if len(section) < 12:
        raise MalformedSection(f"section of {len(section)} bytes is too short")
    if section[0] != table_id:
        raise MalformedSection(f"expected table_id {table_id}, got {section[0]}")
    length = ((section[1] & 0x0F) << 8) | section[2]
    if length + 3 != len(section) or length > MAX_SECTION_LENGTH:
        raise MalformedSection(f"section_length {length} inconsistent with {len(section)} bytes")
    if not section[1] & 0x80:
        raise MalformedSection("section_syntax_indicator not set")
    extension = (section[3] << 8) | section[4]
    version = (section[5] >> 1) & 0x1F
    current_next = bool(section[5] & 1)
    crc = int.from_bytes(section[-4:], "big")
    return extension, version, current_next, section[6], section[7], section[8:-4], crc


def build_pat(entries: Iterable[tuple[int, int]], transport_stream_id: int = 1,
              version: int = 0) -> bytes:
    body = bytearray()
    for number, pid in entries:
        if not 0 <= pid <= MAX_PID:
            raise ValueError(f"PMT PID out of range: {pid:#x}")
        body += number.to_bytes(2, "big")
        body += (0xE000 | pid).to_bytes(2, "big")
    return _long_section(PAT_TABLE_ID, transport_stream_id, version, bytes(body))


def parse_pat(section: bytes) -> PatSection:
    tsid, version, cni, secno, last, body, crc = _split_long_section(section, PAT_TABLE_ID)
    if len(body) % _PAT_ENTRY:
        raise MalformedSection("PAT body is not a whole number of entries")
    entries = tuple(
        ((body[i] << 8) | body[i + 1], ((body[i + 2] & 0x1F) << 8) | body[i + 3])
        for i in range(0, len(body), _PAT_ENTRY)
    )
    return PatSection(tsid, version, entries, secno, last, cni, crc)


def build_pmt(pmt: PmtSection) -> bytes:
    body = bytearray()
    body += (0xE000 | pmt.pcr_pid).to_bytes(2, "big")
    body += (0xF000 | len(pmt.program_info)).to_bytes(2, "big")
    body += pmt.program_info
    for s in pmt.streams:
        body.append(s.stream_type)
        body += (0xE000 | s.elementary_pid).to_bytes(2, "big")
        body += (0xF000 | len(s.descriptors)).to_bytes(2, "big")
        body += s.descriptors
    return _long_section(PMT_TABLE_ID, pmt.program_number, pmt.version, bytes(body),
                         pmt.section_number, pmt.last_section_number, pmt.current_next)


def parse_pmt(section: bytes) -> PmtSection:
    number, version, cni, secno, last, body, crc = _split_long_section(section, PMT_TABLE_ID)
    if len(body) < 4:
        raise MalformedSection("PMT body truncated")
    pcr_pid = ((body[0] & 0x1F) << 8) | body[1]
    info_len = ((body[2] & 0x0F) << 8) | body[3]
    pos = 4 + info_len
    if pos > len(body):
        raise MalformedSection("program_info_length overruns section")
    program_info = bytes(body[4:pos])
    streams = []
    while pos < len(body):
        if pos + 5 > len(body):
            raise MalformedSection("truncated elementary stream entry")
        es_len = ((body[pos + 3] & 0x0F) << 8) | body[pos + 4]
        end = pos + 5 + es_len
        if end > len(body):
            raise MalformedSection("ES_info_length overruns section")
        streams.append(StreamEntry(
            body[pos],
            ((body[pos + 1] & 0x1F) << 8) | body[pos + 2],
            bytes(body[pos + 5:end]),
        ))
        pos = end
    return PmtSection(number, version, pcr_pid, tuple(streams), program_info,
                      secno, last, cni, crc)


class SectionAssembler:
    """
    Reassembles PSI sections carried on one PID.

    Feed packets in stream order with :meth:`push`. Sections failing their
    CRC are dropped and counted in ``crc_errors``; a continuity gap discards
    the partial section and is counted in ``continuity_resets``.
    """

    def __init__(self, pid: Optional[int] = None):
        self.pid = pid
        self.crc_errors = 0
        self.continuity_resets = 0
        self._buf: Optional[bytearray] = None
        self._last_cc: Optional[int] = None

    def reset(self) -> None:
        self._buf = None
        self._last_cc = None

    def push(self, pkt) -> list[bytes]:
        pkt = as_packet(pkt)
        if self.pid is not None and pkt.pid != self.pid:
            return []
        if not pkt.has_payload or not pkt.payload:
            return []
        cc = pkt.continuity_counter
        if self._last_cc is not None and not pkt.discontinuity:
            if cc == self._last_cc:
                return []  # duplicate packet
            if cc != (self._last_cc + 1) & 0xF and self._buf is not None:
                self.continuity_resets += 1
                self._buf = None
        self._last_cc = cc

        payload = pkt.payload
        out: list[bytes] = []
        if pkt.payload_unit_start:
            pointer = payload[0]
            tail = payload[1:1 + pointer]
            if self._buf is not None:
                self._buf += tail
                out += self._drain()
            self._buf = bytearray(payload[1 + pointer:])
        elif self._buf is not None:
            self._buf += payload
        else:
            return out
        out += self._drain()
        return out

    def _drain(self) -> list[bytes]:
        out = []
        buf = self._buf
        while buf is not None:
            if not buf:
                if out:
                    buf = None  # ended exactly on a packet boundary
                break
            if buf[0] == 0xFF:
                buf = None  # stuffing: nothing more in this unit
                break
            if len(buf) < 3:
                break
            total = 3 + (((buf[1] & 0x0F) << 8) | buf[2])
            if len(buf) < total:
                break
            section = bytes(buf[:total])
            del buf[:total]
            if section[1] & 0x80 and not crc_ok(section):
                self.crc_errors += 1
            else:
                out.append(section)
        self._buf = buf
        return out


def assemble_sections(packets: Iterable, pid: int) -> list[bytes]:
    """Reassemble every CRC-valid section carried on ``pid``."""
    asm = SectionAssembler(pid)
    out = []
    for p in packets:
        out += asm.push(p)
    return out


def section_packets(section: bytes, pid: int, continuity_start: int = 0,
                    chunk: int = MAX_PAYLOAD) -> list[TsPacket]:
    """Packetise one section, ``chunk`` payload bytes per packet (1..184).

    The first packet's payload begins with a zero pointer_field. Packets with
    less than 184 payload bytes are filled with adaptation-field stuffing,
    except the last, which is padded with 0xFF after the section.
    """
    if not 1 <= chunk <= MAX_PAYLOAD:
        raise ValueError(f"chunk must be 1..{MAX_PAYLOAD}")
    data = b"\x00" + section
    pieces = [data[i:i + chunk] for i in range(0, len(data), chunk)]
    packets = []
    for i, piece in enumerate(pieces):
        last = i == len(pieces) - 1
        packets.append(make_packet(
            pid, piece, (continuity_start + i) & 0xF,
            payload_unit_start=(i == 0),
            stuff_with_adaptation=not last,
        ))
    return packets
