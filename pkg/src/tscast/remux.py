"""
Program discovery and single-program extraction from a multiplex.

Extraction keeps the chosen program's PMT, elementary and PCR PIDs untouched
and replaces every PAT with a regenerated single-entry table (version bumped,
fresh continuity counters), injected where the original PAT packets were.
Null packets are dropped; :func:`passthrough` is the byte-faithful mode.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import MalformedSection, NoPatFound, UnknownProgram
from .packet import (
    NULL_PID,
    PAT_PID,
    as_bytes,
    peek_header,
    read_ts,
    resync,
)
from .psi import (
    PMT_TABLE_ID,
    PatSection,
    PmtSection,
    SectionAssembler,
    build_pat,
    parse_pat,
    parse_pmt,
    section_packets,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProgramInfo:
    program_number: int
    pmt_pid: int
    pcr_pid: int
    streams: tuple = ()  # (stream_type, elementary_pid) pairs

    @property
    def elementary_pids(self) -> list[int]:
        return [pid for _, pid in self.streams]


@dataclass
class Lineup:
    """Everything :func:`scan_programs` learned about a multiplex."""

    pat: PatSection
    programs: list = field(default_factory=list)
    incomplete: list = field(default_factory=list)  # (program_number, pmt_pid), PMT never seen

    @property
    def network_pid(self) -> Optional[int]:
        return self.pat.network_pid


def packet_source(source) -> list[bytes]:
    """Normalise a packet source to a list of raw 188-byte packets.

    Accepts a path, a raw byte stream (resynchronised), or an iterable of
    packets (raw or :class:`TsPacket`).
    """
    if isinstance(source, (str, Path)):
        return read_ts(source).packets
    if isinstance(source, (bytes, bytearray, memoryview)):
        return resync(bytes(source)).packets
    return [as_bytes(p) for p in source]


def _find_pat(packets: list[bytes]) -> PatSection:
    asm = SectionAssembler(PAT_PID)
    found: dict[int, PatSection] = {}
    version = None
    for raw in packets:
        if peek_header(raw).pid != PAT_PID:
            continue
        for section in asm.push(raw):
            try:
                pat = parse_pat(section)
            except MalformedSection:
                continue
            if not pat.current_next:
                continue
            if version is None:
                version = pat.version
            if pat.version == version:
                found.setdefault(pat.section_number, pat)
        if found and len(found) > found[min(found)].last_section_number:
            break
    if not found:
        raise NoPatFound("no CRC-valid PAT in the stream")
    parts = [found[k] for k in sorted(found)]
    if len(parts) == 1:
        return parts[0]
    entries = tuple(e for p in parts for e in p.entries)
    first = parts[0]
    return PatSection(first.transport_stream_id, first.version, entries,
                      0, first.last_section_number, True, first.crc)


def _find_pmts(packets: list[bytes], wanted: dict[int, set]) -> dict[int, PmtSection]:
    """Map program_number -> first PMT seen; ``wanted`` maps pmt_pid -> program numbers."""
    assemblers = {pid: SectionAssembler(pid) for pid in wanted}
    pending = {n for nums in wanted.values() for n in nums}
    pmts: dict[int, PmtSection] = {}
    for raw in packets:
        if not pending:
            break
        pid = peek_header(raw).pid
        asm = assemblers.get(pid)
        if asm is None:
            continue
        for section in asm.push(raw):
            if section[0] != PMT_TABLE_ID:
                continue
            try:
                pmt = parse_pmt(section)
            except MalformedSection:
                continue
            if pmt.program_number in pending and pmt.program_number in wanted[pid]:
                pmts[pmt.program_number] = pmt
                pending.discard(pmt.program_number)
    return pmts


def scan_programs(source) -> Lineup:
    packets = packet_source(source)
    pat = _find_pat(packets)
    wanted: dict[int, set] = {}
    for number, pmt_pid in pat.programs:
        wanted.setdefault(pmt_pid, set()).add(number)
    pmts = _find_pmts(packets, wanted)
    lineup = Lineup(pat)
    for number, pmt_pid in sorted(pat.programs):
        pmt = pmts.get(number)
        if pmt is None:
            lineup.incomplete.append((number, pmt_pid))
            continue
        lineup.programs.append(ProgramInfo(
            number, pmt_pid, pmt.pcr_pid,
            tuple((s.stream_type, s.elementary_pid) for s in pmt.streams),
        ))
    return lineup


def list_programs(source) -> list[ProgramInfo]:
    """Programs whose PMT was found, ascending by program number.

    Programs listed in the PAT without a PMT are logged; use
    :func:`scan_programs` to get them as data.
    """
    lineup = scan_programs(source)
    for number, pmt_pid in lineup.incomplete:
        log.warning("program %d: PMT on PID %#06x not found", number, pmt_pid)
    return lineup.programs


def pid_set(program: ProgramInfo) -> frozenset:
    """PIDs retained when extracting ``program``."""
    pids = {PAT_PID, program.pmt_pid, *program.elementary_pids}
    if program.pcr_pid != NULL_PID:
        pids.add(program.pcr_pid)
    return frozenset(pids)


def extract_program(source, program_number: int) -> list[bytes]:
    """Return a standalone transport stream carrying one program."""
    packets = packet_source(source)
    lineup = scan_programs(packets)
    if program_number not in dict(lineup.pat.programs):
        raise UnknownProgram(f"program {program_number} is not in the PAT")
    info = next((p for p in lineup.programs if p.program_number == program_number), None)
    if info is None:
        raise UnknownProgram(f"program {program_number} has no PMT in the stream")

    pat = build_pat([(program_number, info.pmt_pid)],
                    lineup.pat.transport_stream_id, (lineup.pat.version + 1) % 32)
    keep = pid_set(info) - {PAT_PID}
    out = []
    pat_cc = 0
    for raw in packets:
        hdr = peek_header(raw)
        if hdr.pid == PAT_PID:
            if hdr.payload_unit_start:
                for pkt in section_packets(pat, PAT_PID, pat_cc):
                    out.append(pkt.to_bytes())
                    pat_cc = (pat_cc + 1) & 0xF
        elif hdr.pid in keep:
            out.append(raw)
    return out


def passthrough(source) -> list[bytes]:
    """Full-multiplex mode: every packet, unchanged."""
    return packet_source(source)
