"""
Deterministic synthetic multiplexes standing in for satellite content.

Payloads are seeded pseudo-random bytes behind PES-style start codes; they
are structurally valid transport streams but not decodable video.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence, Union

from .packet import MAX_PAYLOAD, NULL_PID, PACKET_SIZE, PAT_PID, Pcr, make_packet, null_packet
from .psi import PmtSection, StreamEntry, build_pat, build_pmt, section_packets

STREAM_TYPE_VIDEO = 0x02  # MPEG-2 video
STREAM_TYPE_AUDIO = 0x04  # MPEG-2 audio

PSI_INTERVAL_S = 0.1
PCR_INTERVAL_S = 0.04
PES_INTERVAL = 24  # packets between unit starts on one PID
NULL_SHARE = 0.02


@dataclass(frozen=True)
class ProgramSpec:
    program_number: int
    pmt_pid: int
    streams: tuple = ()  # (stream_type, pid, weight)

    @property
    def pcr_pid(self) -> int:
        return self.streams[0][1] if self.streams else NULL_PID


def default_programs(count: int) -> list[ProgramSpec]:
    """Program n: PMT on 0xn00, video on 0xn01, and audio on 0xn02 from n = 2 on."""
    specs = []
    for n in range(1, count + 1):
        base = n << 8
        streams = [(STREAM_TYPE_VIDEO, base + 1, 4)]
        if n >= 2:
            streams.append((STREAM_TYPE_AUDIO, base + 2, 1))
        specs.append(ProgramSpec(n, base, tuple(streams)))
    return specs


def fixture_packet_count(duration_s, rate_bps) -> int:
    return int(Fraction(rate_bps) * Fraction(duration_s) / (PACKET_SIZE * 8))


def gen_fixture(programs: Union[int, Sequence[ProgramSpec]] = 2, duration_s=10,
                rate_bps: int = 4_000_000, seed: int = 0,
                transport_stream_id: int = 1) -> bytes:
    """Generate a constant-rate multiplex.

    The stream holds ``floor(rate * duration / 1504)`` packets (never fewer
    than one PAT plus one PMT per program). PAT and PMTs repeat every 100 ms;
    each program's first stream carries a PCR at least every 40 ms whose value
    is the packet's position on a ``rate_bps`` timeline.
    """
    specs = default_programs(programs) if isinstance(programs, int) else list(programs)
    rng = random.Random(seed)
    total = max(fixture_packet_count(duration_s, rate_bps), 1 + len(specs))
    ticks_per_packet = Fraction(PACKET_SIZE * 8 * 27_000_000) / Fraction(rate_bps)
    packets_per_s = Fraction(rate_bps) / (PACKET_SIZE * 8)
    psi_every = max(1, int(packets_per_s * Fraction(PSI_INTERVAL_S)))
    pcr_every = max(1, int(packets_per_s * Fraction(PCR_INTERVAL_S)))

    pat = build_pat([(s.program_number, s.pmt_pid) for s in specs], transport_stream_id, 0)
    pmts = {
        s.pmt_pid: build_pmt(PmtSection(
            s.program_number, 0, s.pcr_pid,
            tuple(StreamEntry(t, pid) for t, pid, _ in s.streams),
        ))
        for s in specs
    }
    es = [(pid, s) for s in specs for _, pid, _ in s.streams]
    weights = [w for s in specs for _, _, w in s.streams]
    stream_ids = {}
    for s in specs:
        for t, pid, _ in s.streams:
            stream_ids[pid] = 0xE0 if t == STREAM_TYPE_VIDEO else 0xC0

    cc: dict[int, int] = {}
    es_count: dict[int, int] = {}

    def next_cc(pid: int) -> int:
        value = cc.get(pid, -1) + 1 & 0xF
        cc[pid] = value
        return value

    def es_packet(pid: int, index: int, with_pcr: bool) -> bytes:
        n = es_count.get(pid, 0)
        es_count[pid] = n + 1
        start = n % PES_INTERVAL == 0
        room = MAX_PAYLOAD - (8 if with_pcr else 0)
        body = bytearray(rng.randbytes(room))
        if start:
            body[:9] = bytes((0, 0, 1, stream_ids[pid], 0, 0, 0x80, 0x00, 0x00))
        pcr = Pcr.from_ticks(int(index * ticks_per_packet)) if with_pcr else None
        return make_packet(pid, bytes(body), next_cc(pid), payload_unit_start=start,
                           pcr=pcr, random_access=start and with_pcr).to_bytes()

    out = []
    psi_queue: list = []
    last_pcr = {s.pcr_pid: None for s in specs if s.pcr_pid != NULL_PID}
    for i in range(total):
        if i % psi_every == 0:
            psi_queue = [pkt for pid, sec in [(PAT_PID, pat), *pmts.items()]
                         for pkt in section_packets(sec, pid)]
        if psi_queue:
            pkt = psi_queue.pop(0)
            out.append(replace(pkt, continuity_counter=next_cc(pkt.pid)).to_bytes())
            continue
        due = [pid for pid, last in last_pcr.items() if last is None or i - last >= pcr_every]
        if due:
            pid = due[0]
            last_pcr[pid] = i
            out.append(es_packet(pid, i, True))
            continue
        if rng.random() < NULL_SHARE or not es:
            out.append(null_packet().to_bytes())
            continue
        pid, _ = rng.choices(es, weights)[0]
        out.append(es_packet(pid, i, False))
    return b"".join(out)
