"""
Bitrate arithmetic, send schedules and reception statistics.

Storage-derived figures truncate every division toward zero, which is the
only rounding rule that reproduces 2 GiB/hour -> 596523 B/s -> 582 KB/s ->
4772184 b/s -> 4 Mb/s. Exact rationals are kept alongside.
"""

from __future__ import annotations

import json
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

from .errors import InsufficientPcrs, NonMonotonePcr, ZeroDuration, ZeroRate
from .packet import (
    NULL_PID,
    PACKET_SIZE,
    PCR_HZ,
    PCR_MODULUS,
    TsPacket,
    peek_adaptation,
    peek_header,
)

PACKET_BITS = PACKET_SIZE * 8
_HALF_WRAP = PCR_MODULUS // 2

CONSTANT = "constant"
PCR_LOCKED = "pcr"


@dataclass(frozen=True)
class BitrateReport:
    bytes_per_sec: int
    kilobytes_per_sec: int
    bits_per_sec: int
    megabits_per_sec: int
    exact_bytes_per_sec: Fraction = Fraction(0)


def bitrate_from_storage(stored_bytes: int, duration_seconds) -> BitrateReport:
    """Average rate needed to play ``stored_bytes`` in ``duration_seconds``."""
    if duration_seconds <= 0:
        raise ZeroDuration("duration must be positive")
    exact = Fraction(stored_bytes) / Fraction(duration_seconds)
    bps = int(exact)  # truncates toward zero
    bits = bps * 8
    return BitrateReport(bps, bps // 1024, bits, bits // 1024 // 1024, exact)


class PcrBitrate(NamedTuple):
    numerator: int
    denominator: int
    bits_per_sec: int  # rounded to nearest
    pid: int

    @property
    def exact(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


def _raw(pkt) -> bytes:
    return pkt.to_bytes() if isinstance(pkt, TsPacket) else pkt


def unwrap_pcr(prev_unwrapped: int, prev_raw: int, raw: int) -> int:
    """Extend a wrapped 27 MHz PCR value onto an unbounded timeline."""
    delta = raw - prev_raw
    if delta < -_HALF_WRAP:
        delta += PCR_MODULUS
    elif delta > _HALF_WRAP:
        delta -= PCR_MODULUS
    return prev_unwrapped + delta


def pcr_anchors(packets: Iterable, pid: Optional[int] = None) -> tuple[int, list[tuple[int, int]]]:
    """Return (pid, [(packet_index, unwrapped_ticks), ...]) for one PCR PID.

    With ``pid=None`` the first PID seen carrying a PCR is used.
    """
    anchors: list[tuple[int, int]] = []
    prev_raw = None
    for i, pkt in enumerate(packets):
        raw = _raw(pkt)
        if not raw[3] & 0x20:
            continue
        _, ticks = peek_adaptation(raw)
        if ticks is None:
            continue
        this_pid = peek_header(raw).pid
        if pid is None:
            pid = this_pid
        elif this_pid != pid:
            continue
        if prev_raw is None:
            value = ticks
        else:
            value = unwrap_pcr(anchors[-1][1], prev_raw, ticks)
            if value <= anchors[-1][1]:
                raise NonMonotonePcr(
                    f"PCR on PID {pid:#x} went from {anchors[-1][1]} to {value} at packet {i}"
                )
        prev_raw = ticks
        anchors.append((i, value))
    return (pid if pid is not None else -1), anchors


def bitrate_from_pcr(packets: Sequence, pid: Optional[int] = None) -> PcrBitrate:
    """Native mux rate from the byte span and tick span between the first and last PCR."""
    pid, anchors = pcr_anchors(packets, pid)
    if len(anchors) < 2:
        raise InsufficientPcrs(f"need at least 2 PCRs, found {len(anchors)}")
    (i0, t0), (i1, t1) = anchors[0], anchors[-1]
    rate = Fraction((i1 - i0) * PACKET_SIZE * 8 * PCR_HZ, t1 - t0)
    return PcrBitrate(rate.numerator, rate.denominator, round(rate), pid)


@dataclass(frozen=True)
class PacingSchedule:
    """Send offsets (integer microseconds from stream start), one per packet."""

    offsets_us: tuple
    mode: str
    duration_us: int

    def __len__(self) -> int:
        return len(self.offsets_us)

    def __getitem__(self, i):
        return self.offsets_us[i]

    def repeat(self, times: int) -> "PacingSchedule":
        """Schedule for ``times`` back-to-back passes over the same packets."""
        offsets = tuple(
            k * self.duration_us + off for k in range(times) for off in self.offsets_us
        )
        return PacingSchedule(offsets, self.mode, self.duration_us * times)


def make_schedule(packet_count: int, rate=None, *, pcr_source: Optional[Sequence] = None,
                  mode: str = CONSTANT, pid: Optional[int] = None) -> PacingSchedule:
    """Build a send schedule.

    ``mode="constant"`` spaces packets evenly at ``rate`` bits/s.
    ``mode="pcr"`` interpolates linearly between the PCR anchors of
    ``pcr_source`` and extrapolates at the mean PCR rate outside them.
    """
    if mode == CONSTANT:
        if rate is None or rate <= 0:
            raise ZeroRate("constant-rate pacing needs a positive rate")
        us_per_packet = Fraction(PACKET_BITS * 1_000_000) / Fraction(rate)
        offsets = tuple(int(i * us_per_packet) for i in range(packet_count))
        return PacingSchedule(offsets, CONSTANT, int(packet_count * us_per_packet))

    if mode != PCR_LOCKED:
        raise ValueError(f"unknown pacing mode {mode!r}")
    if pcr_source is None:
        raise InsufficientPcrs("PCR-locked pacing needs a PCR source")
    _, anchors = pcr_anchors(pcr_source, pid)
    if len(anchors) < 2:
        raise InsufficientPcrs(f"need at least 2 PCRs, found {len(anchors)}")
    (first_i, first_t), (last_i, last_t) = anchors[0], anchors[-1]
    # mean slope p/q ticks per packet, used outside the anchors
    p, q = last_t - first_t, last_i - first_i
    if p <= 0:
        raise ZeroRate("PCR anchors do not advance")
    # origin = ticks at packet 0 = (first_t * q - first_i * p) / q
    origin_num = first_t * q - first_i * p

    def offset_us(num: int, den: int) -> int:
        # floor(((num / den) - origin) / 27) in exact integers
        return (num * q - origin_num * den) // (27 * den * q)

    def ticks_at(i: int, seg: int) -> tuple[int, int]:
        if i <= first_i:
            return first_t * q - (first_i - i) * p, q
        if i >= last_i:
            return last_t * q + (i - last_i) * p, q
        (ia, ta), (ib, tb) = anchors[seg], anchors[seg + 1]
        return ta * (ib - ia) + (tb - ta) * (i - ia), ib - ia

    offsets = []
    seg = 0
    for i in range(packet_count):
        while seg + 2 < len(anchors) and i >= anchors[seg + 1][0]:
            seg += 1
        offsets.append(offset_us(*ticks_at(i, seg)))
    duration = offset_us(*ticks_at(packet_count, len(anchors) - 2))
    return PacingSchedule(tuple(offsets), PCR_LOCKED, duration)


class StreamStats:
    """
    Per-session reception statistics.

    Updated from exactly one ingest thread via :meth:`update`; other threads
    read consistent copies through :meth:`snapshot`.

    Continuity rule: on a payload-carrying PID (null packets excluded) the
    counter must advance by one modulo 16. A single repeat of the previous
    counter is a legal duplicate; a discontinuity_indicator suppresses the
    check for that packet.
    """

    def __init__(self, window_s: float = 1.0):
        self.window_s = window_s
        self.pid_counts: dict[int, int] = defaultdict(int)
        self.cc_errors: dict[int, int] = defaultdict(int)
        self.scrambled = 0
        self.transport_errors = 0
        self.total_packets = 0
        self.total_bytes = 0
        self.first_arrival: Optional[float] = None
        self.last_arrival: Optional[float] = None
        self.pcr_jitter_us = 0.0
        self._last_cc: dict[int, int] = {}
        self._dup_seen: dict[int, bool] = {}
        self._pcr_ref: dict[int, tuple] = {}  # pid -> (arrival0, ticks0, last_raw, last_unwrapped)
        self._window: deque = deque()
        self._window_bytes = 0
        self._lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def update(self, packet, arrival_time: float) -> "StreamStats":
        raw = _raw(packet)
        hdr = peek_header(raw)
        pid = hdr.pid
        with self._lock:
            self.total_packets += 1
            self.total_bytes += len(raw)
            self.pid_counts[pid] += 1
            if self.first_arrival is None:
                self.first_arrival = arrival_time
            self.last_arrival = arrival_time
            if hdr.transport_error:
                self.transport_errors += 1
            if hdr.scrambling_control:
                self.scrambled += 1

            discontinuity, pcr = peek_adaptation(raw) if hdr.adaptation_field_control & 2 else (False, None)
            if pid != NULL_PID and hdr.adaptation_field_control & 1:
                self._check_cc(pid, hdr.continuity_counter, discontinuity)
            elif discontinuity:
                self._last_cc.pop(pid, None)  # next payload packet starts a new sequence
            if pcr is not None:
                self._track_pcr(pid, pcr, arrival_time, discontinuity)

            self._window.append((arrival_time, len(raw)))
            self._window_bytes += len(raw)
            horizon = arrival_time - self.window_s
            while self._window and self._window[0][0] < horizon:
                self._window_bytes -= self._window.popleft()[1]
        return self

    def _check_cc(self, pid: int, cc: int, discontinuity: bool) -> None:
        last = self._last_cc.get(pid)
        self._last_cc[pid] = cc
        if last is None or discontinuity:
            self._dup_seen[pid] = False
            return
        if cc == last:
            if self._dup_seen.get(pid):
                self.cc_errors[pid] += 1
            self._dup_seen[pid] = True
            return
        self._dup_seen[pid] = False
        if cc != (last + 1) & 0xF:
            self.cc_errors[pid] += 1

    def _track_pcr(self, pid: int, ticks: int, arrival: float, discontinuity: bool) -> None:
        ref = self._pcr_ref.get(pid)
        if ref is None or discontinuity:
            self._pcr_ref[pid] = (arrival, ticks, ticks, ticks)
            return
        arrival0, ticks0, last_raw, last_unwrapped = ref
        unwrapped = unwrap_pcr(last_unwrapped, last_raw, ticks)
        self._pcr_ref[pid] = (arrival0, ticks0, ticks, unwrapped)
        expected_us = (unwrapped - ticks0) / 27.0
        actual_us = (arrival - arrival0) * 1e6
        self.pcr_jitter_us = max(self.pcr_jitter_us, abs(actual_us - expected_us))

    @property
    def total_cc_errors(self) -> int:
        return sum(self.cc_errors.values())

    @property
    def duration_s(self) -> float:
        if self.first_arrival is None:
            return 0.0
        return self.last_arrival - self.first_arrival

    @property
    def average_bitrate_bps(self) -> float:
        d = self.duration_s
        return self.total_bytes * 8 / d if d > 0 else 0.0

    @property
    def window_bitrate_bps(self) -> float:
        return self._window_bytes * 8 / self.window_s

    def snapshot(self, timestamp_ms: Optional[int] = None) -> dict:
        """Consistent copy of the counters as a plain record."""
        with self._lock:
            if timestamp_ms is None:
                timestamp_ms = int(time.time() * 1000)
            return {
                "timestamp_ms": timestamp_ms,
                "total_packets": self.total_packets,
                "total_bytes": self.total_bytes,
                "bitrate_bps": round(self.window_bitrate_bps),
                "avg_bitrate_bps": round(self.average_bitrate_bps),
                "cc_errors": self.total_cc_errors,
                "pcr_jitter_us": round(self.pcr_jitter_us, 1),
                "transport_errors": self.transport_errors,
                "scrambled": self.scrambled,
                "duration_s": round(self.duration_s, 6),
                "per_pid": {
                    f"{pid:#06x}": {"packets": n, "cc_errors": self.cc_errors.get(pid, 0)}
                    for pid, n in sorted(self.pid_counts.items())
                },
            }


def update_stats(stats: StreamStats, packet, arrival_time: float) -> StreamStats:
    return stats.update(packet, arrival_time)


def stats_report(stats: StreamStats, timestamp_ms: Optional[int] = None) -> dict:
    return stats.snapshot(timestamp_ms)


def format_record(record: dict) -> str:
    """One line of the line-delimited JSON stats stream."""
    return json.dumps(record, separators=(",", ":"))
