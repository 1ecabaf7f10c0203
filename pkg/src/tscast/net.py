"""
UDP multicast transport for transport streams.

Wire format: each datagram carries 1..7 whole TS packets (at most 1316
bytes), no header or trailer. Groups must lie in 224.0.0.0-239.255.255.255
and ports in 0..65500; ports below 1024 are accepted with a warning.
"""

from __future__ import annotations

import gc
import ipaddress
import logging
import queue
import random
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .errors import (
    JoinFailed,
    NotMulticastAddress,
    PortOutOfRange,
    ReservedPortWarning,
    ScheduleExhausted,
    SocketError,
)
from .packet import PACKET_SIZE, SYNC_BYTE, as_bytes
from .pacing import PacingSchedule, StreamStats

log = logging.getLogger(__name__)

DEFAULT_GROUP = "224.0.0.1"
DEFAULT_PORT = 5000
DEFAULT_INTERFACE = "0.0.0.0"
DEFAULT_TTL = 1
MAX_PORT = 65500
RESERVED_PORTS = 1024
PACKETS_PER_DATAGRAM = 7
MAX_DATAGRAM = PACKETS_PER_DATAGRAM * PACKET_SIZE

_RECV_BUFFER = 4 * 1024 * 1024
_POLL_S = 0.05


@dataclass(frozen=True)
class MulticastEndpoint:
    """A validated (group, port, interface) triple. Construction validates."""

    group: str
    port: int
    interface: str = DEFAULT_INTERFACE
    ttl: int = DEFAULT_TTL
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        try:
            addr = ipaddress.IPv4Address(self.group)
        except (ipaddress.AddressValueError, ValueError):
            raise NotMulticastAddress(f"{self.group!r} is not an IPv4 address") from None
        if not addr.is_multicast:
            raise NotMulticastAddress(f"{self.group} is outside 224.0.0.0-239.255.255.255")
        if not isinstance(self.port, int) or not 0 <= self.port <= MAX_PORT:
            raise PortOutOfRange(f"port {self.port} is outside 0..{MAX_PORT}")
        if not 0 <= self.ttl <= 255:
            raise ValueError(f"TTL must be 0..255, got {self.ttl}")
        if self.port < RESERVED_PORTS and not self.warnings:
            msg = ReservedPortWarning(f"port {self.port} is in the reserved range 0..1023")
            object.__setattr__(self, "warnings", (msg,))

    def __str__(self) -> str:
        return f"{self.group}:{self.port} via {self.interface}"


def validate_endpoint(group: str, port: int, interface: str = DEFAULT_INTERFACE,
                      ttl: int = DEFAULT_TTL) -> MulticastEndpoint:
    return MulticastEndpoint(str(group), port, str(interface), ttl)


def frame_datagrams(packets: Iterable) -> list[bytes]:
    """Greedy grouping: 7 packets per datagram, remainder in the last one."""
    out = []
    batch = []
    for p in packets:
        batch.append(as_bytes(p))
        if len(batch) == PACKETS_PER_DATAGRAM:
            out.append(b"".join(batch))
            batch = []
    if batch:
        out.append(b"".join(batch))
    return out


@dataclass
class Unframed:
    packets: list
    skipped: int = 0  # leading bytes before the first sync byte
    truncated: int = 0  # trailing bytes short of a whole packet


def unframe(datagram: bytes) -> Unframed:
    """Split one datagram into packets, realigning on the first sync lattice."""
    n = len(datagram)
    start = 0
    if n % PACKET_SIZE or (n and datagram[0] != SYNC_BYTE):
        start = -1
        k = datagram.find(SYNC_BYTE)
        while k != -1 and k + PACKET_SIZE <= n:
            if all(datagram[j] == SYNC_BYTE for j in range(k, n - PACKET_SIZE + 1, PACKET_SIZE)):
                start = k
                break
            k = datagram.find(SYNC_BYTE, k + 1)
        if start == -1:
            return Unframed([], 0, n)
    whole = (n - start) // PACKET_SIZE
    packets = [bytes(datagram[start + i * PACKET_SIZE:start + (i + 1) * PACKET_SIZE])
               for i in range(whole)]
    return Unframed(packets, start, n - start - whole * PACKET_SIZE)


def open_sender(endpoint: MulticastEndpoint) -> socket.socket:
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
        sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_TTL, endpoint.ttl)
        sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_LOOP, 1)
        if endpoint.interface != DEFAULT_INTERFACE:
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_IF,
                            socket.inet_aton(endpoint.interface))
    except OSError as exc:
        raise SocketError(f"cannot open sender for {endpoint}: {exc}") from exc
    return sock


def open_receiver(endpoint: MulticastEndpoint) -> socket.socket:
    """Bind to the group port and join the group on the endpoint's interface."""
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, _RECV_BUFFER)
        except OSError:
            pass
        sock.bind((endpoint.group, endpoint.port))
    except OSError as exc:
        raise SocketError(f"cannot bind {endpoint.group}:{endpoint.port}: {exc}") from exc
    try:
        mreq = struct.pack("4s4s", socket.inet_aton(endpoint.group),
                           socket.inet_aton(endpoint.interface))
        sock.setsockopt(socket.IPPROTO_IP, socket.IP_ADD_MEMBERSHIP, mreq)
    except OSError as exc:
        sock.close()
        raise JoinFailed(f"cannot join {endpoint}: {exc}") from exc
    return sock


@dataclass
class SendReport:
    datagrams: int = 0
    packets: int = 0
    bytes: int = 0
    duration_s: float = 0.0
    max_lateness_s: float = 0.0
    dropped: int = 0


def send_stream(source: Sequence, schedule: PacingSchedule, endpoint: MulticastEndpoint, *,
                loss: float = 0.0, seed: int = 0, spin_s: float = 0.001,
                stop: Optional[threading.Event] = None) -> SendReport:
    """Send ``source`` to ``endpoint``, one datagram no earlier than its first packet's offset.

    The sender sleeps until ``spin_s`` before each deadline and busy-waits
    the rest. ``loss`` drops that fraction of datagrams (seeded) before they
    reach the socket, standing in for a lossy network.
    """
    if not isinstance(endpoint, MulticastEndpoint):
        raise TypeError("send_stream needs a MulticastEndpoint; call validate_endpoint first")
    packets = list(source)
    if len(schedule) < len(packets):
        raise ScheduleExhausted(f"schedule covers {len(schedule)} of {len(packets)} packets")
    report = SendReport()
    if not packets:
        return report
    datagrams = frame_datagrams(packets)
    rng = random.Random(seed)
    sock = open_sender(endpoint)
    dest = (endpoint.group, endpoint.port)
    offsets = schedule.offsets_us
    # A full collection over a large heap can stall the loop for tens of ms;
    # the loop itself creates no reference cycles.
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter()
        last_sent = start
        for k, dgram in enumerate(datagrams):
            if stop is not None and stop.is_set():
                break
            target = start + offsets[k * PACKETS_PER_DATAGRAM] / 1e6
            wait = target - time.perf_counter() - spin_s
            if wait > 0:
                time.sleep(wait)
            now = time.perf_counter()
            while now < target:
                now = time.perf_counter()
            report.max_lateness_s = max(report.max_lateness_s, now - target)
            if loss and rng.random() < loss:
                report.dropped += 1
                continue
            try:
                sock.sendto(dgram, dest)
            except OSError as exc:
                raise SocketError(f"send to {endpoint} failed: {exc}") from exc
            last_sent = time.perf_counter()
            report.datagrams += 1
            report.packets += len(dgram) // PACKET_SIZE
            report.bytes += len(dgram)
        report.duration_s = last_sent - start
    finally:
        if gc_was_enabled:
            gc.enable()
        sock.close()
    return report


@dataclass
class ReceiveReport:
    datagrams: int = 0
    packets: int = 0
    bytes: int = 0
    gaps: int = 0
    skipped_bytes: int = 0
    truncated_bytes: int = 0
    first_arrival: Optional[float] = None
    last_arrival: Optional[float] = None
    stats: Optional[StreamStats] = None

    @property
    def duration_s(self) -> float:
        if self.first_arrival is None:
            return 0.0
        return self.last_arrival - self.first_arrival

    @property
    def bitrate_bps(self) -> float:
        """Average rate over the first-to-last arrival span."""
        d = self.duration_s
        return self.bytes * 8 / d if d > 0 else 0.0


PacketSink = Callable[[bytes, float], None]


def receive_stream(endpoint: MulticastEndpoint, sink: Optional[PacketSink] = None, *,
                   count: Optional[int] = None, duration: Optional[float] = None,
                   idle_timeout: Optional[float] = None,
                   stop: Optional[threading.Event] = None,
                   ready: Optional[threading.Event] = None,
                   stats: Optional[StreamStats] = None,
                   on_datagram: Optional[Callable[[bytes], None]] = None,
                   queue_size: int = 4096) -> ReceiveReport:
    """Join ``endpoint`` and feed received packets to ``sink`` until a stop condition.

    Stop conditions: ``count`` packets delivered, ``duration`` seconds elapsed,
    ``idle_timeout`` seconds without a datagram (counted from the first one),
    or ``stop`` set. ``ready`` is set once the group is joined. An intake
    thread reads the socket into a bounded queue; this thread consumes it.
    """
    if not isinstance(endpoint, MulticastEndpoint):
        raise TypeError("receive_stream needs a MulticastEndpoint; call validate_endpoint first")
    sock = open_receiver(endpoint)
    sock.settimeout(_POLL_S)
    if ready is not None:
        ready.set()
    stats = stats if stats is not None else StreamStats()
    report = ReceiveReport(stats=stats)
    q: queue.Queue = queue.Queue(maxsize=queue_size)
    halt = threading.Event()
    intake_error: list = []

    def intake():
        try:
            while not halt.is_set():
                try:
                    data = sock.recv(65536)
                except socket.timeout:
                    continue
                item = (data, time.perf_counter())
                while not halt.is_set():
                    try:
                        q.put(item, timeout=_POLL_S)  # blocks: no tool-side drops
                        break
                    except queue.Full:
                        continue
        except OSError as exc:
            intake_error.append(exc)
        if intake_error:
            try:
                q.put_nowait(None)
            except queue.Full:
                pass

    worker = threading.Thread(target=intake, name=f"intake-{endpoint.port}", daemon=True)
    worker.start()
    began = time.perf_counter()
    try:
        while True:
            if stop is not None and stop.is_set():
                break
            now = time.perf_counter()
            if duration is not None and now - began >= duration:
                break
            if (idle_timeout is not None and report.last_arrival is not None
                    and now - report.last_arrival >= idle_timeout):
                break
            try:
                item = q.get(timeout=_POLL_S)
            except queue.Empty:
                continue
            if item is None:
                break
            data, arrival = item
            if on_datagram is not None:
                on_datagram(data)
            report.datagrams += 1
            if report.first_arrival is None:
                report.first_arrival = arrival
            report.last_arrival = arrival
            frame = unframe(data)
            report.skipped_bytes += frame.skipped
            report.truncated_bytes += frame.truncated
            done = False
            for pkt in frame.packets:
                stats.update(pkt, arrival)
                if sink is not None:
                    sink(pkt, arrival)
                report.packets += 1
                report.bytes += len(pkt)
                if count is not None and report.packets >= count:
                    done = True
                    break
            if done:
                break
    finally:
        halt.set()
        worker.join(timeout=1.0)
        sock.close()
    if intake_error:
        raise SocketError(f"receive on {endpoint} failed: {intake_error[0]}") from intake_error[0]
    report.gaps = stats.total_cc_errors
    return report
