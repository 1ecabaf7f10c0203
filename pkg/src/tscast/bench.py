"""
One sender, N concurrent receivers on the same multicast group.

Each receiver runs in its own process so that clients and sender compete
for CPU the way separate machines on a LAN would not: through the OS
scheduler rather than a shared interpreter lock.
"""

from __future__ import annotations

import hashlib
import multiprocessing as mp
import queue
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .net import MulticastEndpoint, ReceiveReport, SendReport, receive_stream, send_stream
from .pacing import PacingSchedule

PASS = "PASS"
FAIL = "FAIL"


@dataclass
class ClientResult:
    index: int
    report: Optional[ReceiveReport] = None
    digest: str = ""
    identical: bool = False
    error: Optional[str] = None

    @property
    def cc_errors(self) -> int:
        return self.report.gaps if self.report is not None else 0

    @property
    def ok(self) -> bool:
        return self.error is None and self.identical and self.cc_errors == 0


@dataclass
class BenchResult:
    verdict: str
    clients: list = field(default_factory=list)
    send: Optional[SendReport] = None
    source_bytes: int = 0
    source_digest: str = ""


def _client(index: int, endpoint: MulticastEndpoint, expected_packets: int,
            ready, stop, results) -> None:
    h = hashlib.sha256()
    result = ClientResult(index)
    try:
        result.report = receive_stream(
            endpoint, lambda pkt, _t: h.update(pkt),
            count=expected_packets, stop=stop, ready=ready,
        )
    except Exception as exc:  # reported per client, never kills the bench
        result.error = f"{type(exc).__name__}: {exc}"
    finally:
        ready.set()
    result.digest = h.hexdigest()
    results.put(result)


def _context():
    methods = mp.get_all_start_methods()
    return mp.get_context("fork" if "fork" in methods else "spawn")


def run_bench(packets: Sequence[bytes], clients: int, endpoint: MulticastEndpoint,
              schedule: PacingSchedule, *, loss: float = 0.0, seed: int = 0,
              drain_s: float = 1.0, join_timeout_s: float = 10.0) -> BenchResult:
    """Stream ``packets`` once to ``clients`` loopback receivers and judge the result.

    Verdict is PASS iff every client received the exact source byte stream
    with zero continuity errors.
    """
    if clients < 1:
        raise ValueError("bench needs at least one client")
    packets = [bytes(p) for p in packets]
    ctx = _context()
    stop = ctx.Event()
    readies = [ctx.Event() for _ in range(clients)]
    results_q = ctx.Queue()
    procs = [
        ctx.Process(target=_client, name=f"bench-client-{i}",
                    args=(i, endpoint, len(packets), readies[i], stop, results_q),
                    daemon=True)
        for i in range(clients)
    ]
    for p in procs:
        p.start()
    for ev in readies:
        ev.wait(join_timeout_s)

    send = None
    collected: dict[int, ClientResult] = {}
    try:
        send = send_stream(packets, schedule, endpoint, loss=loss, seed=seed)
    finally:
        deadline = time.monotonic() + drain_s
        while len(collected) < clients and time.monotonic() < deadline:
            try:
                r = results_q.get(timeout=max(0.01, deadline - time.monotonic()))
                collected[r.index] = r
            except queue.Empty:
                break
        stop.set()
        deadline = time.monotonic() + join_timeout_s
        while len(collected) < clients and time.monotonic() < deadline:
            try:
                r = results_q.get(timeout=max(0.01, deadline - time.monotonic()))
                collected[r.index] = r
            except queue.Empty:
                break
        for p in procs:
            p.join(timeout=1.0)
            if p.is_alive():
                p.terminate()

    source = b"".join(packets)
    digest = hashlib.sha256(source).hexdigest()
    results = []
    for i in range(clients):
        r = collected.get(i) or ClientResult(i, error="client produced no report")
        r.identical = (r.error is None and r.report is not None
                       and r.report.bytes == len(source) and r.digest == digest)
        results.append(r)
    verdict = PASS if all(r.ok for r in results) else FAIL
    return BenchResult(verdict, results, send, len(source), digest)
