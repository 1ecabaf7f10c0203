"""
Command-line front end: ``tscast <command> ...``.

Endpoint and pacing settings may come from a ``key = value`` config file
(``--config``); flags given on the command line override file values.
Results go to stdout, diagnostics and errors to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .bench import BenchResult, run_bench
from .errors import InsufficientPcrs, TsError, ZeroRate
from .fec import chain_roundtrip, channel, fec_decode, fec_encode, parse_error_model
from .fec.chain import ChainReport
from .fixtures import gen_fixture
from .net import (
    DEFAULT_GROUP,
    DEFAULT_INTERFACE,
    DEFAULT_PORT,
    DEFAULT_TTL,
    MulticastEndpoint,
    ReceiveReport,
    SendReport,
    receive_stream,
    send_stream,
    validate_endpoint,
)
from .pacing import (
    CONSTANT,
    PCR_LOCKED,
    StreamStats,
    bitrate_from_pcr,
    format_record,
    make_schedule,
)
from .packet import PACKET_SIZE, peek_header, read_ts, write_ts
from .remux import extract_program, packet_source, scan_programs

log = logging.getLogger("tscast")

AUTO = "auto"

# config-file key -> (attribute, converter)
_CONFIG_KEYS = {
    "group": ("group", str),
    "port": ("port", int),
    "interface": ("iface", str),
    "iface": ("iface", str),
    "ttl": ("ttl", int),
    "rate": ("rate", str),
    "loop": ("loop", int),
    "stats_interval": ("stats_interval", int),
    "clients": ("clients", int),
    "seed": ("seed", int),
    "loss": ("loss", float),
}

_DEFAULTS = {
    "group": DEFAULT_GROUP,
    "port": DEFAULT_PORT,
    "iface": DEFAULT_INTERFACE,
    "ttl": DEFAULT_TTL,
    "rate": AUTO,
    "loop": 1,
    "stats_interval": 1000,
    "clients": 4,
    "seed": 0,
    "loss": 0.0,
}


@dataclass(frozen=True)
class Config:
    endpoint: MulticastEndpoint
    rate: object = AUTO  # "auto" (PCR-locked) or a positive bit rate
    loop: int = 1
    stats_interval_ms: int = 1000
    clients: int = 4
    seed: int = 0
    loss: float = 0.0


def load_config(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment. Returns parsed values."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not sep or key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unrecognised config line {line!r}")
        attr, conv = _CONFIG_KEYS[key]
        values[attr] = conv(value.strip())
    return values


def parse_rate(text) -> object:
    if isinstance(text, str) and text.strip().lower() == AUTO:
        return AUTO
    rate = float(text)
    if not rate > 0:
        raise ZeroRate(f"fixed rate must be positive, got {text}")
    return int(rate) if rate == int(rate) else rate


def resolve_config(ns: argparse.Namespace) -> Config:
    """Merge defaults, config file and flags, then validate the endpoint."""
    merged = dict(_DEFAULTS)
    if getattr(ns, "config", None):
        merged.update(load_config(ns.config))
    for key in _DEFAULTS:
        value = getattr(ns, key, None)
        if value is not None:
            merged[key] = value
    endpoint = validate_endpoint(merged["group"], merged["port"], merged["iface"], merged["ttl"])
    for w in endpoint.warnings:
        print(f"tscast: warning: {w}", file=sys.stderr)
    if merged["loop"] < 1:
        raise ValueError("--loop must be at least 1")
    if merged["clients"] < 1:
        raise ValueError("--clients must be at least 1")
    return Config(endpoint, parse_rate(merged["rate"]), merged["loop"],
                  merged["stats_interval"], merged["clients"], merged["seed"], merged["loss"])


def _schedule(packets, rate):
    if rate == AUTO:
        return make_schedule(len(packets), pcr_source=packets, mode=PCR_LOCKED)
    return make_schedule(len(packets), rate, mode=CONSTANT)


# ---------------------------------------------------------------- commands


def cmd_analyze(source) -> dict:
    """Packet count, PID table, programs, PCR bitrate and continuity errors."""
    if isinstance(source, (str, Path)):
        res = read_ts(source)
        packets, skipped = res.packets, res.skipped
    else:
        packets, skipped = packet_source(source), 0
    stats = StreamStats()
    for pkt in packets:
        stats.update(pkt, 0.0)
    pids = {}
    for pkt in packets:
        pid = peek_header(pkt).pid
        pids[pid] = pids.get(pid, 0) + 1
    programs = []
    if packets:
        try:
            lineup = scan_programs(packets)
            programs = [
                {"program": p.program_number, "pmt_pid": p.pmt_pid, "pcr_pid": p.pcr_pid,
                 "streams": [{"type": t, "pid": pid} for t, pid in p.streams]}
                for p in lineup.programs
            ]
        except TsError as exc:
            log.warning("no program table: %s", exc)
    try:
        bitrate = bitrate_from_pcr(packets).bits_per_sec
    except (InsufficientPcrs, ValueError):
        bitrate = None
    return {
        "packets": len(packets),
        "bytes": len(packets) * PACKET_SIZE,
        "skipped_bytes": skipped,
        "pids": {pid: pids[pid] for pid in sorted(pids)},
        "programs": programs,
        "pcr_bitrate_bps": bitrate,
        "cc_errors": stats.total_cc_errors,
    }


def cmd_programs(source) -> list[str]:
    """One ``"<program> → PMT 0x<pid>"`` line per program in the PAT."""
    lineup = scan_programs(source)
    return [f"{p.program_number} → PMT {p.pmt_pid:#06x}" for p in lineup.programs]


def cmd_extract(source, program: int, output) -> int:
    """Write the single-program stream to ``output``; returns the packet count."""
    return write_ts(output, extract_program(source, program)) // PACKET_SIZE


def cmd_serve(source, config: Config, *, program: Optional[int] = None,
              stop: Optional[threading.Event] = None) -> SendReport:
    """Stream a file (or one program of it) ``config.loop`` times back to back."""
    packets = packet_source(source)
    if program is not None:
        packets = extract_program(packets, program)
    schedule = _schedule(packets, config.rate).repeat(config.loop)
    return send_stream(packets * config.loop, schedule, config.endpoint,
                       loss=config.loss, seed=config.seed, stop=stop)


def cmd_receive(config: Config, record=None, *, count: Optional[int] = None,
                duration: Optional[float] = None, idle_timeout: Optional[float] = None,
                stats_out=None, stop: Optional[threading.Event] = None,
                ready: Optional[threading.Event] = None) -> ReceiveReport:
    """Join the group, optionally record to ``record``, and emit periodic stats lines."""
    stats = StreamStats()
    halt = threading.Event()
    ticker = None
    if stats_out is not None and config.stats_interval_ms > 0:
        def tick():
            while not halt.wait(config.stats_interval_ms / 1000):
                print(format_record(stats.snapshot()), file=stats_out, flush=True)
        ticker = threading.Thread(target=tick, name="stats", daemon=True)
        ticker.start()
    fh = open(record, "wb") if record is not None else None
    try:
        sink = (lambda pkt, _t: fh.write(pkt)) if fh is not None else None
        return receive_stream(config.endpoint, sink, count=count, duration=duration,
                              idle_timeout=idle_timeout, stop=stop, ready=ready, stats=stats)
    finally:
        halt.set()
        if ticker is not None:
            ticker.join()
        if fh is not None:
            fh.close()


def cmd_bench(source, config: Config) -> BenchResult:
    packets = packet_source(source)
    return run_bench(packets, config.clients, config.endpoint, _schedule(packets, config.rate),
                     loss=config.loss, seed=config.seed)


def cmd_fecsim(sub: str, source, output=None, *, errors: str = "none", seed: int = 0,
               interleave: bool = True):
    """``encode``/``decode``/``channel`` write ``output``; ``roundtrip`` returns a ChainReport."""
    data = Path(source).read_bytes()
    if sub == "roundtrip":
        return chain_roundtrip(packet_source(data), parse_error_model(errors, seed))
    if sub == "encode":
        out = fec_encode(packet_source(data), interleave=interleave)
        result = {"frames": len(out) // 204}
    elif sub == "decode":
        out, rep = fec_decode(data, interleave=interleave)
        result = {"packets": len(out) // PACKET_SIZE, "corrected_bytes": rep.corrected_bytes,
                  "failed_codewords": rep.failed_codewords}
    elif sub == "channel":
        out, elog = channel(data, parse_error_model(errors, seed))
        result = {"errors": len(elog)}
    else:
        raise ValueError(f"unknown fecsim subcommand {sub!r}")
    Path(output).write_bytes(out)
    return result


def format_recovery(report: ChainReport) -> str:
    pct = math.floor(report.recovery_ratio * 10000) / 100  # never rounds up to 100
    return (f"recovered {pct:g}% ({report.recovered}/{report.packets} packets, "
            f"{report.corrected_bytes} bytes corrected, {report.decode_failures} codewords failed)")


def cmd_gen(output, *, programs: int = 2, duration: float = 10, rate: int = 4_000_000,
            seed: int = 0) -> int:
    """Write a synthetic fixture; returns its size in bytes."""
    data = gen_fixture(programs, duration, rate, seed)
    Path(output).write_bytes(data)
    return len(data)


# ---------------------------------------------------------------- argparse


def _add_endpoint(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--group", help=f"multicast group (default {DEFAULT_GROUP})")
    p.add_argument("--port", type=int, help=f"UDP port (default {DEFAULT_PORT})")
    p.add_argument("--iface", help="IP address of the network interface")
    p.add_argument("--ttl", type=int, help=f"multicast TTL (default {DEFAULT_TTL})")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tscast", description=__doc__.strip().splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="summarise a transport stream file")
    p.add_argument("input")
    p.add_argument("--json", action="store_true", help="print the report as JSON")

    p = sub.add_parser("programs", help="list the programs in a multiplex")
    p.add_argument("input")

    p = sub.add_parser("extract", help="write one program as its own stream")
    p.add_argument("input")
    p.add_argument("--program", type=int, required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("serve", help="stream a file to a multicast group")
    p.add_argument("input")
    _add_endpoint(p)
    p.add_argument("--rate", help="'auto' (follow PCR) or a fixed bit rate")
    p.add_argument("--loop", type=int, help="number of passes over the file")
    p.add_argument("--program", type=int, help="serve only this program")
    p.add_argument("--loss", type=float, help="drop this fraction of datagrams")

    p = sub.add_parser("receive", help="join a group and record or monitor it")
    _add_endpoint(p)
    p.add_argument("--record", help="write received packets to this file")
    p.add_argument("--stats-interval", dest="stats_interval", type=int,
                   help="milliseconds between stats lines (0 disables)")
    p.add_argument("--count", type=int, help="stop after this many packets")
    p.add_argument("--duration", type=float, help="stop after this many seconds")
    p.add_argument("--idle-timeout", dest="idle_timeout", type=float,
                   help="stop after this many silent seconds once data has arrived")

    p = sub.add_parser("bench", help="one sender, N loopback receivers")
    p.add_argument("input")
    _add_endpoint(p)
    p.add_argument("--clients", type=int)
    p.add_argument("--rate")
    p.add_argument("--loss", type=float)

    p = sub.add_parser("fecsim", help="simulate the satellite FEC stage")
    p.add_argument("sub", choices=["encode", "decode", "channel", "roundtrip"])
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--errors", default="none",
                   help="none | rate:P | burst:LEN:PERIOD[:OFFSET] | pos:I,J,...")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-interleave", dest="interleave", action="store_false")

    p = sub.add_parser("gen", help="generate a synthetic multiplex")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--programs", type=int, default=2)
    p.add_argument("--duration", type=float, default=10)
    p.add_argument("--rate", type=int, default=4_000_000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _print_analysis(rep: dict) -> None:
    print(f"packets: {rep['packets']} ({rep['bytes']} bytes, {rep['skipped_bytes']} skipped)")
    rate = rep["pcr_bitrate_bps"]
    print(f"pcr bitrate: {rate if rate is not None else 'n/a'} b/s")
    print(f"continuity errors: {rep['cc_errors']}")
    print(f"programs: {len(rep['programs'])}")
    for p in rep["programs"]:
        streams = ", ".join(f"{s['pid']:#06x} (type {s['type']:#04x})" for s in p["streams"])
        print(f"  {p['program']}: PMT {p['pmt_pid']:#06x}, PCR {p['pcr_pid']:#06x}, {streams}")
    print("pids:")
    for pid, n in rep["pids"].items():
        print(f"  {pid:#06x}: {n}")


def _dispatch(ns: argparse.Namespace) -> int:
    cmd = ns.command
    if cmd == "analyze":
        rep = cmd_analyze(ns.input)
        if ns.json:
            print(json.dumps({**rep, "pids": {f"{k:#06x}": v for k, v in rep["pids"].items()}}))
        else:
            _print_analysis(rep)
    elif cmd == "programs":
        for line in cmd_programs(ns.input):
            print(line)
    elif cmd == "extract":
        n = cmd_extract(ns.input, ns.program, ns.output)
        print(f"wrote {n} packets to {ns.output}")
    elif cmd == "serve":
        rep = cmd_serve(ns.input, resolve_config(ns), program=ns.program)
        print(f"sent {rep.packets} packets ({rep.bytes} bytes) in {rep.datagrams} datagrams "
              f"over {rep.duration_s:.3f} s, max lateness {rep.max_lateness_s * 1e3:.2f} ms")
    elif cmd == "receive":
        stats_out = sys.stdout if ns.record is None or ns.stats_interval is not None else None
        rep = cmd_receive(resolve_config(ns), ns.record, count=ns.count, duration=ns.duration,
                          idle_timeout=ns.idle_timeout, stats_out=stats_out)
        print(f"received {rep.packets} packets ({rep.bytes} bytes) in {rep.datagrams} datagrams, "
              f"{rep.gaps} continuity errors", file=sys.stderr)
    elif cmd == "bench":
        res = cmd_bench(ns.input, resolve_config(ns))
        for c in res.clients:
            r = c.report
            detail = c.error or (f"{r.packets} packets, {r.bitrate_bps / 1e6:.3f} Mb/s, "
                                 f"{c.cc_errors} cc errors, "
                                 f"{'identical' if c.identical else 'DIFFERS'}")
            print(f"client {c.index}: {detail}")
        print(f"sender: {res.send.packets if res.send else 0} packets, "
              f"{res.send.duration_s if res.send else 0:.3f} s")
        print(res.verdict)
        return 0 if res.verdict == "PASS" else 1
    elif cmd == "fecsim":
        if ns.sub != "roundtrip" and not ns.output:
            raise ValueError(f"fecsim {ns.sub} needs -o/--output")
        res = cmd_fecsim(ns.sub, ns.input, ns.output, errors=ns.errors, seed=ns.seed,
                         interleave=ns.interleave)
        if ns.sub == "roundtrip":
            print(format_recovery(res))
        else:
            print(json.dumps(res))
    elif cmd == "gen":
        n = cmd_gen(ns.output, programs=ns.programs, duration=ns.duration, rate=ns.rate,
                    seed=ns.seed)
        print(f"wrote {n // PACKET_SIZE} packets to {ns.output}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="tscast: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return _dispatch(ns)
    except KeyboardInterrupt:
        return 130
    except (TsError, OSError, ValueError, LookupError) as exc:
        print(f"tscast: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
