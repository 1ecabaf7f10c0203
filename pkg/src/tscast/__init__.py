"""Transport-stream streaming toolkit: parse, remultiplex, pace, multicast, FEC simulation."""

from .errors import *  # noqa: F401,F403
from .errors import __all__ as _error_names
from .fixtures import ProgramSpec, default_programs, gen_fixture
from .net import (
    MulticastEndpoint,
    ReceiveReport,
    SendReport,
    frame_datagrams,
    receive_stream,
    send_stream,
    unframe,
    validate_endpoint,
)
from .pacing import (
    BitrateReport,
    PacingSchedule,
    StreamStats,
    bitrate_from_pcr,
    bitrate_from_storage,
    make_schedule,
    stats_report,
    update_stats,
)
from .packet import (
    AdaptationField,
    Pcr,
    TsPacket,
    make_packet,
    null_packet,
    parse_packet,
    read_ts,
    resync,
    serialize_packet,
    write_ts,
)
from .psi import (
    PatSection,
    PmtSection,
    SectionAssembler,
    StreamEntry,
    build_pat,
    build_pmt,
    crc32_mpeg,
    parse_pat,
    parse_pmt,
    section_packets,
)
from .remux import ProgramInfo, extract_program, list_programs, passthrough, pid_set, scan_programs

__version__ = "0.1.0"

__all__ = [
    *_error_names,
    "AdaptationField", "BitrateReport", "MulticastEndpoint", "PacingSchedule", "PatSection",
    "Pcr", "PmtSection", "ProgramInfo", "ProgramSpec", "ReceiveReport", "SectionAssembler",
    "SendReport", "StreamEntry", "StreamStats", "TsPacket", "bitrate_from_pcr",
    "bitrate_from_storage", "build_pat", "build_pmt", "crc32_mpeg", "default_programs",
    "extract_program", "frame_datagrams", "gen_fixture", "list_programs", "make_packet",
    "make_schedule", "null_packet", "parse_packet", "parse_pat", "parse_pmt", "passthrough",
    "pid_set", "read_ts", "receive_stream", "resync", "scan_programs", "section_packets",
    "send_stream", "serialize_packet", "stats_report", "unframe", "update_stats",
    "validate_endpoint", "write_ts",
]
