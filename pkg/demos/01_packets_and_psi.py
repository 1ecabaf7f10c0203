"""Walk through one transport packet and the program tables of a small multiplex."""

from tscast import gen_fixture, parse_packet, resync
from tscast.psi import assemble_sections, crc32_mpeg, parse_pat, parse_pmt

# A null packet is the simplest transport packet: PID 0x1FFF, payload of 0xFF.
raw = bytes([0x47, 0x1F, 0xFF, 0x10]) + b"\xff" * 184
pkt = parse_packet(raw)
print("null packet:", hex(pkt.pid), "cc", pkt.continuity_counter, "payload", len(pkt.payload))
assert pkt.to_bytes() == raw

# Two seconds of a two-program mux at 4 Mb/s, with leading junk to show resync.
stream = b"\x00junk" + gen_fixture(programs=2, duration_s=2, rate_bps=4_000_000)
found = resync(stream)
print(f"{len(found.packets)} packets, {found.skipped} bytes skipped")

# The PAT lives on PID 0 and names each program's PMT PID.
pat = parse_pat(assemble_sections(found.packets, 0)[0])
print("PAT programs:", [(n, hex(pid)) for n, pid in pat.programs])

for number, pmt_pid in pat.programs:
    pmt = parse_pmt(assemble_sections(found.packets, pmt_pid)[0])
    streams = [(hex(s.stream_type), hex(s.elementary_pid)) for s in pmt.streams]
    print(f"program {number}: PCR on {pmt.pcr_pid:#06x}, streams {streams}")

# Every section ends with a CRC-32/MPEG-2 that leaves a zero remainder.
print("CRC check value:", hex(crc32_mpeg(b"123456789")))
