"""Pull one program out of a multiplex and confirm it stands on its own."""

from tscast import extract_program, gen_fixture, list_programs, resync
from tscast.packet import peek_pid

packets = resync(gen_fixture(programs=3, duration_s=2)).packets
for info in list_programs(packets):
    print(f"program {info.program_number}: PMT {info.pmt_pid:#06x}, PIDs {[hex(p) for p in info.elementary_pids]}")

single = extract_program(packets, 2)
print(f"extracted {len(single)} of {len(packets)} packets")
print("PIDs in the output:", sorted(hex(p) for p in {peek_pid(p) for p in single}))
print("programs in the output:", [p.program_number for p in list_programs(single)])
