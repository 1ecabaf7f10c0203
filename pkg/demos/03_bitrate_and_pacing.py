"""Storage-derived and PCR-derived bitrates, and the send schedule built from them."""

from tscast import bitrate_from_pcr, bitrate_from_storage, gen_fixture, make_schedule, resync

# Two gigabytes of video played over one hour.
rep = bitrate_from_storage(2 * 1024**3, 3600)
print(f"{rep.bytes_per_sec} B/s = {rep.kilobytes_per_sec} KB/s = "
      f"{rep.bits_per_sec} b/s = {rep.megabits_per_sec} Mb/s")

# The mux's own clock says how fast it must go out.
packets = resync(gen_fixture(programs=2, duration_s=3, rate_bps=4_000_000)).packets
rate = bitrate_from_pcr(packets)
print(f"PCR-derived rate on PID {rate.pid:#06x}: {rate.bits_per_sec} b/s")

# Constant-rate pacing: one 188-byte packet every millisecond at 1.504 Mb/s.
print("constant:", make_schedule(5, 1_504_000).offsets_us)

# PCR-locked pacing follows the timestamps inside the stream.
sched = make_schedule(len(packets), pcr_source=packets, mode="pcr")
print(f"PCR-locked: {len(sched)} offsets over {sched.duration_us / 1e6:.3f} s")
