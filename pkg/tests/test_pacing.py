import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tscast.errors import InsufficientPcrs, NonMonotonePcr, ZeroDuration, ZeroRate
from tscast.packet import PCR_MODULUS, Pcr, make_packet, null_packet, peek_pid
from tscast.pacing import (
    StreamStats,
    bitrate_from_pcr,
    bitrate_from_storage,
    format_record,
    make_schedule,
    stats_report,
    unwrap_pcr,
    update_stats,
)


def pcr_stream(n, pcr_at, pid=0x101):
    """``n`` packets on ``pid``; ``pcr_at`` maps packet index -> PCR ticks."""
    out = []
    for i in range(n):
        ticks = pcr_at.get(i)
        pcr = Pcr.from_ticks(ticks % PCR_MODULUS) if ticks is not None else None
        out.append(make_packet(pid, b"", i & 0xF, pcr=pcr).to_bytes())
    return out


def test_storage_two_gib_one_hour():
    rep = bitrate_from_storage(2 * 1024**3, 3600)
    assert rep.bytes_per_sec == 596_523
    assert rep.kilobytes_per_sec == 582
    assert rep.bits_per_sec == 4_772_184
    assert rep.megabits_per_sec == 4
    assert rep.exact_bytes_per_sec == Fraction(2 * 1024**3, 3600)


def test_storage_trivial_cases():
    zero = bitrate_from_storage(0, 3600)
    assert (zero.bytes_per_sec, zero.kilobytes_per_sec, zero.bits_per_sec, zero.megabits_per_sec) == (0, 0, 0, 0)
    one = bitrate_from_storage(1024, 1)
    assert (one.bytes_per_sec, one.kilobytes_per_sec, one.bits_per_sec, one.megabits_per_sec) == (1024, 1, 8192, 0)


@pytest.mark.parametrize("d", [0, -1])
def test_storage_zero_duration(d):
    with pytest.raises(ZeroDuration):
        bitrate_from_storage(100, d)


def test_pcr_bitrate_one_second():
    pk = pcr_stream(2001, {0: 1000, 2000: 1000 + 27_000_000})
    rate = bitrate_from_pcr(pk)
    assert rate.bits_per_sec == 3_008_000 and rate.exact == 3_008_000 and rate.pid == 0x101


def test_pcr_bitrate_half_second():
    pk = pcr_stream(1001, {0: 5, 1000: 5 + 13_500_000})
    assert bitrate_from_pcr(pk).exact == 3_008_000


def test_pcr_bitrate_needs_two():
    with pytest.raises(InsufficientPcrs):
        bitrate_from_pcr(pcr_stream(10, {3: 0}))
    with pytest.raises(InsufficientPcrs):
        bitrate_from_pcr([])


def test_pcr_bitrate_across_wrap():
    start = PCR_MODULUS - 6_750_000
    pk = pcr_stream(1001, {0: start, 500: start + 6_750_000, 1000: start + 13_500_000})
    assert bitrate_from_pcr(pk).exact == 3_008_000


def test_pcr_backwards_rejected():
    with pytest.raises(NonMonotonePcr):
        bitrate_from_pcr(pcr_stream(20, {0: 10_000_000, 10: 9_000_000}))


def test_pcr_bitrate_ignores_padding_outside_window():
    core = pcr_stream(1001, {0: 0, 1000: 13_500_000})
    pad = [null_packet().to_bytes()] * 37
    assert bitrate_from_pcr(pad + core + pad).exact == 3_008_000


def test_unwrap():
    assert unwrap_pcr(100, 100, 200) == 200
    assert unwrap_pcr(PCR_MODULUS - 10, PCR_MODULUS - 10, 5) == PCR_MODULUS + 5


def test_constant_schedule_example():
    s = make_schedule(10, 1_504_000)
    assert list(s.offsets_us) == [i * 1000 for i in range(10)]
    assert s.mode == "constant" and s.duration_us == 10_000


def test_single_packet_schedule():
    assert list(make_schedule(1, 3_000_000).offsets_us) == [0]


@pytest.mark.parametrize("rate", [0, -5, None])
def test_zero_rate(rate):
    with pytest.raises(ZeroRate):
        make_schedule(5, rate)


@settings(max_examples=100)
@given(n=st.integers(1, 3000), rate=st.integers(10_000, 100_000_000))
def test_constant_schedule_affine(n, rate):
    s = make_schedule(n, rate)
    step = 1504 * 1_000_000 / rate
    assert all(abs(off - i * step) < 1 for i, off in enumerate(s.offsets_us))
    assert all(a <= b for a, b in zip(s.offsets_us, s.offsets_us[1:]))
    assert s.offsets_us[-1] <= s.duration_us


def test_pcr_schedule_interpolates():
    pk = pcr_stream(21, {5: 0, 15: 27_000})  # 10 packets per ms
    s = make_schedule(21, pcr_source=pk, mode="pcr")
    assert list(s.offsets_us) == [i * 100 for i in range(21)]
    assert s.duration_us == 2100


def test_pcr_schedule_piecewise():
    pk = pcr_stream(11, {0: 0, 5: 27_000, 10: 27_000 + 54_000})
    s = make_schedule(11, pcr_source=pk, mode="pcr")
    assert list(s.offsets_us[:6]) == [0, 200, 400, 600, 800, 1000]
    assert list(s.offsets_us[5:]) == [1000, 1400, 1800, 2200, 2600, 3000]


def test_pcr_schedule_needs_anchors():
    with pytest.raises(InsufficientPcrs):
        make_schedule(5, pcr_source=pcr_stream(5, {0: 0}), mode="pcr")


def test_schedule_repeat():
    s = make_schedule(3, 1_504_000).repeat(2)
    assert list(s.offsets_us) == [0, 1000, 2000, 3000, 4000, 5000]


def feed(stats, packets, dt=0.001):
    for i, p in enumerate(packets):
        update_stats(stats, p, i * dt)
    return stats


def cc_run(pid, counters):
    return [make_packet(pid, b"\x00" * 184, c).to_bytes() for c in counters]


def test_in_order_fixture_clean(two_program_packets):
    stats = feed(StreamStats(), two_program_packets)
    assert stats.total_cc_errors == 0
    assert stats.total_packets == sum(stats.pid_counts.values()) == len(two_program_packets)


def test_deleted_packet_counts_once(two_program_packets):
    victim = next(i for i, p in enumerate(two_program_packets) if peek_pid(p) == 0x0202 and i > 100)
    mutated = two_program_packets[:victim] + two_program_packets[victim + 1:]
    stats = feed(StreamStats(), mutated)
    assert stats.total_cc_errors == 1 and stats.cc_errors[0x0202] == 1


def test_duplicate_tolerated_once():
    assert feed(StreamStats(), cc_run(0x100, [0, 1, 1, 2, 3])).total_cc_errors == 0
    assert feed(StreamStats(), cc_run(0x100, [0, 1, 1, 1, 2])).total_cc_errors == 1


def test_wraparound_and_gap():
    assert feed(StreamStats(), cc_run(0x100, [14, 15, 0, 1])).total_cc_errors == 0
    assert feed(StreamStats(), cc_run(0x100, [14, 15, 1])).total_cc_errors == 1


def test_discontinuity_suppresses():
    pk = cc_run(0x100, [0, 1])
    pk.append(make_packet(0x100, b"\x00" * 100, 9, discontinuity=True).to_bytes())
    pk += cc_run(0x100, [10])
    assert feed(StreamStats(), pk).total_cc_errors == 0


def test_discontinuity_on_adaptation_only_packet():
    pk = cc_run(0x100, [0, 1])
    pk.append(make_packet(0x100, b"", 1, discontinuity=True).to_bytes())
    pk += cc_run(0x100, [7, 8])
    assert feed(StreamStats(), pk).total_cc_errors == 0


def test_adaptation_only_not_checked():
    from tscast.packet import AdaptationField, TsPacket
    pk = cc_run(0x100, [0, 1, 2])
    af_only = TsPacket(0x100, b"", 5, AdaptationField(stuffing_length=182)).to_bytes()
    pk.append(af_only)
    pk += cc_run(0x100, [3])
    assert feed(StreamStats(), pk).total_cc_errors == 0


def test_null_pid_not_checked():
    pk = [null_packet(c).to_bytes() for c in (0, 0, 0, 5)]
    assert feed(StreamStats(), pk).total_cc_errors == 0


def test_error_and_scrambling_counters():
    from tscast.packet import TsPacket
    pk = [TsPacket(0x100, b"\x00" * 184, 0, transport_error=True).to_bytes(),
          TsPacket(0x100, b"\x00" * 184, 1, scrambling_control=2).to_bytes()]
    st_ = feed(StreamStats(), pk)
    assert st_.transport_errors == 1 and st_.scrambled == 1


def test_pcr_jitter():
    # PCR every 10 packets, 1 ms apart in PCR time.
    pk = pcr_stream(31, {0: 0, 10: 27_000, 20: 54_000, 30: 81_000})
    stats = StreamStats()
    arrivals = {0: 0.0, 10: 0.001, 20: 0.0025, 30: 0.003}
    for i, p in enumerate(pk):
        stats.update(p, arrivals.get(i, i / 10_000))
    assert stats.pcr_jitter_us == pytest.approx(500, abs=1e-6)


def test_window_and_average_bitrate():
    stats = StreamStats(window_s=1.0)
    pk = cc_run(0x100, [i & 0xF for i in range(2001)])
    for i, p in enumerate(pk):
        stats.update(p, i * 0.001)  # 188 B per ms
    # all bytes over the first-to-last arrival span
    assert stats.average_bitrate_bps == pytest.approx(2001 * 188 * 8 / 2.0)
    assert stats.window_bitrate_bps == pytest.approx(188 * 8 * 1001, rel=1e-9)


def test_report_record(two_program_packets):
    stats = feed(StreamStats(), two_program_packets[:500])
    rec = stats_report(stats, timestamp_ms=1234)
    for key in ("timestamp_ms", "total_packets", "total_bytes", "bitrate_bps", "cc_errors",
                "pcr_jitter_us", "per_pid"):
        assert key in rec
    assert rec["timestamp_ms"] == 1234 and rec["total_packets"] == 500
    assert sum(v["packets"] for v in rec["per_pid"].values()) == 500
    line = format_record(rec)
    assert "\n" not in line and json.loads(line) == rec


def test_stats_pickle_roundtrip():
    import pickle
    stats = feed(StreamStats(), cc_run(0x100, [0, 2]))
    clone = pickle.loads(pickle.dumps(stats))
    assert clone.total_cc_errors == 1
    clone.update(cc_run(0x100, [3])[0], 1.0)
    assert clone.total_packets == 3
