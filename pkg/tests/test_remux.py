import logging

import pytest

from tscast.errors import NoPatFound, UnknownProgram
from tscast.fixtures import default_programs, gen_fixture
from tscast.packet import null_packet, parse_packet, peek_pid, resync
from tscast.pacing import StreamStats
from tscast.psi import assemble_sections, crc_ok, parse_pat
from tscast.remux import extract_program, list_programs, passthrough, pid_set, scan_programs


def payloads_by_pid(packets):
    out = {}
    for raw in packets:
        pkt = parse_packet(raw)
        out.setdefault(pkt.pid, bytearray()).extend(pkt.payload)
    return out


def test_list_programs_fixture(two_program_packets):
    progs = list_programs(two_program_packets)
    assert [p.program_number for p in progs] == [1, 2]
    p1, p2 = progs
    assert (p1.pmt_pid, p1.pcr_pid, p1.elementary_pids) == (0x0100, 0x0101, [0x0101])
    assert (p2.pmt_pid, p2.pcr_pid, p2.elementary_pids) == (0x0200, 0x0201, [0x0201, 0x0202])


def test_only_null_packets():
    with pytest.raises(NoPatFound):
        list_programs([null_packet().to_bytes()] * 50)


def test_missing_pmt_reported_separately(two_program_packets, caplog):
    stripped = [p for p in two_program_packets if peek_pid(p) != 0x0200]
    lineup = scan_programs(stripped)
    assert [p.program_number for p in lineup.programs] == [1]
    assert lineup.incomplete == [(2, 0x0200)]
    with caplog.at_level(logging.WARNING):
        assert len(list_programs(stripped)) == 1
    assert "0x0200" in caplog.text


def test_extract_program_one(two_program_packets):
    out = extract_program(two_program_packets, 1)
    assert {peek_pid(p) for p in out} <= {0x0000, 0x0100, 0x0101}
    progs = list_programs(out)
    assert len(progs) == 1 and progs[0].program_number == 1


def test_extract_regenerates_pat(two_program_packets):
    out = extract_program(two_program_packets, 2)
    sections = assemble_sections(out, 0)
    assert sections and all(crc_ok(s) for s in sections)
    pat = parse_pat(sections[0])
    assert pat.programs == [(2, 0x0200)]
    assert pat.version == 1
    n_in = sum(1 for p in two_program_packets if peek_pid(p) == 0 and p[1] & 0x40)
    n_out = sum(1 for p in out if peek_pid(p) == 0)
    assert n_in == n_out


def test_extract_continuity_gap_free(two_program_packets):
    out = extract_program(two_program_packets, 2)
    stats = StreamStats()
    for p in out:
        stats.update(p, 0.0)
    assert stats.total_cc_errors == 0


def test_extract_preserves_elementary_bytes(two_program_packets):
    before = payloads_by_pid(two_program_packets)
    after = payloads_by_pid(extract_program(two_program_packets, 2))
    for pid in (0x0200, 0x0201, 0x0202):
        assert after[pid] == before[pid]


def test_extract_single_program_mux_identical_es():
    packets = resync(gen_fixture(1, 1, 2_000_000, seed=3)).packets
    out = extract_program(packets, 1)
    es_in = [p for p in packets if peek_pid(p) not in (0, 0x1FFF)]
    es_out = [p for p in out if peek_pid(p) != 0]
    assert es_in == es_out


def test_extract_unknown_program(two_program_packets):
    with pytest.raises(UnknownProgram):
        extract_program(two_program_packets, 7)


def test_extract_idempotent(two_program_packets):
    once = extract_program(two_program_packets, 1)
    twice = extract_program(once, 1)
    strip = lambda pkts: [p for p in pkts if peek_pid(p) != 0]
    assert strip(once) == strip(twice)
    assert len(once) == len(twice)
    assert parse_pat(assemble_sections(twice, 0)[0]).version == 2


def test_extract_drops_nulls(two_program_packets):
    assert any(peek_pid(p) == 0x1FFF for p in two_program_packets)
    assert all(peek_pid(p) != 0x1FFF for p in extract_program(two_program_packets, 1))


def test_pid_set_contents():
    prog = list_programs(gen_fixture(3, 0.5, 4_000_000))[2]
    assert pid_set(prog) == {0x0000, 0x0300, 0x0301, 0x0302}


def test_passthrough(two_program_bytes, two_program_packets):
    assert b"".join(passthrough(two_program_bytes)) == two_program_bytes
    assert passthrough(b"") == []
    assert passthrough(b"\x12\x34\x47junk" + two_program_bytes) == two_program_packets


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_extract_every_program(n):
    packets = resync(gen_fixture(n, 0.6, 4_000_000, seed=n)).packets
    before = payloads_by_pid(packets)
    for spec in default_programs(n):
        out = extract_program(packets, spec.program_number)
        closure = {0, spec.pmt_pid, *(pid for _, pid, _ in spec.streams)}
        assert {peek_pid(p) for p in out} <= closure
        progs = list_programs(out)
        assert [p.program_number for p in progs] == [spec.program_number]
        after = payloads_by_pid(out)
        for _, pid, _ in spec.streams:
            assert after[pid] == before[pid]
