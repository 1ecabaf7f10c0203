import random

import numpy as np
import pytest

from tscast.errors import BadSync, DecodeFailure, WrongLength
from tscast.fec import (
    Burst,
    ByteErrors,
    Deinterleaver,
    Interleaver,
    Positions,
    ScramblerState,
    chain_roundtrip,
    channel,
    deinterleave,
    derandomize,
    fec_decode,
    fec_encode,
    interleave,
    parse_error_model,
    randomize,
    rs_decode,
    rs_encode,
    syndromes,
)
from tscast.fec.gf256 import EXP, LOG, gf_div, gf_inv, gf_mul, gf_pow
from tscast.fec.interleaver import TOTAL_DELAY
from tscast.fec.rs import rs_decode_many, rs_encode_many
from tscast.fec.scrambler import GROUP_MASK, prbs_bytes, prbs_state_after
from tscast.packet import make_packet

# ------------------------------------------------------------------ oracles


def mul_oracle(a, b):
    """Shift-and-add multiply modulo x^8+x^4+x^3+x^2+1."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= 0x11D
    return out


def generator_oracle():
    """Coefficients of prod_{i<16} (x - a^i), highest degree first."""
    g = [1]
    root = 1
    for _ in range(16):
        nxt = g + [0]
        for k in range(len(g)):
            nxt[k + 1] ^= mul_oracle(g[k], root)
        g = nxt
        root = mul_oracle(root, 2)
    return g


GEN = generator_oracle()


def encode_oracle(data):
    """Systematic encoder as a 16-stage LFSR dividing d(x) * x^16 by g(x)."""
    reg = [0] * 16
    for byte in data:
        fb = byte ^ reg[0]
        reg = reg[1:] + [0]
        if fb:
            for k in range(16):
                reg[k] ^= mul_oracle(GEN[k + 1], fb)
    return bytes(data) + bytes(reg)


def prbs_oracle(nbytes):
    """1 + x^14 + x^15 register, stages 1..15 loaded with 100101010000000."""
    reg = [1, 0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0]
    out = []
    for _ in range(nbytes):
        byte = 0
        for _ in range(8):
            bit = reg[13] ^ reg[14]
            reg = [bit] + reg[:14]
            byte = byte << 1 | bit
        out.append(byte)
    return bytes(out)


def burst_errors_per_codeword(start, length):
    """Errors each codeword sees after deinterleaving a channel burst."""
    counts = {}
    for p in range(start, start + length):
        n = p - 204 * (p % 12)  # interleaver input index that lands on slot p
        if n >= 0:
            counts[n // 204] = counts.get(n // 204, 0) + 1
    return max(counts.values(), default=0)


def random_packets(n, seed=0):
    rng = random.Random(seed)
    return [make_packet(rng.randrange(0x1FFF), rng.randbytes(184), i & 0xF).to_bytes()
            for i in range(n)]


# ------------------------------------------------------------------ GF(256)


def test_gf_mul_exhaustive():
    for a in range(256):
        for b in range(256):
            assert gf_mul(a, b) == mul_oracle(a, b)


def test_gf_tables():
    assert sorted(EXP[:255]) == list(range(1, 256))
    assert all(EXP[LOG[a]] == a for a in range(1, 256))


def test_gf_inverse_and_division():
    for a in range(1, 256):
        assert gf_mul(a, gf_inv(a)) == 1
        assert gf_div(gf_mul(a, 37), 37) == a
    with pytest.raises(ZeroDivisionError):
        gf_inv(0)


def test_gf_axioms_random_triples():
    rng = random.Random(0)
    for _ in range(3000):
        a, b, c = (rng.randrange(256) for _ in range(3))
        assert gf_mul(a, gf_mul(b, c)) == gf_mul(gf_mul(a, b), c)
        assert gf_mul(a, b) == gf_mul(b, a)
        assert gf_mul(a, b ^ c) == gf_mul(a, b) ^ gf_mul(a, c)


def test_gf_pow():
    assert gf_pow(2, 255) == 1 and gf_pow(2, 8) == 0x1D


# ------------------------------------------------------------------ RS(204,188)


def test_generator_oracle_roots():
    for i in range(16):
        x = gf_pow(2, i)
        acc = 0
        for coef in GEN:
            acc = mul_oracle(acc, x) ^ coef
        assert acc == 0


def test_encoder_matches_oracle():
    rng = random.Random(11)
    for _ in range(40):
        data = rng.randbytes(188)
        assert rs_encode(data) == encode_oracle(data)


def test_zero_data_zero_codeword():
    assert rs_encode(bytes(188)) == bytes(204)


def test_syndromes_zero_for_codewords():
    rng = random.Random(12)
    for _ in range(50):
        assert not any(syndromes(rs_encode(rng.randbytes(188))))


def test_encode_decode_wrong_length():
    with pytest.raises(WrongLength):
        rs_encode(bytes(187))
    with pytest.raises(WrongLength):
        rs_decode(bytes(203))


def corrupt(cw, count, rng):
    buf = bytearray(cw)
    for p in rng.sample(range(204), count):
        buf[p] ^= rng.randrange(1, 256)
    return bytes(buf)


@pytest.mark.parametrize("e", range(9))
def test_decode_within_radius(e):
    rng = random.Random(100 + e)
    for _ in range(30):
        data = rng.randbytes(188)
        got, fixed = rs_decode(corrupt(rs_encode(data), e, rng))
        assert got == data and fixed == e


@pytest.mark.parametrize("e", [9, 12, 16])
def test_decode_beyond_radius_never_claims_original(e):
    rng = random.Random(200 + e)
    for _ in range(30):
        data = rng.randbytes(188)
        try:
            got, fixed = rs_decode(corrupt(rs_encode(data), e, rng))
        except DecodeFailure:
            continue
        assert got != data


def test_batch_decoder_agrees():
    rng = random.Random(5)
    data = np.frombuffer(rng.randbytes(188 * 40), dtype=np.uint8).reshape(40, 188)
    cw = rs_encode_many(data).copy()
    for i in range(40):
        for p in rng.sample(range(204), i % 12):
            cw[i, p] ^= rng.randrange(1, 256)
    out, fixed, failed = rs_decode_many(cw)
    for i in range(40):
        if i % 12 <= 8:
            assert not failed[i] and fixed[i] == i % 12
            assert bytes(out[i]) == bytes(data[i])
        else:
            assert failed[i]


# ------------------------------------------------------------------ energy dispersal


def test_prbs_against_oracle():
    assert prbs_bytes(4) == bytes([0x03, 0xF6, 0x08, 0x34])
    assert prbs_bytes(1503) == prbs_oracle(1503)


def test_group_mask_layout():
    stream = prbs_oracle(1503)
    assert GROUP_MASK[0] == 0xFF
    for j in range(1, 1504):
        expect = 0 if j % 188 == 0 else stream[j - 1]
        assert GROUP_MASK[j] == expect


def test_randomize_first_sync_and_payload():
    pk = random_packets(8)
    out = randomize(pk)
    assert out[0] == 0xB8
    assert all(out[188 * k] == 0x47 for k in range(1, 8))
    assert out[1] == pk[0][1] ^ 0x03


def test_randomize_roundtrip_and_period():
    data = b"".join(random_packets(24, 3))
    scr = randomize(data)
    assert derandomize(scr) == data
    assert scr[0] == scr[1504] == scr[3008] == 0xB8
    assert prbs_state_after(1503) != 0


def test_scrambler_state_period():
    st = ScramblerState()
    first = st.register
    st.apply(bytes(188 * 3))
    assert st.packet_index == 3 and st.register != first
    st.apply(bytes(188 * 5 + 1504 * 2))
    assert st.packet_index == 0 and st.register == first


def test_register_matches_oracle_mid_group():
    # stage 1 holds the newest output bit and is the register's MSB
    st = ScramblerState(3)
    bits = "".join(f"{b:08b}" for b in prbs_oracle(3 * 188 - 1))[-15:]
    assert st.register == int(bits[::-1], 2)


def test_derandomize_bad_sync():
    scr = bytearray(randomize(random_packets(8)))
    scr[188 * 3] = 0x00
    with pytest.raises(BadSync):
        derandomize(bytes(scr))


def test_randomize_rejects_bad_input():
    with pytest.raises(BadSync):
        randomize(b"\x00" * 188)


# ------------------------------------------------------------------ interleaver


def test_branch_latency():
    rng = random.Random(9)
    src = rng.randbytes(12 * 204 * 3)
    out = interleave(src)
    assert len(out) == len(src)
    for n in range(len(src)):
        j = n % 12
        if n + 204 * j < len(out):
            assert out[n + 204 * j] == src[n]


def test_branch_zero_passthrough():
    src = bytes(range(256)) * 10
    out = interleave(src)
    assert all(out[n] == src[n] for n in range(0, len(src), 12))


def test_interleave_roundtrip_ten_frames():
    rng = random.Random(4)
    src = rng.randbytes(204 * 10)
    out = deinterleave(interleave(src + bytes(TOTAL_DELAY)))
    assert out[:TOTAL_DELAY] == bytes(TOTAL_DELAY)
    assert out[TOTAL_DELAY:] == src


def test_interleaver_streaming_state():
    rng = random.Random(8)
    src = rng.randbytes(5000)
    il = Interleaver()
    pieces = [il.process(src[a:b]) for a, b in [(0, 1), (1, 13), (13, 2000), (2000, 5000)]]
    assert b"".join(pieces) == interleave(src)
    assert interleave(b"") == b""
    dl = Deinterleaver()
    assert dl.process(b"") == b""


# ------------------------------------------------------------------ channel


def test_channel_identity():
    data = bytes(range(256)) * 4
    out, log = channel(data, ByteErrors(0.0, seed=1))
    assert out == data and len(log) == 0


def test_channel_positions():
    data = bytes(100)
    out, log = channel(data, Positions((3, 7)))
    assert [i for i in range(100) if out[i] != data[i]] == [3, 7]
    assert log.positions == [3, 7]


def test_channel_burst_period():
    data = bytes(204 * 10)
    _, log = channel(data, Burst(20, 5000))
    assert log.bursts == [(0, 20)]
    _, log = channel(bytes(20000), Burst(20, 5000))
    assert log.bursts == [(0, 20), (5000, 20), (10000, 20), (15000, 20)]
    assert len(log) == 80


def test_channel_seeded():
    data = bytes(5000)
    a = channel(data, ByteErrors(0.01, seed=3))
    b = channel(data, ByteErrors(0.01, seed=3))
    assert a == b


def test_parse_error_model():
    assert parse_error_model("none") == Positions(())
    assert parse_error_model("rate:0.001", 2) == ByteErrors(0.001, 2)
    assert parse_error_model("burst:96:4896") == Burst(96, 4896)
    assert parse_error_model("burst:8:100:5") == Burst(8, 100, 5)
    assert parse_error_model("pos:1,2,3") == Positions((1, 2, 3))
    with pytest.raises(ValueError):
        parse_error_model("gauss:1")


# ------------------------------------------------------------------ chain


def test_burst_geometry_oracle():
    # 96 = 8 * 12 is the longest burst that can never put 9 errors in a codeword.
    period = 12 * 204
    assert max(burst_errors_per_codeword(s, 96) for s in range(period, 2 * period)) == 8
    assert max(burst_errors_per_codeword(s, 97) for s in range(period, 2 * period)) == 9


def test_chain_error_free():
    rep = chain_roundtrip(random_packets(40), Positions(()))
    assert rep.recovered == rep.packets == 40 and rep.corrected_bytes == 0


def test_chain_periodic_96_byte_bursts():
    rep = chain_roundtrip(random_packets(120, 1), Burst(96, 4896, 3000))
    assert rep.recovery_ratio == 1.0 and rep.corrected_bytes == rep.channel_errors > 0


def test_chain_long_burst_fails_somewhere():
    rep = chain_roundtrip(random_packets(60, 2), Burst(300, 100_000, 5000))
    assert rep.failed > 0 and rep.decode_failures > 0


def test_fec_encode_layout():
    pk = random_packets(16)
    plain = fec_encode(pk, interleave=False)
    assert len(plain) == 16 * 204
    assert plain[0] == 0xB8 and plain[204] == 0x47
    framed = fec_encode(pk)
    assert len(framed) == 16 * 204 + TOTAL_DELAY
    out, rep = fec_decode(framed)
    assert out == b"".join(pk) and rep.codewords == 16 and rep.failed_codewords == 0
    out, _ = fec_decode(plain, interleave=False)
    assert out == b"".join(pk)


def test_fec_decode_truncated():
    framed = fec_encode(random_packets(16))
    with pytest.raises(WrongLength):
        fec_decode(framed[:-5])
    with pytest.raises(WrongLength):
        fec_decode(framed[: 204 * 5])
