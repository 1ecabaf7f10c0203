"""The satellite card's outer FEC stage, with bursts of channel errors."""

from tscast import gen_fixture, resync
from tscast.fec import Burst, ByteErrors, chain_roundtrip, rs_decode, rs_encode

# One codeword: 188 data bytes plus 16 parity bytes, good for 8 byte errors.
cw = bytearray(rs_encode(bytes(range(188))))
for pos in (0, 20, 40, 60, 80, 100, 120, 140):
    cw[pos] ^= 0x5A
data, fixed = rs_decode(bytes(cw))
print(f"corrected {fixed} bytes, data intact: {data == bytes(range(188))}")

packets = resync(gen_fixture(programs=2, duration_s=1)).packets

# 12-way interleaving spreads a 96-byte burst to at most 8 bytes per codeword.
for model in (Burst(96, 4896), Burst(120, 4896), ByteErrors(0.002, seed=1)):
    rep = chain_roundtrip(packets, model)
    print(f"{model}: recovered {rep.recovery_ratio:.2%}, "
          f"{rep.corrected_bytes} bytes corrected, {rep.decode_failures} codewords lost")
