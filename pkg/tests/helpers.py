"""Random generators shared by the test modules."""

import random

from tscast.packet import Pcr, make_packet


def random_valid_block(rng: random.Random) -> bytes:
    """A syntactically valid 188-byte block with random header, adaptation field and payload."""
    afc = rng.choice([1, 2, 3])
    head = bytes([
        0x47,
        rng.getrandbits(3) << 5 | rng.getrandbits(5),
        rng.getrandbits(8),
        rng.getrandbits(2) << 6 | afc << 4 | rng.getrandbits(4),
    ])
    if afc == 1:
        return head + rng.randbytes(184)
    af_len = 183 if afc == 2 else rng.randint(0, 182)
    if af_len == 0:
        af = b"\x00"
    else:
        flags = rng.getrandbits(8) & ~0x10 & 0xFF
        body = b""
        if rng.random() < 0.5 and af_len >= 7:
            flags |= 0x10
            base = rng.getrandbits(33)
            ext = rng.randrange(300)
            body = bytes([base >> 25 & 0xFF, base >> 17 & 0xFF, base >> 9 & 0xFF, base >> 1 & 0xFF,
                          (base & 1) << 7 | 0x7E | ext >> 8, ext & 0xFF])
        rest = af_len - 1 - len(body)
        body += rng.randbytes(rest)
        af = bytes([af_len, flags]) + body
    return head + af + rng.randbytes(184 - len(af))


def random_ts_packet(rng: random.Random):
    """An invariant-satisfying packet built through make_packet."""
    pcr = Pcr(rng.getrandbits(33), rng.randrange(300)) if rng.random() < 0.3 else None
    disc, rai = rng.random() < 0.1, rng.random() < 0.1
    room = 184 - (8 if pcr is not None else 2 if disc or rai else 0)
    return make_packet(
        rng.randrange(0x2000), rng.randbytes(rng.randint(0, room)), rng.randrange(16),
        payload_unit_start=rng.random() < 0.5, pcr=pcr, discontinuity=disc,
        random_access=rai, scrambling_control=rng.randrange(4),
    )
