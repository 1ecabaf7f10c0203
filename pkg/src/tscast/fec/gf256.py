"""Arithmetic in GF(2^8) with field polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D)."""

import numpy as np

PRIMITIVE_POLY = 0x11D
ALPHA = 0x02


def _build_tables():
    exp = [0] * 512
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIMITIVE_POLY
    for i in range(255, 512):
        exp[i] = exp[i - 255]
    return exp, log


EXP, LOG = _build_tables()
# numpy copies for vectorised kernels; LOG_NP[0] is never meaningful.
EXP_NP = np.array(EXP, dtype=np.uint8)
LOG_NP = np.array(LOG, dtype=np.int32)


def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return EXP[(LOG[a] - LOG[b]) % 255]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("zero has no inverse in GF(256)")
    return EXP[255 - LOG[a]]


def gf_pow(a: int, n: int) -> int:
    if a == 0:
        return 0 if n else 1
    return EXP[(LOG[a] * n) % 255]


# Polynomials below are coefficient lists, lowest degree first.

def poly_mul(p: list, q: list) -> list:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            if b:
                out[i + j] ^= EXP[LOG[a] + LOG[b]]
    return out


def poly_eval(p: list, x: int) -> int:
    """Horner evaluation of a lowest-degree-first polynomial."""
    acc = 0
    for c in reversed(p):
        acc = gf_mul(acc, x) ^ c
    return acc
