"""
Shortened Reed-Solomon RS(204, 188, t=8) over GF(256).

The mother code is RS(255, 239) with generator roots alpha^0 .. alpha^15;
shortening prepends 51 implicit zero bytes, which leaves a systematic encoder
unchanged. Codeword byte ``j`` is the coefficient of x^(203 - j): data first,
16 parity bytes last.

Decoding runs syndromes -> Berlekamp-Massey -> Chien search -> Forney.
"""

from __future__ import annotations

import numpy as np

from ..errors import DecodeFailure, WrongLength
from .gf256 import EXP, EXP_NP, LOG, LOG_NP, gf_div, gf_mul, poly_eval, poly_mul

N = 204
K = 188
NPAR = N - K
T = NPAR // 2


def _generator() -> list:
    g = [1]
    for i in range(NPAR):
        g = poly_mul(g, [EXP[i], 1])
    return g


GENERATOR = _generator()  # lowest degree first, monic, degree 16


def _parity_rows() -> np.ndarray:
    """Row j holds x^(203-j) mod g(x) as 16 parity bytes (highest degree first)."""
    rows = [None] * K
    rem = GENERATOR[:NPAR]  # x^16 mod g, lowest first
    for j in range(K - 1, -1, -1):
        rows[j] = rem[::-1]
        top = rem[-1]
        rem = [0] + rem[:-1]
        if top:
            rem = [r ^ gf_mul(top, gc) for r, gc in zip(rem, GENERATOR[:NPAR])]
    return np.array(rows, dtype=np.uint8)


_PARITY = _parity_rows()
_PARITY_LOG = LOG_NP[_PARITY]
_PARITY_ZERO = _PARITY == 0

_SYN_POW = (np.arange(NPAR)[:, None] * (N - 1 - np.arange(N))[None, :]) % 255


def _xor_reduce(terms: np.ndarray, axis: int) -> np.ndarray:
    return np.bitwise_xor.reduce(terms, axis=axis)


def rs_encode_many(data: np.ndarray) -> np.ndarray:
    """Encode an (n, 188) uint8 array into (n, 204) codewords."""
    data = np.asarray(data, dtype=np.uint8).reshape(-1, K)
    logs = LOG_NP[data][:, :, None] + _PARITY_LOG[None, :, :]
    terms = EXP_NP[logs % 255]
    terms[(data == 0)[:, :, None] | _PARITY_ZERO[None, :, :]] = 0
    parity = _xor_reduce(terms, axis=1)
    return np.concatenate([data, parity], axis=1)


def rs_encode(data: bytes) -> bytes:
    if len(data) != K:
        raise WrongLength(f"RS encoder takes {K} bytes, got {len(data)}")
    arr = np.frombuffer(bytes(data), dtype=np.uint8)
    return rs_encode_many(arr[None, :]).tobytes()


def syndromes_many(codewords: np.ndarray) -> np.ndarray:
    """(n, 204) codewords -> (n, 16) syndromes S_i = c(alpha^i)."""
    cw = np.asarray(codewords, dtype=np.uint8).reshape(-1, N)
    terms = EXP_NP[(LOG_NP[cw][:, None, :] + _SYN_POW[None, :, :]) % 255]
    terms[np.broadcast_to((cw == 0)[:, None, :], terms.shape)] = 0
    return _xor_reduce(terms, axis=2)


def syndromes(codeword: bytes) -> list:
    arr = np.frombuffer(bytes(codeword), dtype=np.uint8)
    return syndromes_many(arr[None, :])[0].tolist()


def _berlekamp_massey(synd: list) -> list:
    c = [1]
    b = [1]
    length = 0
    m = 1
    last_d = 1
    for n in range(len(synd)):
        d = synd[n]
        for i in range(1, length + 1):
            if i < len(c):
                d ^= gf_mul(c[i], synd[n - i])
        if d == 0:
            m += 1
            continue
        coef = gf_div(d, last_d)
        shifted = [0] * m + [gf_mul(coef, x) for x in b]
        new_c = [x ^ y for x, y in zip(c + [0] * (len(shifted) - len(c)),
                                       shifted + [0] * (len(c) - len(shifted)))]
        if 2 * length <= n:
            b, length, last_d, m = c, n + 1 - length, d, 1
        else:
            m += 1
        c = new_c
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _decode_one(cw: list, synd: list) -> int:
    """Correct ``cw`` in place; returns the number of corrected bytes."""
    locator = _berlekamp_massey(synd)
    degree = len(locator) - 1
    if degree > T:
        raise DecodeFailure(f"error locator of degree {degree} exceeds t={T}")
    powers = [p for p in range(N) if poly_eval(locator, EXP[(255 - p) % 255]) == 0]
    if len(powers) != degree:
        raise DecodeFailure(f"found {len(powers)} locator roots, expected {degree}")
    omega = poly_mul(synd, locator)[:NPAR]
    deriv = [locator[i] if i % 2 else 0 for i in range(1, len(locator))]
    for p in powers:
        x_inv = EXP[(255 - p) % 255]
        denom = poly_eval(deriv, x_inv)
        if denom == 0:
            raise DecodeFailure("repeated locator root")
        magnitude = gf_mul(EXP[p], gf_div(poly_eval(omega, x_inv), denom))
        cw[N - 1 - p] ^= magnitude
    return degree


def rs_decode(codeword: bytes) -> tuple[bytes, int]:
    """Return (188 data bytes, corrected byte count) or raise DecodeFailure."""
    if len(codeword) != N:
        raise WrongLength(f"RS decoder takes {N} bytes, got {len(codeword)}")
    synd = syndromes(codeword)
    if not any(synd):
        return bytes(codeword[:K]), 0
    cw = list(codeword)
    corrected = _decode_one(cw, synd)
    if any(syndromes(bytes(cw))):
        raise DecodeFailure("residual syndrome after correction")
    return bytes(cw[:K]), corrected


def rs_decode_many(codewords: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decode (n, 204) codewords.

    Returns (data (n, 188), corrected counts (n,), failed mask (n,)). Rows
    that fail keep their received data bytes.
    """
    cw = np.array(codewords, dtype=np.uint8).reshape(-1, N)
    synd = syndromes_many(cw)
    dirty = np.flatnonzero(synd.any(axis=1))
    corrected = np.zeros(len(cw), dtype=np.int64)
    failed = np.zeros(len(cw), dtype=bool)
    for row in dirty:
        word = cw[row].tolist()
        try:
            count = _decode_one(word, synd[row].tolist())
            if any(syndromes(bytes(word))):
                raise DecodeFailure("residual syndrome after correction")
        except DecodeFailure:
            failed[row] = True
            continue
        cw[row] = word
        corrected[row] = count
    return cw[:, :K].copy(), corrected, failed
