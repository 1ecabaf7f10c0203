"""Byte-level model of the DVB-S outer channel decoder (FEC) and its channel."""

from .chain import ChainReport, DecodeReport, chain_roundtrip, fec_decode, fec_encode
from .channel import Burst, ByteErrors, ErrorLog, Positions, channel, parse_error_model
from .interleaver import Deinterleaver, Interleaver, deinterleave, interleave
from .rs import rs_decode, rs_encode, syndromes
from .scrambler import ScramblerState, derandomize, randomize

__all__ = [
    "Burst", "ByteErrors", "ChainReport", "DecodeReport", "Deinterleaver", "ErrorLog",
    "Interleaver", "Positions", "ScramblerState", "chain_roundtrip", "channel",
    "deinterleave", "derandomize", "fec_decode", "fec_encode", "interleave",
    "parse_error_model", "randomize", "rs_decode", "rs_encode", "syndromes",
]
