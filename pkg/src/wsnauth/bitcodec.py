"""Bit-exact primitives: the 160-bit hash, canonical encodings, XOR.

Every protocol formula is built from :func:`h` (hash of a length-prefixed
concatenation), :func:`xor`, :func:`encode_id` and :func:`encode_ts`.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Iterable, Union

from .errors import FieldTooLong, IdNotCanonical, IdTooLong, LengthMismatch

DIGEST_LEN = 20
ID_LEN = 20
TS_LEN = 8
MAX_FIELD = 0xFFFF
MAX_TS = 2**64 - 1

Digest = bytes
Timestamp = int

# A hash operand: raw octets or a timestamp (encoded via encode_ts).
Part = Union[bytes, int]


def hash_bytes(data: bytes) -> Digest:
    return hashlib.sha1(data).digest()


def concat(fields: Iterable[bytes]) -> bytes:
    """Injective encoding: 2-octet big-endian length, then the octets, per field."""
    out = bytearray()
    for f in fields:
        if len(f) > MAX_FIELD:
            raise FieldTooLong(f"field of {len(f)} octets exceeds {MAX_FIELD}")
        out += struct.pack(">H", len(f))
        out += f
    return bytes(out)


def xor(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise LengthMismatch(f"xor of {len(a)} and {len(b)} octets")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def encode_ts(ts: Timestamp) -> bytes:
    return struct.pack(">Q", ts)


def decode_ts(raw: bytes) -> Timestamp:
    if len(raw) != TS_LEN:
        raise LengthMismatch(f"timestamp must be {TS_LEN} octets, got {len(raw)}")
    return struct.unpack(">Q", raw)[0]


def check_id(ident: bytes) -> bytes:
    """Validate an identity: 1..20 printable ASCII octets (0x20-0x7e).

    The printable alphabet is what makes a wrongly unmasked identity
    detectable; random 20-octet garbage decodes with probability ~2^-28.
    """
    if len(ident) > ID_LEN:
        raise IdTooLong(f"identity of {len(ident)} octets exceeds {ID_LEN}")
    if not ident:
        raise IdNotCanonical("empty identity")
    if ident[-1] == 0:
        raise IdNotCanonical("identity ends with a zero octet")
    if any(c < 0x20 or c > 0x7E for c in ident):
        raise IdNotCanonical("identity contains non-printable octets")
    return ident


def encode_id(ident: bytes) -> bytes:
    check_id(ident)
    return ident.ljust(ID_LEN, b"\x00")


def decode_id(raw: bytes) -> bytes:
    if len(raw) != ID_LEN:
        raise LengthMismatch(f"encoded identity must be {ID_LEN} octets, got {len(raw)}")
    return check_id(raw.rstrip(b"\x00"))


def _part(p: Part) -> bytes:
    return encode_ts(p) if isinstance(p, int) else p


def h(*parts: Part) -> Digest:
    """h(p1 || p2 || ...) with canonical concatenation; ints are timestamps."""
    return hash_bytes(concat(_part(p) for p in parts))
