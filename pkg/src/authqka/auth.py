"""Keyed hash family used to derive the per-party I/H encoding bits.

The family is HMAC-SHA256 indexed by a public 64-bit selector, expanded to
any bit length by rehashing with a 32-bit block counter::

    block_j = HMAC-SHA256(k, selector || ID || r_party || r_tp || j)

Tag bits are read most-significant-bit first from the concatenated blocks.
"""

from __future__ import annotations

import hashlib
import hmac
import math
import struct

import numpy as np

HASH_FAMILY = "hmac-sha256-ctr"
_BLOCK_BITS = 256


def hash_function_id(selector: int) -> str:
    return f"{HASH_FAMILY}/{selector:016x}"


def parse_hash_function_id(ident: str) -> int:
    family, _, selector = ident.partition("/")
    if family != HASH_FAMILY or not selector:
        raise ValueError(f"unknown hash function identifier {ident!r}")
    return int(selector, 16)


def derive_auth_tag(
    private_key: bytes,
    public_id: bytes,
    r_party: bytes,
    r_tp: bytes,
    length: int,
    selector: int = 0,
) -> np.ndarray:
    """Return ``length`` tag bits as a uint8 array of zeros and ones."""
    if length < 1:
        raise ValueError(f"tag length must be positive, got {length}")
    prefix = struct.pack(">Q", selector) + public_id + r_party + r_tp
    blocks = [
        hmac.new(private_key, prefix + struct.pack(">I", j), hashlib.sha256).digest()
        for j in range(math.ceil(length / _BLOCK_BITS))
    ]
    bits = np.unpackbits(np.frombuffer(b"".join(blocks), dtype=np.uint8))
    return bits[:length].copy()


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)
