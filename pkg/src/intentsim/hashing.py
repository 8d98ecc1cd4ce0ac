"""Stable 64-bit non-cryptographic hashing (FNV-1a).

Used for package checksums and synthesized wave-blob bytes. Values are
compared for equality only, never inspected, so collision resistance
beyond accident-proofing is not required. The function is pure and
platform-stable, which is what the byte-identical trace contract needs.
"""

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def stable_hash64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK
    return h
