"""Byte-level helpers shared by every codec in the package.

Framed encoding: each part is written as a 4-byte big-endian length followed
by the raw bytes. Canonical JSON: sorted keys, no whitespace, UTF-8.
"""

import hashlib
import json
import struct

_LEN = struct.Struct(">I")


class DecodeError(ValueError):
    """Raised when an encoding is malformed; never returns partial data."""


def frame(*parts: bytes) -> bytes:
    out = bytearray()
    for part in parts:
        out += _LEN.pack(len(part))
        out += part
    return bytes(out)


def unframe(data: bytes, count: int | None = None) -> list[bytes]:
    parts = []
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise DecodeError("truncated length prefix")
        (n,) = _LEN.unpack_from(data, pos)
        pos += 4
        if pos + n > len(data):
            raise DecodeError("truncated frame")
        parts.append(bytes(data[pos:pos + n]))
        pos += n
    if count is not None and len(parts) != count:
        raise DecodeError(f"expected {count} frames, got {len(parts)}")
    return parts


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def from_hex(value: str, length: int | None = None) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except (ValueError, TypeError) as exc:
        raise DecodeError(f"bad hex: {exc}") from None
    if length is not None and len(raw) != length:
        raise DecodeError(f"expected {length} bytes, got {len(raw)}")
    return raw
