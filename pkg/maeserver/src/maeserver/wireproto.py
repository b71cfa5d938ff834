"""Wire protocol: length-prefixed binary messages carrying tensors.

This is the server's own implementation of the protocol; it shares the
byte layout with the masklink client but no code.

Message:  magic "SCMC" | type u8 | length u32 LE | payload
Tensor:   rank u8 | dims (rank x u32 LE) | dtype u8 | data
          dtype 0 = float32 LE, dtype 1 = uint8
Health:   name_len u8 | name bytes | patch u32 | patches u32 | dim u32 (LE)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SCMC"

ENCODE_REQ = 1
ENCODE_RSP = 2
DECODE_REQ = 3
DECODE_RSP = 4
HEALTH = 5
ERROR = 6

KNOWN_TYPES = frozenset((ENCODE_REQ, ENCODE_RSP, DECODE_REQ, DECODE_RSP,
                         HEALTH, ERROR))

HEADER_LEN = 9
MAX_PAYLOAD = 1 << 26

_DTYPE_F32 = 0
_DTYPE_U8 = 1


class ProtocolError(Exception):
    """Malformed bytes on the wire."""


def pack_message(msg_type: int, payload: bytes = b"") -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds the cap")
    return MAGIC + struct.pack("<BI", msg_type, len(payload)) + payload


def parse_frame_header(header: bytes) -> tuple[int, int]:
    """(type, length) from the 9 fixed bytes; magic and cap enforced here."""
    if len(header) != HEADER_LEN:
        raise ProtocolError(f"message header must be {HEADER_LEN} bytes")
    if header[:4] != MAGIC:
        raise ProtocolError(f"bad magic {header[:4]!r}")
    msg_type, length = struct.unpack_from("<BI", header, 4)
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared payload of {length} bytes exceeds the cap")
    return msg_type, length


def parse_message(data: bytes) -> tuple[int, bytes]:
    if len(data) < HEADER_LEN:
        raise ProtocolError("message shorter than its fixed header")
    msg_type, length = parse_frame_header(data[:HEADER_LEN])
    if len(data) != HEADER_LEN + length:
        raise ProtocolError("message length field does not match the body")
    return msg_type, data[HEADER_LEN:]


def pack_tensor(arr: np.ndarray) -> bytes:
    if arr.dtype == np.uint8:
        dtype_byte, data = _DTYPE_U8, arr.tobytes()
    else:
        dtype_byte, data = _DTYPE_F32, np.ascontiguousarray(arr, dtype="<f4").tobytes()
    head = struct.pack("<B", arr.ndim)
    head += b"".join(struct.pack("<I", d) for d in arr.shape)
    return head + struct.pack("<B", dtype_byte) + data


def parse_tensor(data: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Tensor at offset; returns (array, offset past it)."""
    if offset >= len(data):
        raise ProtocolError("truncated tensor: missing rank byte")
    rank = data[offset]
    offset += 1
    if offset + 4 * rank > len(data):
        raise ProtocolError("truncated tensor: missing dims")
    dims = struct.unpack_from(f"<{rank}I", data, offset) if rank else ()
    offset += 4 * rank
    if offset >= len(data):
        raise ProtocolError("truncated tensor: missing dtype byte")
    dtype_byte = data[offset]
    offset += 1
    count = 1
    for d in dims:
        count *= d
    if dtype_byte == _DTYPE_F32:
        nbytes, dt = 4 * count, np.dtype("<f4")
    elif dtype_byte == _DTYPE_U8:
        nbytes, dt = count, np.dtype(np.uint8)
    else:
        raise ProtocolError(f"unknown tensor dtype byte {dtype_byte}")
    if offset + nbytes > len(data):
        raise ProtocolError("truncated tensor: missing data")
    arr = np.frombuffer(data[offset:offset + nbytes], dtype=dt).reshape(dims)
    return arr, offset + nbytes


def parse_tensors(data: bytes, count: int) -> list[np.ndarray]:
    out, offset = [], 0
    for _ in range(count):
        arr, offset = parse_tensor(data, offset)
        out.append(arr)
    if offset != len(data):
        raise ProtocolError("trailing bytes after the declared tensors")
    return out


@dataclass(frozen=True)
class Capabilities:
    model: str
    patch_size: int
    num_patches: int
    latent_dim: int


def pack_capabilities(cap: Capabilities) -> bytes:
    name = cap.model.encode()
    if len(name) > 255:
        raise ProtocolError("model name too long")
    return (struct.pack("<B", len(name)) + name
            + struct.pack("<III", cap.patch_size, cap.num_patches, cap.latent_dim))


def parse_capabilities(data: bytes) -> Capabilities:
    if len(data) < 1:
        raise ProtocolError("truncated health body")
    name_len = data[0]
    if len(data) != 1 + name_len + 12:
        raise ProtocolError("health body length mismatch")
    try:
        name = data[1:1 + name_len].decode()
    except UnicodeDecodeError as exc:
        raise ProtocolError("model name is not valid utf-8") from exc
    p, n, d = struct.unpack_from("<III", data, 1 + name_len)
    return Capabilities(name, p, n, d)


def read_exact(stream, count: int) -> bytes:
    """Read exactly count bytes from a file-like or socket-like object."""
    chunks = []
    got = 0
    read = getattr(stream, "recv", None) or stream.read
    while got < count:
        chunk = read(count - got)
        if not chunk:
            raise ProtocolError("connection closed mid-message")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)
