"""Length-prefixed binary framing for the remote-codec protocol.

Byte layout is normative and bit-exact; WIREFORMAT.md in the repository
root is the reference. Summary:

  message   magic "SCMC" | type u8 | length u32 LE | payload[length]
  tensor    rank u8 | dims rank x u32 LE | dtype u8 | data
            dtype 0 = float32 LE row-major, dtype 1 = uint8
  health    name_len u8 | name utf8 | patch_size u32 | num_patches u32 |
            latent_dim u32   (all LE)
  error     utf8 reason string

Every parser failure raises WireError; nothing else escapes, so a server
loop can answer ERROR and keep the connection open.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import WireError

MAGIC = b"SCMC"

ENCODE_REQ = 1
ENCODE_RSP = 2
DECODE_REQ = 3
DECODE_RSP = 4
HEALTH = 5
ERROR = 6

_KNOWN_TYPES = {ENCODE_REQ, ENCODE_RSP, DECODE_REQ, DECODE_RSP, HEALTH, ERROR}

DTYPE_F32 = 0
DTYPE_U8 = 1

MAX_PAYLOAD = 1 << 26  # 64 MiB cap against absurd length fields
MAX_RANK = 8

HEADER_LEN = 9  # magic + type + length


def pack_message(msg_type: int, payload: bytes = b"") -> bytes:
    if msg_type not in _KNOWN_TYPES:
        raise WireError(f"unknown message type {msg_type}")
    if len(payload) > MAX_PAYLOAD:
        raise WireError("payload exceeds the size cap")
    return MAGIC + struct.pack("<BI", msg_type, len(payload)) + payload


def parse_header(header: bytes) -> tuple[int, int]:
    """Returns (type, payload length). The type is NOT validated here so a
    server can answer unknown types with ERROR instead of dropping them."""
    if len(header) != HEADER_LEN:
        raise WireError("short message header")
    if header[:4] != MAGIC:
        raise WireError("bad magic bytes")
    msg_type, length = struct.unpack("<BI", header[4:])
    if length > MAX_PAYLOAD:
        raise WireError(f"declared payload length {length} exceeds the cap")
    return msg_type, length


def parse_message(data: bytes) -> tuple[int, bytes]:
    """Parse one complete message from a byte string."""
    if len(data) < HEADER_LEN:
        raise WireError("truncated message")
    msg_type, length = parse_header(data[:HEADER_LEN])
    if len(data) != HEADER_LEN + length:
        raise WireError("message length does not match the declared payload size")
    return msg_type, data[HEADER_LEN:]


def pack_tensor(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    if arr.dtype == np.uint8:
        dtype, data = DTYPE_U8, arr.tobytes()
    else:
        dtype = DTYPE_F32
        data = arr.astype("<f4").tobytes()
    if arr.ndim > MAX_RANK:
        raise WireError(f"tensor rank {arr.ndim} exceeds {MAX_RANK}")
    head = struct.pack("<B", arr.ndim) + b"".join(struct.pack("<I", d) for d in arr.shape)
    return head + struct.pack("<B", dtype) + data


def parse_tensor(data: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Parse one tensor starting at offset; returns (array, next offset)."""
    if offset + 1 > len(data):
        raise WireError("truncated tensor: missing rank")
    rank = data[offset]
    offset += 1
    if rank > MAX_RANK:
        raise WireError(f"tensor rank {rank} exceeds {MAX_RANK}")
    dims = []
    for _ in range(rank):
        if offset + 4 > len(data):
            raise WireError("truncated tensor: missing dims")
        dims.append(struct.unpack_from("<I", data, offset)[0])
        offset += 4
    if offset + 1 > len(data):
        raise WireError("truncated tensor: missing dtype")
    dtype = data[offset]
    offset += 1
    count = 1
    for d in dims:
        count *= d
    if dtype == DTYPE_F32:
        nbytes, np_dtype = 4 * count, "<f4"
    elif dtype == DTYPE_U8:
        nbytes, np_dtype = count, np.uint8
    else:
        raise WireError(f"unknown tensor dtype {dtype}")
    if nbytes > MAX_PAYLOAD or offset + nbytes > len(data):
        raise WireError("truncated tensor: missing data")
    arr = np.frombuffer(data[offset:offset + nbytes], dtype=np_dtype).reshape(dims)
    return arr.copy(), offset + nbytes


def parse_tensors(data: bytes, count: int) -> list[np.ndarray]:
    out = []
    offset = 0
    for _ in range(count):
        arr, offset = parse_tensor(data, offset)
        out.append(arr)
    if offset != len(data):
        raise WireError("trailing bytes after the declared tensors")
    return out


@dataclass(frozen=True)
class HealthInfo:
    model: str
    patch_size: int
    num_patches: int
    latent_dim: int


def pack_health(info: HealthInfo) -> bytes:
    name = info.model.encode()
    if len(name) > 255:
        raise WireError("model name too long")
    return (struct.pack("<B", len(name)) + name
            + struct.pack("<III", info.patch_size, info.num_patches, info.latent_dim))


def parse_health(data: bytes) -> HealthInfo:
    if len(data) < 1:
        raise WireError("truncated health body")
    name_len = data[0]
    if len(data) != 1 + name_len + 12:
        raise WireError("health body length mismatch")
    try:
        name = data[1:1 + name_len].decode()
    except UnicodeDecodeError as exc:
        raise WireError("health model name is not valid utf-8") from exc
    p, n, d = struct.unpack_from("<III", data, 1 + name_len)
    return HealthInfo(name, p, n, d)


def read_exact(sock, count: int) -> bytes:
    """Read exactly count bytes from a socket-like object."""
    chunks = []
    remaining = count
    while remaining:
        chunk = sock.recv(min(remaining, 65536))
        if not chunk:
            raise WireError("connection closed mid-message")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_message(sock) -> tuple[int, bytes]:
    msg_type, length = parse_header(read_exact(sock, HEADER_LEN))
    return msg_type, read_exact(sock, length)
