"""Client for a codec served over the remote wire protocol.

The endpoint is "host:port", taken from the constructor argument or the
MASKLINK_ENDPOINT environment variable. The client validates the server's
health report against its own geometry at construction time and fails fast
on mismatch.
"""

from __future__ import annotations

import os
import socket

import numpy as np

from . import wire
from .codec import Codec, LatentBlock
from .errors import CodecError, WireError
from .imaging import Image, MaskedImage
from .sparsecode import RestoreIndices

ENDPOINT_ENV = "MASKLINK_ENDPOINT"


def _resolve_endpoint(endpoint: str | None) -> tuple[str, int]:
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
    if not endpoint:
        raise CodecError(
            f"remote codec selected but no endpoint given (flag or {ENDPOINT_ENV})"
        )
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit():
        raise CodecError(f"endpoint must be host:port, got {endpoint!r}")
    return host or "127.0.0.1", int(port)


class RemoteCodec(Codec):
    def __init__(self, endpoint: str | None = None, *, height: int = 224,
                 width: int = 224, channels: int = 3, patch_size: int = 16,
                 latent_dim: int = 64, timeout: float = 30.0):
        self.host, self.port = _resolve_endpoint(endpoint)
        self.height = height
        self.width = width
        self.channels = channels
        self.patch_size = patch_size
        self.latent_dim = latent_dim
        self.timeout = timeout
        self._sock: socket.socket | None = None

        info = self.health()
        n = (height // patch_size) * (width // patch_size)
        if (info.patch_size, info.num_patches) != (patch_size, n):
            raise CodecError(
                f"server geometry P={info.patch_size} N={info.num_patches} does not "
                f"match client P={patch_size} N={n}"
            )
        if info.latent_dim != latent_dim:
            raise CodecError(
                f"server latent dim {info.latent_dim} != configured {latent_dim}"
            )
        self.model = info.model

    # -- transport ---------------------------------------------------------

    def _connect(self) -> socket.socket:
        if self._sock is None:
            try:
                self._sock = socket.create_connection((self.host, self.port),
                                                      timeout=self.timeout)
            except OSError as exc:
                raise CodecError(
                    f"cannot reach codec server at {self.host}:{self.port}: {exc}"
                ) from exc
        return self._sock

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def _roundtrip(self, msg_type: int, payload: bytes, expect: int) -> bytes:
        sock = self._connect()
        try:
            sock.sendall(wire.pack_message(msg_type, payload))
            rsp_type, body = wire.read_message(sock)
        except (OSError, WireError) as exc:
            self.close()
            raise CodecError(f"codec server transport failure: {exc}") from exc
        if rsp_type == wire.ERROR:
            raise CodecError(f"codec server error: {body.decode(errors='replace')}")
        if rsp_type != expect:
            raise CodecError(f"unexpected response type {rsp_type}, wanted {expect}")
        return body

    # -- contract ----------------------------------------------------------

    def health(self) -> wire.HealthInfo:
        body = self._roundtrip(wire.HEALTH, b"", wire.HEALTH)
        return wire.parse_health(body)

    def encode(self, mimg: MaskedImage) -> tuple[LatentBlock, RestoreIndices]:
        img = mimg.base
        if (img.channels, img.height, img.width) != (self.channels, self.height, self.width):
            raise CodecError("image does not match the remote codec geometry")
        payload = wire.pack_tensor(img.pixels) + wire.pack_tensor(mimg.mask.bits)
        body = self._roundtrip(wire.ENCODE_REQ, payload, wire.ENCODE_RSP)
        try:
            latent, restore = wire.parse_tensors(body, 2)
        except WireError as exc:
            raise CodecError(f"malformed encode response: {exc}") from exc
        latent = np.asarray(latent, dtype=np.float64)
        if latent.ndim != 2:
            raise CodecError("encode response latent must be 2-D")
        ids = np.asarray(np.rint(restore), dtype=np.int64).ravel()
        return LatentBlock(latent), RestoreIndices(ids, latent.shape[0] - 1)

    def decode(self, latent: LatentBlock, restore: RestoreIndices) -> Image:
        payload = (wire.pack_tensor(latent.values.astype("<f4"))
                   + wire.pack_tensor(restore.ids_restore.astype("<f4")))
        body = self._roundtrip(wire.DECODE_REQ, payload, wire.DECODE_RSP)
        try:
            (pixels,) = wire.parse_tensors(body, 1)
        except WireError as exc:
            raise CodecError(f"malformed decode response: {exc}") from exc
        if pixels.dtype != np.uint8 or pixels.ndim != 3:
            raise CodecError("decode response must be a uint8 image tensor")
        return Image(pixels)
