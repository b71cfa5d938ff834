"""Request handling and the two transports (TCP, stdio).

Every malformed request becomes an ERROR reply with a reason string; the
connection survives anything except a length field beyond the payload cap
(after which the stream cannot be re-synchronized) or a closed peer.
"""

from __future__ import annotations

import socketserver
import struct
import sys

import numpy as np
import torch

from . import wireproto as wp
from .model import (ModelConfig, TinyMAE, load_checkpoint, patchify,
                    restore_from_mask, unpatchify)


class RequestRejected(Exception):
    """Carries the reason string for an ERROR reply."""


class CodecServer:
    """Stateless request handler around one model instance.

    Inference runs under no_grad on a single torch thread so identical
    request bytes always produce identical response bytes.
    """

    def __init__(self, model: TinyMAE | None = None, model_id: str = "tinymae",
                 checkpoint=None):
        if model is None:
            model, model_id = load_checkpoint(checkpoint)
        model.eval()
        torch.set_num_threads(1)
        self.model = model
        self.model_id = model_id
        self.cfg: ModelConfig = model.cfg

    def capabilities(self) -> wp.Capabilities:
        return wp.Capabilities(self.model_id, self.cfg.patch_size,
                               self.cfg.num_patches, self.cfg.latent_dim)

    # -- handlers -----------------------------------------------------------

    def handle_message(self, msg_type: int, body: bytes) -> bytes:
        try:
            if msg_type == wp.HEALTH:
                payload = wp.pack_capabilities(self.capabilities())
                return wp.pack_message(wp.HEALTH, payload)
            if msg_type == wp.ENCODE_REQ:
                return wp.pack_message(wp.ENCODE_RSP, self._encode(body))
            if msg_type == wp.DECODE_REQ:
                return wp.pack_message(wp.DECODE_RSP, self._decode(body))
            raise RequestRejected(f"unsupported message type {msg_type}")
        except (RequestRejected, wp.ProtocolError) as exc:
            return wp.pack_message(wp.ERROR, str(exc).encode())
        except Exception as exc:  # keep serving whatever the model throws
            return wp.pack_message(wp.ERROR, f"internal error: {exc}".encode())

    def _encode(self, body: bytes) -> bytes:
        image, mask = wp.parse_tensors(body, 2)
        cfg = self.cfg
        want = (cfg.channels, cfg.image_size, cfg.image_size)
        if image.shape != want:
            raise RequestRejected(
                f"image shape {image.shape} does not match {want}")
        if image.dtype != np.uint8:
            raise RequestRejected("image tensor must be uint8")
        mask = np.asarray(np.rint(mask), dtype=np.int64).ravel()
        if mask.size != cfg.num_patches:
            raise RequestRejected(
                f"mask length {mask.size} does not match {cfg.num_patches}")
        if not np.isin(mask, (0, 1)).all():
            raise RequestRejected("mask entries must be 0 or 1")
        len_keep = int(cfg.num_patches - mask.sum())
        if len_keep == 0:
            raise RequestRejected("mask leaves zero visible patches")

        restore = restore_from_mask(mask)
        with torch.no_grad():
            pixels = torch.from_numpy(image.astype(np.float32) / 255.0)
            patches = patchify(pixels.unsqueeze(0), cfg.patch_size)[0]
            vis_idx = torch.from_numpy(np.flatnonzero(mask == 0))
            latent = self.model.encode_visible(patches[vis_idx].unsqueeze(0))[0]
        return (wp.pack_tensor(latent.numpy().astype("<f4"))
                + wp.pack_tensor(restore.astype("<f4")))

    def _decode(self, body: bytes) -> bytes:
        latent, restore = wp.parse_tensors(body, 2)
        cfg = self.cfg
        latent = np.array(latent, dtype=np.float32)  # writable copy for torch
        if latent.ndim != 2 or latent.shape[1] != cfg.latent_dim:
            raise RequestRejected(
                f"latent must be rows x {cfg.latent_dim}, got {latent.shape}")
        if not np.isfinite(latent).all():
            raise RequestRejected("latent contains NaN or infinite values")
        if not 1 <= latent.shape[0] <= cfg.num_patches + 1:
            raise RequestRejected(f"latent row count {latent.shape[0]} out of range")
        ids = np.asarray(np.rint(restore), dtype=np.int64).ravel()
        if ids.size != cfg.num_patches or not np.array_equal(
                np.sort(ids), np.arange(cfg.num_patches)):
            raise RequestRejected("restore indices are not a permutation")

        with torch.no_grad():
            out = self.model.decode_latent(
                torch.from_numpy(latent).unsqueeze(0),
                torch.from_numpy(ids).unsqueeze(0))
            image = unpatchify(out, cfg)[0]
        pixels = np.clip(image.numpy(), 0.0, 1.0)
        return wp.pack_tensor(np.rint(pixels * 255.0).astype(np.uint8))


# ---------------------------------------------------------------------------
# transports

def serve_stream(server: CodecServer, rx, send) -> None:
    """One connection: read framed requests from rx, pass replies to send."""
    while True:
        try:
            header = wp.read_exact(rx, wp.HEADER_LEN)
        except wp.ProtocolError:
            return  # peer closed between messages
        msg_type, length = struct.unpack_from("<BI", header, 4)
        if length > wp.MAX_PAYLOAD:
            send(wp.pack_message(wp.ERROR, b"declared payload exceeds the cap"))
            return  # framing cannot be trusted past this point
        try:
            body = wp.read_exact(rx, length)
        except wp.ProtocolError:
            return
        if header[:4] != wp.MAGIC:
            send(wp.pack_message(wp.ERROR,
                                 f"bad magic {header[:4]!r}".encode()))
            continue
        send(server.handle_message(msg_type, body))


class _TCPHandler(socketserver.BaseRequestHandler):
    def handle(self):
        serve_stream(self.server.codec_server, self.request,
                     self.request.sendall)


class TCPCodecServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, server: CodecServer):
        super().__init__(address, _TCPHandler)
        self.codec_server = server


def serve_tcp(server: CodecServer, host: str, port: int) -> None:
    with TCPCodecServer((host, port), server) as tcp:
        host, port = tcp.server_address
        print(f"maeserver: model {server.model_id} listening on {host}:{port}",
              file=sys.stderr, flush=True)
        tcp.serve_forever()


def serve_stdio(server: CodecServer) -> None:
    rx = sys.stdin.buffer
    tx = sys.stdout.buffer

    def send(data: bytes) -> None:
        tx.write(data)
        tx.flush()

    serve_stream(server, rx, send)
