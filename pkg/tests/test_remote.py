"""RemoteCodec against an in-process TCP double that serves ReferenceCodec."""

import socket
import socketserver
import threading

import numpy as np
import pytest

from masklink.codec import LatentBlock, ReferenceCodec, make_codec
from masklink.errors import CodecError
from masklink.imaging import PatchGrid, apply_mask
from masklink.mapping import MaskPattern
from masklink.remote import ENDPOINT_ENV, RemoteCodec, _resolve_endpoint
from masklink.sparsecode import build_restore_indices
from masklink.synth import synthetic_image
from masklink import wire


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        srv = self.server
        while True:
            try:
                msg_type, body = wire.read_message(self.request)
            except Exception:
                return
            try:
                reply = self._dispatch(srv, msg_type, body)
            except Exception as exc:
                reply = wire.pack_message(wire.ERROR, str(exc).encode())
            self.request.sendall(reply)

    def _dispatch(self, srv, msg_type, body):
        if srv.wedge is not None:
            return srv.wedge(msg_type, body)
        if msg_type == wire.HEALTH:
            return wire.pack_message(wire.HEALTH, wire.pack_health(srv.info))
        if msg_type == wire.ENCODE_REQ:
            img_px, mask = wire.parse_tensors(body, 2)
            from masklink.imaging import Image

            grid = PatchGrid(16, srv.codec.height // 16, srv.codec.width // 16)
            mimg = apply_mask(Image(img_px), grid,
                              MaskPattern(mask.astype(np.uint8)))
            latent, restore = srv.codec.encode(mimg)
            payload = (wire.pack_tensor(latent.values.astype("<f4"))
                       + wire.pack_tensor(restore.ids_restore.astype("<f4")))
            return wire.pack_message(wire.ENCODE_RSP, payload)
        if msg_type == wire.DECODE_REQ:
            latent, restore = wire.parse_tensors(body, 2)
            ids = np.asarray(np.rint(restore), dtype=np.int64).ravel()
            from masklink.sparsecode import RestoreIndices

            block = LatentBlock(np.asarray(latent, dtype=np.float64))
            img = srv.codec.decode(block, RestoreIndices(ids, latent.shape[0] - 1))
            return wire.pack_message(wire.DECODE_RSP, wire.pack_tensor(img.pixels))
        return wire.pack_message(wire.ERROR, b"unsupported message type")


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, codec, info, wedge=None):
        super().__init__(("127.0.0.1", 0), _Handler)
        self.codec = codec
        self.info = info
        self.wedge = wedge


@pytest.fixture(scope="module")
def ref_server():
    codec = ReferenceCodec(224, 224, 3, 16, 64)
    info = wire.HealthInfo("reference-double", 16, 196, 64)
    srv = _Server(codec, info)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def _endpoint(srv):
    host, port = srv.server_address
    return f"{host}:{port}"


def test_resolve_endpoint_requires_value(monkeypatch):
    monkeypatch.delenv(ENDPOINT_ENV, raising=False)
    with pytest.raises(CodecError, match="no endpoint"):
        _resolve_endpoint(None)


def test_resolve_endpoint_env_fallback(monkeypatch):
    monkeypatch.setenv(ENDPOINT_ENV, "example:9000")
    assert _resolve_endpoint(None) == ("example", 9000)
    # explicit argument wins over the environment
    assert _resolve_endpoint("other:1") == ("other", 1)


@pytest.mark.parametrize("bad", ["nocolon", "host:", "host:abc", ":"])
def test_resolve_endpoint_rejects_malformed(bad):
    with pytest.raises(CodecError, match="host:port"):
        _resolve_endpoint(bad)


def test_resolve_endpoint_default_host():
    assert _resolve_endpoint(":7000") == ("127.0.0.1", 7000)


def test_health_checked_at_construction(ref_server):
    codec = RemoteCodec(_endpoint(ref_server))
    assert codec.model == "reference-double"
    codec.close()


def test_geometry_mismatch_fails_fast(ref_server):
    with pytest.raises(CodecError, match="geometry"):
        RemoteCodec(_endpoint(ref_server), patch_size=8)
    with pytest.raises(CodecError, match="latent dim"):
        RemoteCodec(_endpoint(ref_server), latent_dim=32)


def test_unreachable_endpoint():
    # a port from the dynamic range with nothing bound to it
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    with pytest.raises(CodecError, match="cannot reach"):
        RemoteCodec(f"127.0.0.1:{port}")


def test_remote_matches_local_reference(ref_server):
    img = synthetic_image(seed=31)
    grid = PatchGrid(16, 14, 14)
    rng = np.random.default_rng(5)
    mask = MaskPattern((rng.random(196) < 0.5).astype(np.uint8))
    mimg = apply_mask(img, grid, mask)

    remote = RemoteCodec(_endpoint(ref_server))
    local = ReferenceCodec(224, 224, 3, 16, 64)

    lat_r, res_r = remote.encode(mimg)
    lat_l, res_l = local.encode(mimg)
    assert np.array_equal(res_r.ids_restore, res_l.ids_restore)
    assert res_r.len_keep == res_l.len_keep
    # latent crosses the wire as f32, so match after the same truncation
    assert np.array_equal(lat_r.values,
                          lat_l.values.astype("<f4").astype(np.float64))

    out_r = remote.decode(lat_r, res_r)
    out_l = local.decode(LatentBlock(lat_r.values), res_l)
    assert np.array_equal(out_r.pixels, out_l.pixels)
    remote.close()


def test_restore_agreement_random_masks(ref_server):
    # the permutation must be identical to the local stable argsort for
    # arbitrary masks, not just the one fixture
    remote = RemoteCodec(_endpoint(ref_server))
    img = synthetic_image(seed=32)
    grid = PatchGrid(16, 14, 14)
    rng = np.random.default_rng(6)
    for _ in range(25):
        mask = MaskPattern((rng.random(196) < rng.random()).astype(np.uint8))
        _, restore = remote.encode(apply_mask(img, grid, mask))
        expect = build_restore_indices(mask)
        assert np.array_equal(restore.ids_restore, expect.ids_restore)
        assert restore.len_keep == expect.len_keep
    remote.close()


def test_wrong_image_geometry_rejected_clientside(ref_server):
    remote = RemoteCodec(_endpoint(ref_server))
    img = synthetic_image(height=64, width=64, seed=33)
    grid = PatchGrid(16, 4, 4)
    mask = MaskPattern(np.zeros(16, dtype=np.uint8))
    with pytest.raises(CodecError, match="geometry"):
        remote.encode(apply_mask(img, grid, mask))
    remote.close()


def test_server_error_surfaces_as_codec_error():
    def wedge(msg_type, body):
        if msg_type == wire.HEALTH:
            return wire.pack_message(
                wire.HEALTH, wire.pack_health(wire.HealthInfo("w", 16, 196, 64)))
        return wire.pack_message(wire.ERROR, b"model exploded")

    srv = _Server(None, None, wedge=wedge)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    try:
        remote = RemoteCodec(_endpoint(srv))
        img = synthetic_image(seed=34)
        mimg = apply_mask(img, PatchGrid(16, 14, 14),
                          MaskPattern(np.zeros(196, dtype=np.uint8)))
        with pytest.raises(CodecError, match="model exploded"):
            remote.encode(mimg)
        remote.close()
    finally:
        srv.shutdown()
        srv.server_close()


def test_unexpected_response_type_rejected():
    def wedge(msg_type, body):
        if msg_type == wire.HEALTH:
            return wire.pack_message(
                wire.HEALTH, wire.pack_health(wire.HealthInfo("w", 16, 196, 64)))
        # answer ENCODE_REQ with a DECODE_RSP
        return wire.pack_message(wire.DECODE_RSP, b"")

    srv = _Server(None, None, wedge=wedge)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    try:
        remote = RemoteCodec(_endpoint(srv))
        img = synthetic_image(seed=35)
        mimg = apply_mask(img, PatchGrid(16, 14, 14),
                          MaskPattern(np.zeros(196, dtype=np.uint8)))
        with pytest.raises(CodecError, match="unexpected response"):
            remote.encode(mimg)
        remote.close()
    finally:
        srv.shutdown()
        srv.server_close()


def test_make_codec_remote_wires_endpoint(ref_server):
    codec = make_codec("remote", height=224, width=224,
                       endpoint=_endpoint(ref_server))
    assert isinstance(codec, RemoteCodec)
    codec.close()
