"""Acceptance gate for the codec server, one printed verdict per criterion.

These are cross-component checks: the masklink client talks to a live
server over TCP, and the neural codec is compared against the reference
codec on the shared sample corpus. The packaged pre-trained checkpoint is
the artifact under test.
"""

import struct
import threading

import numpy as np
import pytest

from masklink.codec import ReferenceCodec
from masklink.imaging import PatchGrid, apply_mask
from masklink.mapping import MaskPattern
from masklink.metrics import psnr
from masklink.remote import RemoteCodec
from masklink.sparsecode import build_restore_indices
from masklink.synth import synthetic_batch

from maeserver import wireproto as wp
from maeserver.server import CodecServer, TCPCodecServer

GRID = PatchGrid(16, 14, 14)


def _report(capsys, name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f": {detail}"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def live():
    server = CodecServer()  # packaged pre-trained checkpoint
    with TCPCodecServer(("127.0.0.1", 0), server) as tcp:
        thread = threading.Thread(target=tcp.serve_forever, daemon=True)
        thread.start()
        host, port = tcp.server_address
        yield server, f"{host}:{port}"
        tcp.shutdown()


def _random_mask(rng):
    bits = (rng.random(196) < rng.uniform(0.02, 0.98)).astype(np.uint8)
    if bits.sum() == 196:
        bits[rng.integers(196)] = 0
    return MaskPattern(bits)


def test_restore_agreement_with_primary_client(capsys, live):
    """Client and server agree on restore indices for 100 random masks."""
    _, endpoint = live
    remote = RemoteCodec(endpoint)
    photos = synthetic_batch(2, master_seed=777)
    rng = np.random.default_rng(101)

    agree = 0
    for i in range(100):
        mask = _random_mask(rng)
        mimg = apply_mask(photos[i % 2], GRID, mask)
        _, restore = remote.encode(mimg)
        expect = build_restore_indices(mask)
        agree += int(np.array_equal(restore.ids_restore, expect.ids_restore)
                     and restore.len_keep == expect.len_keep)
    remote.close()
    _report(capsys, "restore-index agreement", agree == 100,
            f"{agree}/100 random masks identical across the wire")


def test_framing_fuzz(capsys, live):
    """10^4 random messages: every one is answered or rejected, no crashes."""
    server, endpoint = live
    rng = np.random.default_rng(202)
    crashes = 0

    # framed garbage straight into the dispatcher
    for _ in range(5_000):
        msg_type = int(rng.integers(0, 256))
        body = rng.bytes(int(rng.integers(0, 400)))
        try:
            reply = server.handle_message(msg_type, body)
            wp.parse_message(reply)
        except Exception:
            crashes += 1

    # raw bytes into the parsers: only ProtocolError may escape
    for _ in range(5_000):
        blob = rng.bytes(int(rng.integers(0, 120)))
        for parse in (lambda b: wp.parse_message(b),
                      lambda b: wp.parse_tensors(b, 1),
                      lambda b: wp.parse_capabilities(b)):
            try:
                parse(blob)
            except wp.ProtocolError:
                pass
            except Exception:
                crashes += 1

    # live socket still answers after a burst of framed junk
    import socket
    host, port = endpoint.rsplit(":", 1)
    with socket.create_connection((host, int(port)), timeout=10) as sock:
        for _ in range(200):
            msg_type = int(rng.integers(0, 256))
            body = rng.bytes(int(rng.integers(0, 64)))
            sock.sendall(wp.pack_message(msg_type, body))
            header = wp.read_exact(sock, wp.HEADER_LEN)
            _, length = struct.unpack_from("<BI", header, 4)
            wp.read_exact(sock, length)
        sock.sendall(wp.pack_message(wp.HEALTH))
        header = wp.read_exact(sock, wp.HEADER_LEN)
        kind, length = wp.parse_frame_header(header)
        wp.read_exact(sock, length)
        alive = kind == wp.HEALTH

    _report(capsys, "framing fuzz", crashes == 0 and alive,
            f"{crashes} crashes in 10,200 messages, server alive={alive}")


def test_neural_beats_reference_on_masked_content(capsys, live):
    """At 50% and 75% mask the neural codec reconstructs better than the
    reference codec on every sample photo; zero-mask floor is 25 dB."""
    _, endpoint = live
    remote = RemoteCodec(endpoint)
    reference = ReferenceCodec(224, 224, 3, 16, 64)
    photos = synthetic_batch(10, master_seed=31337)
    rng = np.random.default_rng(303)

    wins, total = 0, 0
    worst_margin = np.inf
    for ratio in (0.5, 0.75):
        ones = round(196 * ratio)
        for img in photos:
            bits = np.zeros(196, dtype=np.uint8)
            bits[:ones] = 1
            rng.shuffle(bits)
            mimg = apply_mask(img, GRID, MaskPattern(bits))

            lat_n, res_n = remote.encode(mimg)
            neural = psnr(img, remote.decode(lat_n, res_n))
            lat_r, res_r = reference.encode(mimg)
            ref = psnr(img, reference.decode(lat_r, res_r))

            total += 1
            wins += int(neural > ref)
            worst_margin = min(worst_margin, neural - ref)

    floor = np.inf
    zero = MaskPattern(np.zeros(196, dtype=np.uint8))
    for img in photos:
        mimg = apply_mask(img, GRID, zero)
        lat, res = remote.encode(mimg)
        floor = min(floor, psnr(img, remote.decode(lat, res)))
    remote.close()

    ok = wins == total and floor >= 25.0
    _report(capsys, "reconstruction ordering", ok,
            f"neural wins {wins}/{total} (worst margin {worst_margin:+.2f} dB), "
            f"zero-mask floor {floor:.2f} dB (needs >= 25)")
