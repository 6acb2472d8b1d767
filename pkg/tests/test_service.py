import base64
import hashlib
import json
import os
import socket
import struct
import threading

import numpy as np
import pytest

from mfdeform.service import (SessionServer, SessionService,
                              recv_length_prefixed, send_length_prefixed)

from conftest import disk_positions, line_positions


def line_doc():
    return {"dim": 2, "points": line_positions(), "k": 2}


FAR = [{"id": 0, "type": "point", "sample": 2},
       {"id": 1, "type": "point", "sample": 8}]
CLOSE = [{"id": 0, "type": "point", "sample": 2},
         {"id": 1, "type": "point", "sample": 3}]


@pytest.fixture
def service():
    return SessionService()


def open_line(service, handles=FAR):
    sid = service.handle_message({"type": "open_session", "domain": line_doc()})["session_id"]
    reply = service.handle_message({"type": "set_handles", "session_id": sid,
                                    "handles": handles})
    return sid, reply


def test_open_and_set_handles(service):
    sid, reply = open_line(service)
    assert reply["violations"] == []
    metrics = {m["id"]: m for m in reply["metrics"]}
    assert metrics[0]["r_d"] == 3.0 and metrics[0]["r_h"] == 6.0
    assert reply["weights_stale"] is True


def test_full_editing_flow(service):
    sid, reply = open_line(service, handles=CLOSE)
    assert reply["violations"] == [0, 1]

    reply = service.handle_message({"type": "insert_virtual", "session_id": sid})
    assert [s["inserted_index"] for s in reply["trace"]] == [10, 6, 0]
    assert len(reply["handles"]) == 5

    reply = service.handle_message({"type": "compute_weights", "session_id": sid})
    assert reply["regime"] == "interpolating"
    assert reply["handle_ids"] == [0, 1, 2, 3, 4]

    reply = service.handle_message({
        "type": "get_weight_field", "session_id": sid, "handle_id": 0})
    assert len(reply["weights"]) == 11
    assert reply["weights"][2] == 1.0

    poses = [{"handle": 0, "quaternion": [1, 0, 0, 0], "translation": [1.0, 0.0]},
             {"handle": 1, "quaternion": [1, 0, 0, 0], "translation": [1.0, 0.0]}]
    reply = service.handle_message({
        "type": "update_transforms", "session_id": sid, "poses": poses})
    got = np.asarray(reply["positions"])
    expect = np.asarray(line_doc()["points"]) + [1.0, 0.0]
    assert np.abs(got - expect).max() <= 1e-9


def test_identity_poses_return_original(service):
    sid, _ = open_line(service)
    service.handle_message({"type": "compute_weights", "session_id": sid})
    reply = service.handle_message({
        "type": "update_transforms", "session_id": sid, "poses": []})
    got = np.asarray(reply["positions"])
    assert np.abs(got - np.asarray(line_doc()["points"])).max() <= 1e-12


def test_stale_weights_guard(service):
    sid, _ = open_line(service)
    reply = service.handle_message({
        "type": "update_transforms", "session_id": sid, "poses": []})
    assert reply["error"] == "StaleWeights"
    service.handle_message({"type": "compute_weights", "session_id": sid})
    reply = service.handle_message({
        "type": "add_handle", "session_id": sid, "position": [5.0, 0.0]})
    assert reply["handle_id"] == 2 and reply["snapped"] is True
    reply = service.handle_message({
        "type": "update_transforms", "session_id": sid, "poses": []})
    assert reply["error"] == "StaleWeights"


def test_virtual_handles_inherit_default_basis(service):
    sid = service.handle_message({"type": "open_session",
                                  "domain": line_doc()})["session_id"]
    service.handle_message({
        "type": "set_handles", "session_id": sid, "handles": CLOSE,
        "default_basis": {"type": "bezier", "n": 7},
    })
    service.handle_message({"type": "insert_virtual", "session_id": sid})
    session = service.sessions[sid]
    virtuals = [h for h in session.handles if h.is_virtual]
    assert virtuals and all(h.basis.degree == 7 for h in virtuals)


def test_get_partition(service):
    sid, _ = open_line(service)
    reply = service.handle_message({"type": "get_partition", "session_id": sid})
    assert reply["cell_of"] == [0] * 6 + [1] * 5


def test_add_handle_inserts_new_sample(service):
    sid, _ = open_line(service)
    reply = service.handle_message({
        "type": "add_handle", "session_id": sid, "position": [4.5, 0.0]})
    assert reply["snapped"] is False
    assert reply["sample_index"] == 11
    assert reply["num_points"] == 12
    assert "points" in reply


def test_add_handle_matches_cli_trace(service):
    # add_handle then insert_virtual reproduces the close-handle trace
    sid = service.handle_message({"type": "open_session",
                                  "domain": line_doc()})["session_id"]
    service.handle_message({"type": "set_handles", "session_id": sid,
                            "handles": [CLOSE[0]]})
    service.handle_message({"type": "add_handle", "session_id": sid,
                            "position": [3.0, 0.0]})
    reply = service.handle_message({"type": "insert_virtual", "session_id": sid})
    assert [s["inserted_index"] for s in reply["trace"]] == [10, 6, 0]
    assert [s["handle"] for s in reply["trace"]] == [1, 1, 0]


def test_pose_updates_never_recompute_weights(service):
    rng = np.random.default_rng(0)
    doc = {"dim": 2, "points": disk_positions(200, seed=1).tolist(), "k": 8}
    sid = service.handle_message({"type": "open_session", "domain": doc})["session_id"]
    service.handle_message({"type": "set_handles", "session_id": sid, "handles": [
        {"id": 0, "type": "point", "sample": 0},
        {"id": 1, "type": "point", "sample": 100},
    ]})
    service.handle_message({"type": "insert_virtual", "session_id": sid})
    service.handle_message({"type": "compute_weights", "session_id": sid})
    base = service.handle_message({"type": "debug_stats", "session_id": sid})
    assert base["weight_recomputes"] == 1

    for _ in range(1000):
        th = float(rng.uniform(-np.pi, np.pi))
        poses = [{"handle": 0,
                  "quaternion": [np.cos(th / 2), 0, 0, np.sin(th / 2)],
                  "translation": rng.uniform(-1, 1, 2).tolist()}]
        reply = service.handle_message({
            "type": "update_transforms", "session_id": sid, "poses": poses})
        assert "error" not in reply
    stats = service.handle_message({"type": "debug_stats", "session_id": sid})
    assert stats["weight_recomputes"] == 1  # poses never touch weights

    # only handle-set changes mark weights stale and force a recompute
    service.handle_message({"type": "add_handle", "session_id": sid,
                            "position": [0.05, 0.05]})
    service.handle_message({"type": "insert_virtual", "session_id": sid})
    service.handle_message({"type": "compute_weights", "session_id": sid})
    stats = service.handle_message({"type": "debug_stats", "session_id": sid})
    assert stats["weight_recomputes"] == 2


def test_sessions_are_isolated(service):
    sid_a, _ = open_line(service, handles=FAR)
    sid_b, _ = open_line(service, handles=CLOSE)
    ra = service.handle_message({"type": "debug_stats", "session_id": sid_a})
    rb = service.handle_message({"type": "debug_stats", "session_id": sid_b})
    assert ra["num_handles"] == 2 and rb["num_handles"] == 2
    service.handle_message({"type": "insert_virtual", "session_id": sid_b})
    ra = service.handle_message({"type": "debug_stats", "session_id": sid_a})
    rb = service.handle_message({"type": "debug_stats", "session_id": sid_b})
    assert ra["num_handles"] == 2 and rb["num_handles"] == 5


def test_concurrent_sessions_fuzz(service):
    errors = []

    def worker(seed):
        try:
            rng = np.random.default_rng(seed)
            sid, _ = open_line(service)
            service.handle_message({"type": "compute_weights", "session_id": sid})
            for _ in range(50):
                t = rng.uniform(-1, 1, 2).tolist()
                reply = service.handle_message({
                    "type": "update_transforms", "session_id": sid,
                    "poses": [{"handle": 0, "quaternion": [1, 0, 0, 0],
                               "translation": t}]})
                assert "error" not in reply
                expect = np.asarray(line_doc()["points"])
                got = np.asarray(reply["positions"])
                assert np.abs(got[2] - (expect[2] + t)).max() <= 1e-9
        except Exception as exc:  # noqa: BLE001
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []


def test_unknown_session_and_type(service):
    assert service.handle_message({"type": "debug_stats", "session_id": "nope"})["error"] == "UnknownSession"
    assert service.handle_message({"type": "frobnicate"})["error"] == "ProtocolError"
    assert service.handle_message({"no_type": 1})["error"] == "ProtocolError"
    reply = service.handle_message({"type": "debug_stats", "session_id": "nope", "id": 7})
    assert reply["id"] == 7


def test_service_weights_bit_identical_to_cli(tmp_path):
    from pathlib import Path

    from mfdeform.cli import main
    fixtures = Path(__file__).resolve().parent.parent / "fixtures"
    out = tmp_path / "w.mfw"
    assert main(["weights", "--domain", str(fixtures / "line_domain.json"),
                 "--handles", str(fixtures / "line_close_handles.json"),
                 "--out", str(out)]) == 0
    from mfdeform import load_weights_binary
    cli_dense = load_weights_binary(out)

    service = SessionService()
    sid = service.handle_message({"type": "open_session",
                                  "domain": line_doc()})["session_id"]
    service.handle_message({"type": "set_handles", "session_id": sid,
                            "handles": CLOSE})
    service.handle_message({"type": "insert_virtual", "session_id": sid})
    service.handle_message({"type": "compute_weights", "session_id": sid})
    session = service.sessions[sid]
    svc_dense = session.weight_field.dense()
    assert np.array_equal(cli_dense.view(np.uint64),
                          svc_dense.astype("<f8").view(np.uint64))


# -- transports --------------------------------------------------------------


@pytest.fixture
def live_server():
    server = SessionServer("127.0.0.1", 0, SessionService())
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server.server_address
    server.shutdown()
    server.server_close()


def test_tcp_length_prefixed_transport(live_server):
    host, port = live_server
    with socket.create_connection((host, port), timeout=5) as sock:
        send_length_prefixed(sock, {"type": "open_session", "domain": line_doc(), "id": 1})
        reply = recv_length_prefixed(sock)
        assert reply["id"] == 1 and reply["num_points"] == 11
        sid = reply["session_id"]
        send_length_prefixed(sock, {"type": "set_handles", "session_id": sid,
                                    "handles": FAR, "id": 2})
        reply = recv_length_prefixed(sock)
        assert reply["violations"] == []


class MiniWsClient:
    """Just enough RFC6455 to exercise the service's websocket path."""

    def __init__(self, host, port):
        self.sock = socket.create_connection((host, port), timeout=5)
        key = base64.b64encode(os.urandom(16)).decode()
        self.sock.sendall((
            f"GET /ws HTTP/1.1\r\nHost: {host}:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        ).encode())
        buf = b""
        while b"\r\n\r\n" not in buf:
            buf += self.sock.recv(4096)
        head = buf.split(b"\r\n\r\n", 1)[0].decode()
        assert "101" in head.splitlines()[0]
        guid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
        expect = base64.b64encode(hashlib.sha1((key + guid).encode()).digest()).decode()
        assert expect in head
        self.buffer = buf.split(b"\r\n\r\n", 1)[1]

    def _read(self, n):
        while len(self.buffer) < n:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError
            self.buffer += chunk
        out, self.buffer = self.buffer[:n], self.buffer[n:]
        return out

    def send(self, payload: dict):
        data = json.dumps(payload).encode()
        mask = os.urandom(4)
        header = bytes([0x81])
        n = len(data)
        if n < 126:
            header += bytes([0x80 | n])
        elif n < 65536:
            header += bytes([0x80 | 126]) + struct.pack(">H", n)
        else:
            header += bytes([0x80 | 127]) + struct.pack(">Q", n)
        masked = bytes(c ^ mask[i % 4] for i, c in enumerate(data))
        self.sock.sendall(header + mask + masked)

    def recv(self) -> dict:
        b0, b1 = self._read(2)
        assert b0 & 0x0F == 0x1
        length = b1 & 0x7F
        if length == 126:
            (length,) = struct.unpack(">H", self._read(2))
        elif length == 127:
            (length,) = struct.unpack(">Q", self._read(8))
        return json.loads(self._read(length))

    def close(self):
        self.sock.close()


def test_websocket_transport(live_server):
    host, port = live_server
    client = MiniWsClient(host, port)
    client.send({"type": "open_session", "domain": line_doc(), "id": 5})
    reply = client.recv()
    assert reply["id"] == 5
    sid = reply["session_id"]
    client.send({"type": "set_handles", "session_id": sid, "handles": FAR})
    assert client.recv()["violations"] == []
    client.send({"type": "compute_weights", "session_id": sid})
    assert client.recv()["regime"] == "interpolating"
    client.send({"type": "update_transforms", "session_id": sid, "poses": []})
    got = np.asarray(client.recv()["positions"])
    assert got.shape == (11, 2)
    client.close()


def test_both_transports_one_port(live_server):
    host, port = live_server
    ws = MiniWsClient(host, port)
    with socket.create_connection((host, port), timeout=5) as raw:
        ws.send({"type": "open_session", "domain": line_doc()})
        send_length_prefixed(raw, {"type": "open_session", "domain": line_doc()})
        assert "session_id" in ws.recv()
        assert "session_id" in recv_length_prefixed(raw)
    ws.close()
