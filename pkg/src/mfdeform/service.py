"""Live editing sessions over a local socket.

One JSON message in, one JSON message out. Two framings share the same
protocol handler on one port: a 4-byte big-endian length prefix for
plain TCP clients, and RFC6455 WebSocket text frames for the browser
editor (the request sniffs as an HTTP GET upgrade).

Weights are pose-independent, so pose updates only re-blend cached
weights; the per-session recompute counter exists to keep that claim
testable. Mutating requests serialize on the session lock; reads see
immutable snapshots.
"""

from __future__ import annotations

import base64
import hashlib
import json
import secrets
import socket
import socketserver
import struct
import threading

import numpy as np

from .basis import basis_from_spec
from .deform import deform
from .distance import compute_handle_fields, delaunay_graph, voronoi_partition
from .domain import SampleDomain, domain_from_doc, insert_points
from .errors import MfdError, ProtocolError, StaleWeights, UnknownSession
from .handles import KIND_POINT, Handle, bind_handle_specs
from .transforms import HandleTransform, transform_from_doc
from .virtual import insert_virtual_handles, solve_harmonic_fields
from .weights import compute_weights


class Session:
    def __init__(self, sid: str, domain: SampleDomain):
        self.id = sid
        self.domain = domain
        self.handles: list[Handle] = []
        self.default_basis = None         # virtual handles inherit this family
        self.fields: dict = {}            # handle id -> distance array
        self.partition = None
        self.weight_field = None
        self.harmonic = None
        self.insertion_trace = None
        self.weights_stale = True
        self.weight_recomputes = 0
        self.lock = threading.RLock()

    def invalidate_weights(self):
        self.weights_stale = True
        self.weight_field = None
        self.harmonic = None

    def summary(self) -> dict:
        rows = []
        violations = []
        if self.partition is not None:
            for hid in self.partition.handle_ids:
                rd = self.partition.r_d[hid]
                rh = self.partition.r_h[hid]
                rows.append({
                    "id": hid,
                    "r_d": rd,
                    "r_h": None if np.isinf(rh) else rh,
                    "delta": None if np.isinf(rh) else rd - rh,
                })
            violations = self.partition.violations()
        return {
            "handles": self._handle_docs(),
            "metrics": rows,
            "violations": violations,
            "num_points": self.domain.num_points,
            "weights_stale": self.weights_stale,
        }

    def _handle_docs(self) -> list:
        docs = []
        for h in sorted(self.handles, key=lambda x: x.id):
            docs.append({
                "id": h.id,
                "kind": h.kind,
                "samples": list(h.sample_indices),
                "positions": self.domain.positions[list(h.sample_indices)].tolist(),
            })
        return docs


class SessionService:
    """Transport-independent protocol handler."""

    def __init__(self, default_domain_doc: dict | None = None):
        self.default_domain_doc = default_domain_doc
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    # -- plumbing ---------------------------------------------------------

    def handle_message(self, msg: dict) -> dict:
        try:
            if not isinstance(msg, dict) or "type" not in msg:
                raise ProtocolError("message must be an object with a 'type'")
            mtype = msg["type"]
            handler = getattr(self, f"_on_{mtype}", None)
            if handler is None:
                raise ProtocolError(f"unknown request type {mtype!r}")
            reply = handler(msg)
            reply.setdefault("type", mtype)
        except MfdError as exc:
            reply = {"error": exc.code, "message": str(exc)}
        except (KeyError, TypeError, ValueError) as exc:
            reply = {"error": "ProtocolError", "message": f"{type(exc).__name__}: {exc}"}
        if isinstance(msg, dict) and "id" in msg:
            reply["id"] = msg["id"]
        return reply

    def _session(self, msg: dict) -> Session:
        sid = msg.get("session_id")
        session = self.sessions.get(sid)
        if session is None:
            raise UnknownSession(f"no session {sid!r}")
        return session

    # -- endpoints --------------------------------------------------------

    def _on_open_session(self, msg: dict) -> dict:
        doc = msg.get("domain") or self.default_domain_doc
        if doc is None:
            raise ProtocolError("no domain in request and no server default")
        domain = domain_from_doc(doc)
        sid = secrets.token_hex(8)
        with self._registry_lock:
            self.sessions[sid] = Session(sid, domain)
        return {
            "session_id": sid,
            "dim": domain.dim,
            "num_points": domain.num_points,
            "points": domain.positions.tolist(),
        }

    def _on_close_session(self, msg: dict) -> dict:
        session = self._session(msg)
        with self._registry_lock:
            self.sessions.pop(session.id, None)
        return {"closed": True}

    def _on_set_handles(self, msg: dict) -> dict:
        session = self._session(msg)
        with session.lock:
            default_basis = None
            if "default_basis" in msg:
                default_basis = basis_from_spec(msg["default_basis"])
            session.default_basis = default_basis
            old_n = session.domain.num_points
            domain, handles = bind_handle_specs(
                session.domain, msg["handles"], default_basis)
            session.domain = domain
            session.handles = handles
            session.insertion_trace = None
            # ids may be rebound to different samples; never reuse old fields
            session.fields = compute_handle_fields(domain, handles, cache=None)
            session.partition = voronoi_partition(domain, handles, fields=session.fields)
            session.invalidate_weights()
            reply = session.summary()
            if domain.num_points != old_n:
                reply["points"] = domain.positions.tolist()
            return reply

    def _on_add_handle(self, msg: dict) -> dict:
        session = self._session(msg)
        with session.lock:
            position = np.asarray(msg["position"], dtype=np.float64)
            old_n = session.domain.num_points
            domain, mapped = insert_points(session.domain, position[None, :])
            snapped = domain is session.domain
            if not snapped:
                session.fields = {}
            session.domain = domain
            hid = max((h.id for h in session.handles), default=-1) + 1
            handle = Handle(id=hid, kind=KIND_POINT, sample_indices=(mapped[0],))
            if "basis" in msg:
                handle.basis = basis_from_spec(msg["basis"])
            session.handles = session.handles + [handle]
            session.insertion_trace = None
            session.fields = compute_handle_fields(
                domain, session.handles, cache=session.fields)
            session.partition = voronoi_partition(
                domain, session.handles, fields=session.fields)
            session.invalidate_weights()
            reply = session.summary()
            reply.update({
                "handle_id": hid,
                "sample_index": int(mapped[0]),
                "snapped": snapped,
            })
            if domain.num_points != old_n:
                reply["points"] = domain.positions.tolist()
            return reply

    def _on_insert_virtual(self, msg: dict) -> dict:
        session = self._session(msg)
        with session.lock:
            trace = insert_virtual_handles(
                session.domain, session.handles,
                default_basis=session.default_basis, fields=session.fields)
            session.handles = trace.final_handles
            session.partition = trace.final_partition
            session.insertion_trace = trace
            session.invalidate_weights()
            reply = session.summary()
            reply["trace"] = json.loads(trace.to_json())
            reply["score_monotone"] = trace.score_monotone
            return reply

    def _on_compute_weights(self, msg: dict) -> dict:
        session = self._session(msg)
        with session.lock:
            alpha = float(msg.get("alpha", 1.0))
            if "basis" in msg:
                basis = basis_from_spec(msg["basis"])
                for h in session.handles:
                    h.basis = basis
            fld = compute_weights(session.domain, session.handles, alpha,
                                  partition=session.partition,
                                  fields=session.fields)
            session.weight_field = fld
            session.weight_recomputes += 1
            session.weights_stale = False
            graph = delaunay_graph(session.partition)
            real = [h.id for h in session.handles if not h.is_virtual]
            session.harmonic = solve_harmonic_fields(graph, real)
            dense = fld.dense()
            stats = [{
                "id": hid,
                "min": float(col.min()), "max": float(col.max()),
                "mean": float(col.mean()), "nonzero": int((col > 0).sum()),
            } for hid, col in zip(fld.handle_ids, dense.T)]
            return {
                "handle_ids": list(fld.handle_ids),
                "regime": fld.regime,
                "alpha": alpha,
                "stats": stats,
            }

    def _on_get_partition(self, msg: dict) -> dict:
        session = self._session(msg)
        part = session.partition
        if part is None:
            raise ProtocolError("no handles set yet")
        return {"cell_of": [int(c) for c in part.cell_of]}

    def _on_get_weight_field(self, msg: dict) -> dict:
        session = self._session(msg)
        fld = session.weight_field
        if fld is None:
            raise StaleWeights("no weights computed yet")
        hid = int(msg["handle_id"])
        return {"handle_id": hid, "weights": fld.handle_column(hid).tolist()}

    def _on_update_transforms(self, msg: dict) -> dict:
        session = self._session(msg)
        with session.lock:
            if session.weights_stale or session.weight_field is None:
                raise StaleWeights(
                    "handle set changed since weights were computed; recompute first")
            dim = session.domain.dim
            poses = {}
            for entry in msg["poses"]:
                poses[int(entry["handle"])] = transform_from_doc(entry, dim)
            transforms = _full_transforms(session, poses)
            result = deform(session.domain, session.weight_field, transforms)
            return {
                "positions": result.positions.tolist(),
                "regime": result.metadata["regime"],
            }

    def _on_debug_stats(self, msg: dict) -> dict:
        session = self._session(msg)
        return {
            "weight_recomputes": session.weight_recomputes,
            "num_points": session.domain.num_points,
            "num_handles": len(session.handles),
            "weights_stale": session.weights_stale,
        }


def _full_transforms(session: Session, real_poses: dict) -> dict:
    """Fill identity for unspecified real handles, propagate to virtuals."""
    from .virtual import propagate_transforms

    dim = session.domain.dim
    real = [h for h in session.handles if not h.is_virtual]
    virtual = [h for h in session.handles if h.is_virtual]
    transforms = {}
    for h in real:
        transforms[h.id] = real_poses.get(h.id, HandleTransform.identity(dim))
    if virtual:
        transforms = propagate_transforms(session.harmonic, transforms)
    return transforms


# -- transports -------------------------------------------------------------

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _recv_exact(sock, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed")
        buf += chunk
    return buf


def send_length_prefixed(sock, payload: dict) -> None:
    blob = json.dumps(payload).encode()
    sock.sendall(struct.pack(">I", len(blob)) + blob)


def recv_length_prefixed(sock) -> dict:
    (length,) = struct.unpack(">I", _recv_exact(sock, 4))
    return json.loads(_recv_exact(sock, length))


class _WebSocket:
    """Minimal RFC6455 server side: text, ping/pong, close, fragmentation."""

    def __init__(self, sock, leftover: bytes):
        self.sock = sock
        self.buffer = leftover

    def _read(self, n: int) -> bytes:
        while len(self.buffer) < n:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("peer closed")
            self.buffer += chunk
        out, self.buffer = self.buffer[:n], self.buffer[n:]
        return out

    def handshake(self) -> None:
        while b"\r\n\r\n" not in self.buffer:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("peer closed during handshake")
            self.buffer += chunk
        head, self.buffer = self.buffer.split(b"\r\n\r\n", 1)
        key = None
        for line in head.split(b"\r\n")[1:]:
            name, _, value = line.partition(b":")
            if name.strip().lower() == b"sec-websocket-key":
                key = value.strip().decode()
        if key is None:
            raise ConnectionError("missing Sec-WebSocket-Key")
        accept = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()).decode()
        self.sock.sendall((
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())

    def recv_text(self) -> str | None:
        message = b""
        while True:
            b0, b1 = self._read(2)
            fin = b0 & 0x80
            opcode = b0 & 0x0F
            masked = b1 & 0x80
            length = b1 & 0x7F
            if length == 126:
                (length,) = struct.unpack(">H", self._read(2))
            elif length == 127:
                (length,) = struct.unpack(">Q", self._read(8))
            mask = self._read(4) if masked else b""
            payload = self._read(length)
            if masked:
                payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
            if opcode == 0x8:
                self.send_frame(b"", 0x8)
                return None
            if opcode == 0x9:
                self.send_frame(payload, 0xA)
                continue
            if opcode == 0xA:
                continue
            message += payload
            if fin:
                return message.decode()

    def send_frame(self, payload: bytes, opcode: int = 0x1) -> None:
        header = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header += bytes([n])
        elif n < 65536:
            header += bytes([126]) + struct.pack(">H", n)
        else:
            header += bytes([127]) + struct.pack(">Q", n)
        self.sock.sendall(header + payload)

    def send_text(self, text: str) -> None:
        self.send_frame(text.encode(), 0x1)


class _ConnectionHandler(socketserver.BaseRequestHandler):
    def handle(self):
        service: SessionService = self.server.service  # type: ignore[attr-defined]
        sock = self.request
        try:
            first = sock.recv(4, socket.MSG_PEEK)
        except OSError:
            return
        if not first:
            return
        try:
            if first.startswith(b"GET"):
                ws = _WebSocket(sock, b"")
                ws.handshake()
                while True:
                    text = ws.recv_text()
                    if text is None:
                        break
                    reply = service.handle_message(json.loads(text))
                    ws.send_text(json.dumps(reply))
            else:
                while True:
                    msg = recv_length_prefixed(sock)
                    send_length_prefixed(sock, service.handle_message(msg))
        except (ConnectionError, json.JSONDecodeError, struct.error, OSError):
            pass


class SessionServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, host: str, port: int, service: SessionService):
        super().__init__((host, port), _ConnectionHandler)
        self.service = service


def serve(port: int, domain_doc: dict | None = None, host: str = "127.0.0.1",
          ready_callback=None) -> None:
    server = SessionServer(host, port, SessionService(domain_doc))
    actual_port = server.server_address[1]
    print(f"mfdeform session service on {host}:{actual_port}", flush=True)
    if ready_callback is not None:
        ready_callback(server)
    server.serve_forever()
