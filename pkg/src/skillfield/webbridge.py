"""Minimal WebSocket bridge for live sessions.

Browsers cannot open raw TCP sockets, so this serves the exact same
message schema over RFC 6455: one JSON envelope per text frame instead of
one per line. Only what the bridge needs is implemented: the HTTP
upgrade, masked client frames, text/ping/close opcodes, unfragmented
server frames.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct
import threading

from .transport import BYE, Message, ProtocolError, SessionHub, SessionService, decode, encode

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class HandshakeError(Exception):
    pass


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed mid-frame")
        buf += chunk
    return buf


def _handshake(sock: socket.socket) -> None:
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            raise HandshakeError("connection closed during handshake")
        data += chunk
        if len(data) > 65536:
            raise HandshakeError("oversized handshake")
    head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    if not lines[0].startswith("GET "):
        raise HandshakeError("not a GET request")
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            name, value = line.split(":", 1)
            headers[name.strip().lower()] = value.strip()
    key = headers.get("sec-websocket-key")
    if not key or "websocket" not in headers.get("upgrade", "").lower():
        raise HandshakeError("missing websocket upgrade headers")
    accept = base64.b64encode(
        hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    ).decode("ascii")
    sock.sendall(
        (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n"
            "\r\n"
        ).encode("latin-1")
    )


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    """One client frame as (opcode, payload). Client frames must be masked."""
    header = _read_exact(sock, 2)
    fin_opcode, mask_len = header
    opcode = fin_opcode & 0x0F
    masked = bool(mask_len & 0x80)
    length = mask_len & 0x7F
    if length == 126:
        (length,) = struct.unpack("!H", _read_exact(sock, 2))
    elif length == 127:
        (length,) = struct.unpack("!Q", _read_exact(sock, 8))
    if length > 8 * 1024 * 1024:
        raise ProtocolError("websocket frame too large")
    if not masked:
        raise ProtocolError("client frames must be masked")
    mask = _read_exact(sock, 4)
    payload = bytearray(_read_exact(sock, length))
    for i in range(length):
        payload[i] ^= mask[i % 4]
    return opcode, bytes(payload)


def write_frame(sock: socket.socket, opcode: int, payload: bytes) -> None:
    header = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        header += bytes([n])
    elif n < 65536:
        header += bytes([126]) + struct.pack("!H", n)
    else:
        header += bytes([127]) + struct.pack("!Q", n)
    sock.sendall(header + payload)


def _serve_client(sock: socket.socket, hub: SessionHub) -> None:
    service = SessionService(hub, server_name="play-ws")
    try:
        _handshake(sock)
        while True:
            opcode, payload = read_frame(sock)
            if opcode == OP_CLOSE:
                write_frame(sock, OP_CLOSE, payload[:2])
                break
            if opcode == OP_PING:
                write_frame(sock, OP_PONG, payload)
                continue
            if opcode != OP_TEXT:
                continue
            try:
                msg = decode(payload + b"\n")
            except ProtocolError as exc:
                err = Message("ERR", _salvage_ws_id(payload), {"code": "protocol-error", "detail": exc.detail})
                write_frame(sock, OP_TEXT, encode(err).rstrip(b"\n"))
                continue
            try:
                reply = service.handle(msg)
            except Exception as exc:  # noqa: BLE001 - keep the socket alive
                reply = Message("ERR", msg.id, {"code": "internal", "detail": str(exc)})
            write_frame(sock, OP_TEXT, encode(reply).rstrip(b"\n"))
            if msg.type == BYE:
                break
    except (HandshakeError, ProtocolError, ConnectionError, OSError):
        pass
    finally:
        try:
            sock.close()
        except OSError:
            pass


def _salvage_ws_id(payload: bytes) -> int:
    try:
        envelope = json.loads(payload.decode("utf-8", errors="replace"))
        mid = envelope.get("id")
        if isinstance(mid, int) and not isinstance(mid, bool) and mid >= 0:
            return mid
    except (json.JSONDecodeError, AttributeError):
        pass
    return 0


class BridgeServer:
    def __init__(self, hub: SessionHub, host: str, port: int) -> None:
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(8)
        self.host, self.port = self._listener.getsockname()
        self._hub = hub
        self._closing = False
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                client, _ = self._listener.accept()
            except OSError:
                return
            threading.Thread(
                target=_serve_client, args=(client, self._hub), daemon=True
            ).start()

    def close(self) -> None:
        self._closing = True
        try:
            self._listener.close()
        except OSError:
            pass


def serve_websocket_bridge(hub: SessionHub, host: str = "127.0.0.1", port: int = 0) -> BridgeServer:
    return BridgeServer(hub, host, port)
