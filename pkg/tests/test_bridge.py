"""WebSocket bridge: the browser-facing transport speaks the same schema."""

import base64
import hashlib
import json
import os
import socket
import struct

import pytest

from skillfield.transport import SessionHub
from skillfield.webbridge import serve_websocket_bridge
from skillfield.world import ObjectKind


class WsClient:
    """Tiny RFC 6455 client, just enough for the tests."""

    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port), timeout=10)
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        self.sock.sendall(
            (
                f"GET / HTTP/1.1\r\nHost: {host}:{port}\r\n"
                "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
            ).encode("latin-1")
        )
        response = b""
        while b"\r\n\r\n" not in response:
            response += self.sock.recv(4096)
        assert b"101" in response.split(b"\r\n", 1)[0]
        expected = base64.b64encode(
            hashlib.sha1((key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11").encode()).digest()
        )
        assert expected in response
        self._next_id = 0

    def _read_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise ConnectionError("closed")
            buf += chunk
        return buf

    def send_text(self, payload: bytes) -> None:
        mask = os.urandom(4)
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        n = len(payload)
        if n < 126:
            header = bytes([0x81, 0x80 | n])
        else:
            header = bytes([0x81, 0x80 | 126]) + struct.pack("!H", n)
        self.sock.sendall(header + mask + masked)

    def recv_text(self) -> bytes:
        op_byte, len_byte = self._read_exact(2)
        length = len_byte & 0x7F
        if length == 126:
            (length,) = struct.unpack("!H", self._read_exact(2))
        elif length == 127:
            (length,) = struct.unpack("!Q", self._read_exact(8))
        payload = self._read_exact(length)
        assert op_byte & 0x0F in (0x1, 0x8)
        return payload

    def request(self, mtype: str, body: dict) -> dict:
        mid = self._next_id
        self._next_id += 1
        self.send_text(
            json.dumps({"body": body, "id": mid, "type": mtype}).encode("utf-8")
        )
        reply = json.loads(self.recv_text())
        assert reply["id"] == mid
        return reply

    def close(self):
        self.sock.close()


@pytest.fixture()
def bridge():
    hub = SessionHub(ObjectKind.POWER_SUPPLY, default_seed=11)
    server = serve_websocket_bridge(hub)
    yield hub, server
    server.close()


def test_open_act_over_websocket(bridge):
    hub, server = bridge
    client = WsClient(server.host, server.port)
    try:
        state = client.request("OPEN", {"token": None, "seed": 21})
        assert state["type"] == "STATE"
        assert state["body"]["tick"] == 0
        after = client.request("ACT", {"action": {"kind": "move", "direction": "N"}})
        assert after["type"] == "STATE"
        assert after["body"]["tick"] == 1
    finally:
        client.close()


def test_websocket_and_tcp_share_the_hub(bridge):
    hub, server = bridge
    client = WsClient(server.host, server.port)
    try:
        state = client.request("OPEN", {"token": None, "seed": 31})
        key = state["body"]["session"]
        client.request("ACT", {"action": {"kind": "wait"}})
        assert hub.sessions[key].world.tick == 1
    finally:
        client.close()


def test_bad_frame_yields_protocol_error(bridge):
    _, server = bridge
    client = WsClient(server.host, server.port)
    try:
        client.send_text(b"this is not json")
        reply = json.loads(client.recv_text())
        assert reply["type"] == "ERR"
        assert reply["body"]["code"] == "protocol-error"
        # and the connection still works afterwards
        state = client.request("OPEN", {"token": None, "seed": 5})
        assert state["type"] == "STATE"
    finally:
        client.close()


def test_rules_panel_query_over_websocket(bridge):
    _, server = bridge
    client = WsClient(server.host, server.port)
    try:
        client.request("OPEN", {"token": None, "seed": 41})
        client.request("ACT", {"action": {"kind": "wait"}})
        reply = client.request("QUERY", {"context": None, "goal_outcomes": None})
        assert reply["type"] == "RULES"
        assert isinstance(reply["body"]["entries"], list)
    finally:
        client.close()
