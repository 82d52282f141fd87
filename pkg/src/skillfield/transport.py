"""Wire protocol between modules, the centre and live session clients.

Frames are one JSON envelope per line: {"body": ..., "id": n, "type": t},
UTF-8, '\\n'-terminated, keys sorted. Every request is answered by exactly
one response carrying the same id. The same message schema is served over
plain TCP here and over a WebSocket bridge (webbridge.py) for browsers.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
from dataclasses import dataclass

from .centre import MalformedPacket, SkillCentre, SkillPacket
from .rules import RuleBase, RuleContext, classify_action, context_of
from .session import ModuleSession, SessionClosed
from .world import Action, ObjectKind

PROTOCOL_VERSION = 1
MAX_FRAME = 8 * 1024 * 1024

HELLO = "HELLO"
SUBMIT = "SUBMIT"
ACK = "ACK"
QUERY = "QUERY"
RULES = "RULES"
OPEN = "OPEN"
STATE = "STATE"
ACT = "ACT"
BYE = "BYE"
ERR = "ERR"

MESSAGE_TYPES = (HELLO, SUBMIT, ACK, QUERY, RULES, OPEN, STATE, ACT, BYE, ERR)


class ProtocolError(Exception):
    def __init__(self, detail: str, offset: int = 0) -> None:
        super().__init__(f"offset {offset}: {detail}")
        self.detail = detail
        self.offset = offset


class CentreUnreachable(Exception):
    pass


@dataclass(frozen=True)
class Message:
    type: str
    id: int
    body: dict


def encode(msg: Message) -> bytes:
    if msg.type not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg.type!r}")
    if not isinstance(msg.id, int) or msg.id < 0:
        raise ProtocolError(f"bad message id {msg.id!r}")
    if not isinstance(msg.body, dict):
        raise ProtocolError("body must be an object")
    envelope = {"body": msg.body, "id": msg.id, "type": msg.type}
    line = json.dumps(envelope, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return line.encode("utf-8") + b"\n"


def decode(data: bytes) -> Message:
    """Parse one frame. Raises ProtocolError (never crashes) on any input."""
    if not isinstance(data, (bytes, bytearray)):
        raise ProtocolError("frame must be bytes")
    frame = bytes(data)
    if frame.endswith(b"\n"):
        frame = frame[:-1]
    if b"\n" in frame:
        raise ProtocolError("embedded newline", offset=frame.index(b"\n"))
    try:
        text = frame.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProtocolError("invalid UTF-8", offset=exc.start) from exc
    try:
        envelope = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(envelope, dict):
        raise ProtocolError("envelope must be an object")
    missing = {"type", "id", "body"} - envelope.keys()
    if missing:
        raise ProtocolError(f"envelope missing {sorted(missing)}")
    mtype = envelope["type"]
    mid = envelope["id"]
    body = envelope["body"]
    if mtype not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {mtype!r}")
    if not isinstance(mid, int) or isinstance(mid, bool) or mid < 0:
        raise ProtocolError("id must be a non-negative integer")
    if not isinstance(body, dict):
        raise ProtocolError("body must be an object")
    return Message(mtype, mid, body)


def _err(request_id: int, code: str, detail: str) -> Message:
    return Message(ERR, request_id, {"code": code, "detail": detail})


# --- session hosting ----------------------------------------------------------


class SessionHub:
    """Shared registry of live sessions for one hosted object kind.

    The TCP listener and the WebSocket bridge both talk to the same hub,
    so a session opened in a browser can be queried over TCP and resumed
    after a reconnect.
    """

    def __init__(
        self,
        kind: ObjectKind,
        default_seed: int,
        *,
        module_id: str = "module",
        world_size: int = 16,
        episode_cap: int = 120,
    ) -> None:
        self.kind = kind
        self.default_seed = default_seed
        self.module_id = module_id
        self.world_size = world_size
        self.episode_cap = episode_cap
        self.lock = threading.RLock()
        self.sessions: dict[str, ModuleSession] = {}
        self.live_rules: dict[str, RuleBase] = {}
        self._counter = 0

    def open_new(self, seed: int | None) -> str:
        with self.lock:
            key = f"s{self._counter}"
            self._counter += 1
            self.sessions[key] = ModuleSession(
                self.module_id,
                self.kind,
                self.default_seed if seed is None else seed,
                world_size=self.world_size,
                episode_cap=self.episode_cap,
            )
            self.live_rules[key] = RuleBase()
            return key

    def get(self, key: str) -> ModuleSession:
        with self.lock:
            if key not in self.sessions:
                raise KeyError(key)
            return self.sessions[key]

    def act(self, key: str, action: Action) -> list:
        """Step the session and fold the new step into its live rule base."""
        with self.lock:
            session = self.get(key)
            before = session.percepts()
            attached = session.world.attached_to is not None
            tick = session.world.tick
            _, events = session.act(action)
            ctx = context_of(before, attached)
            action_class = classify_action(action, before)
            outcomes: list[str] = []
            for ev in events:
                if ev.kind not in outcomes:
                    outcomes.append(ev.kind)
            self.live_rules[key].add_observation(ctx, action_class, outcomes)
            del tick
            return events

    def close(self, key: str) -> None:
        with self.lock:
            if key in self.sessions:
                self.sessions[key].close()

    def state_body(self, key: str, events: list) -> dict:
        with self.lock:
            session = self.get(key)
            world = session.world
            percepts = session.percepts()
            visible_ids = {p.object_id for p in percepts}
            return {
                "session": key,
                "episode": session.episode_index,
                "tick": world.tick,
                "percepts": [p.to_dict() for p in percepts],
                "events": [e.to_dict() for e in events],
                "view": {
                    "width": world.config.width,
                    "height": world.config.height,
                    "agent": list(world.agent_pos),
                    "target": list(world.config.target_pos),
                    "power": world.agent_power,
                    "attached": world.attached_to is not None,
                    "alive": world.agent_alive,
                    "objects": [
                        {
                            "id": oid,
                            "shape": obj.shape,
                            "pos": list(obj.pos),
                        }
                        for oid, obj in sorted(world.objects.items())
                        if oid in visible_ids
                    ],
                },
            }

    def rules_body(self, key: str, context: RuleContext | None, goals: set[str] | None) -> dict:
        with self.lock:
            session = self.get(key)
            if context is None:
                context = context_of(
                    session.percepts(), session.world.attached_to is not None
                )
            entries = self.live_rules[key].query(context, goals)
            return {
                "context": context.to_dict(),
                "entries": [
                    {
                        "action": e.action,
                        "outcome": e.outcome,
                        "confidence": e.confidence,
                        "support": e.support,
                    }
                    for e in entries
                ],
            }


class SessionService:
    """Per-connection request handler for live session play."""

    def __init__(self, hub: SessionHub, server_name: str = "play") -> None:
        self.hub = hub
        self.server_name = server_name
        self.current: str | None = None

    def handle(self, msg: Message) -> Message:
        if msg.type == HELLO:
            version = msg.body.get("protocol_version")
            if version != PROTOCOL_VERSION:
                return _err(msg.id, "unsupported-version", f"server speaks {PROTOCOL_VERSION}")
            return Message(
                HELLO,
                msg.id,
                {"module_id": self.server_name, "protocol_version": PROTOCOL_VERSION},
            )
        if msg.type == OPEN:
            token = msg.body.get("token")
            if token is not None:
                try:
                    self.hub.get(token)
                except KeyError:
                    return _err(msg.id, "no-session", f"unknown session {token!r}")
                self.current = token
                return Message(STATE, msg.id, self.hub.state_body(token, []))
            seed = msg.body.get("seed")
            self.current = self.hub.open_new(seed)
            return Message(STATE, msg.id, self.hub.state_body(self.current, []))
        if msg.type == ACT:
            if self.current is None:
                return _err(msg.id, "no-session", "OPEN a session first")
            try:
                action = Action.from_dict(msg.body["action"])
            except (KeyError, TypeError, ValueError) as exc:
                return _err(msg.id, "bad-request", f"bad action: {exc}")
            try:
                events = self.hub.act(self.current, action)
            except SessionClosed:
                return _err(msg.id, "session-closed", "session is closed")
            return Message(STATE, msg.id, self.hub.state_body(self.current, events))
        if msg.type == QUERY:
            if self.current is None:
                return _err(msg.id, "no-session", "OPEN a session first")
            try:
                raw_ctx = msg.body.get("context")
                context = RuleContext.from_dict(raw_ctx) if raw_ctx is not None else None
                raw_goals = msg.body.get("goal_outcomes")
                goals = set(raw_goals) if raw_goals is not None else None
            except (KeyError, TypeError, ValueError) as exc:
                return _err(msg.id, "bad-request", f"bad query: {exc}")
            return Message(RULES, msg.id, self.hub.rules_body(self.current, context, goals))
        if msg.type == BYE:
            if self.current is not None:
                self.hub.close(self.current)
                self.current = None
            return Message(BYE, msg.id, {})
        return _err(msg.id, "unknown-type", f"cannot serve {msg.type}")


class CentreService:
    """Per-connection request handler backed by the shared centre."""

    def __init__(self, centre: SkillCentre, lock: threading.Lock, server_name: str = "centre") -> None:
        self.centre = centre
        self.lock = lock
        self.server_name = server_name

    def handle(self, msg: Message) -> Message:
        if msg.type == HELLO:
            version = msg.body.get("protocol_version")
            if version != PROTOCOL_VERSION:
                return _err(msg.id, "unsupported-version", f"server speaks {PROTOCOL_VERSION}")
            return Message(
                HELLO,
                msg.id,
                {"module_id": self.server_name, "protocol_version": PROTOCOL_VERSION},
            )
        if msg.type == SUBMIT:
            try:
                packet = SkillPacket.from_dict(msg.body["packet"])
            except (KeyError, TypeError, MalformedPacket) as exc:
                return _err(msg.id, "malformed-packet", str(exc))
            try:
                with self.lock:
                    status = self.centre.submit(packet)
            except OSError as exc:
                return _err(msg.id, "log-failure", f"packet not accepted: {exc}")
            return Message(ACK, msg.id, {"packet_id": packet.packet_id, "status": status})
        if msg.type == QUERY:
            try:
                context = RuleContext.from_dict(msg.body["context"])
                raw_goals = msg.body.get("goal_outcomes")
                goals = set(raw_goals) if raw_goals is not None else None
            except (KeyError, TypeError, ValueError) as exc:
                return _err(msg.id, "bad-request", f"bad query: {exc}")
            entries = self.centre.query(context, goals)
            return Message(
                RULES,
                msg.id,
                {
                    "context": context.to_dict(),
                    "entries": [
                        {
                            "action": e.action,
                            "outcome": e.outcome,
                            "confidence": e.confidence,
                            "support": e.support,
                        }
                        for e in entries
                    ],
                },
            )
        if msg.type == BYE:
            return Message(BYE, msg.id, {})
        return _err(msg.id, "unknown-type", f"cannot serve {msg.type}")


# --- TCP plumbing -------------------------------------------------------------


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:  # pragma: no cover - exercised via sockets
        service = self.server.make_service()  # type: ignore[attr-defined]
        try:
            while True:
                line = self.rfile.readline(MAX_FRAME)
                if not line:
                    break
                if not line.endswith(b"\n") and len(line) >= MAX_FRAME:
                    self._drain_to_newline()
                    self.wfile.write(encode(_err(0, "frame-too-long", "resyncing")))
                    continue
                try:
                    msg = decode(line)
                except ProtocolError as exc:
                    self.wfile.write(
                        encode(_err(_salvage_id(line), "protocol-error", exc.detail))
                    )
                    continue
                try:
                    reply = service.handle(msg)
                except Exception as exc:  # noqa: BLE001 - connection must survive
                    reply = _err(msg.id, "internal", f"{type(exc).__name__}: {exc}")
                self.wfile.write(encode(reply))
                if msg.type == BYE:
                    break
        except (ConnectionError, BrokenPipeError, OSError):
            pass

    def _drain_to_newline(self) -> None:
        while True:
            chunk = self.rfile.readline(MAX_FRAME)
            if not chunk or chunk.endswith(b"\n"):
                return


def _salvage_id(line: bytes) -> int:
    try:
        envelope = json.loads(line.decode("utf-8", errors="replace"))
        mid = envelope.get("id")
        if isinstance(mid, int) and not isinstance(mid, bool) and mid >= 0:
            return mid
    except (json.JSONDecodeError, AttributeError):
        pass
    return 0


class _Server(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr: tuple[str, int], make_service) -> None:
        super().__init__(addr, _Handler)
        self.make_service = make_service


def serve_centre(centre: SkillCentre, host: str = "127.0.0.1", port: int = 0) -> _Server:
    lock = threading.Lock()
    return _Server((host, port), lambda: CentreService(centre, lock))


def serve_sessions(hub: SessionHub, host: str = "127.0.0.1", port: int = 0) -> _Server:
    return _Server((host, port), lambda: SessionService(hub))


def start_in_thread(server: _Server) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread


# --- client side --------------------------------------------------------------


class Connection:
    """Blocking request/response client for the line protocol."""

    def __init__(self, host: str, port: int, timeout: float = 10.0) -> None:
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise CentreUnreachable(f"cannot reach {host}:{port}: {exc}") from exc
        self.rfile = self.sock.makefile("rb")
        self._next_id = 0

    def __enter__(self) -> "Connection":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        try:
            self.rfile.close()
            self.sock.close()
        except OSError:
            pass

    def send(self, msg: Message) -> None:
        self.sock.sendall(encode(msg))

    def recv(self) -> Message:
        line = self.rfile.readline(MAX_FRAME)
        if not line:
            raise ProtocolError("connection closed")
        return decode(line)

    def request(self, mtype: str, body: dict) -> Message:
        mid = self._next_id
        self._next_id += 1
        self.send(Message(mtype, mid, body))
        reply = self.recv()
        if reply.id != mid:
            raise ProtocolError(f"response id {reply.id} does not match request {mid}")
        return reply

    def hello(self, module_id: str) -> Message:
        return self.request(
            HELLO, {"module_id": module_id, "protocol_version": PROTOCOL_VERSION}
        )


def parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must be host:port, got {addr!r}")
    return host, int(port)
