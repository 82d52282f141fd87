"""The skill centre: equal-weight accumulation of rule packets.

Modules submit their induced rules as packets; the centre pools them by
plain entrywise addition, with no weighting by module or contributor.
Durability is an append-only packet log: the accumulated state is always
exactly the replay of the distinct logged packets, so duplicated or
reordered submissions cannot change it.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .rules import RuleBase, RuleContext, RuleEntry, merge

__all__ = [
    "SkillPacket",
    "SkillCentre",
    "MalformedPacket",
    "CorruptLog",
    "make_packet",
    "merge",
]


class MalformedPacket(ValueError):
    pass


class CorruptLog(ValueError):
    def __init__(self, path: str, lineno: int, detail: str) -> None:
        super().__init__(f"{path}:{lineno}: {detail}")
        self.lineno = lineno


@dataclass(frozen=True)
class SkillPacket:
    packet_id: str
    module_id: str
    shape: int
    rules: RuleBase
    episode_count: int

    def to_dict(self) -> dict:
        return {
            "packet_id": self.packet_id,
            "module_id": self.module_id,
            "shape": self.shape,
            "rules": self.rules.to_dict(),
            "episode_count": self.episode_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SkillPacket":
        try:
            packet = cls(
                packet_id=d["packet_id"],
                module_id=d["module_id"],
                shape=d["shape"],
                rules=RuleBase.from_dict(d["rules"]),
                episode_count=d["episode_count"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedPacket(f"bad packet: {exc}") from exc
        packet.validate()
        return packet

    def validate(self) -> None:
        if not isinstance(self.packet_id, str) or not self.packet_id:
            raise MalformedPacket("packet_id missing")
        if not isinstance(self.module_id, str) or not self.module_id:
            raise MalformedPacket("module_id missing")
        if self.rules.is_empty() or not self.rules.hits:
            raise MalformedPacket("packet carries no rules")
        if self.episode_count < 0:
            raise MalformedPacket("negative episode_count")


def packet_content_id(module_id: str, shape: int, rules: RuleBase, episode_count: int) -> str:
    """Deterministic content hash, so identical submissions dedup without
    any coordination."""
    payload = {
        "module_id": module_id,
        "shape": shape,
        "rules": rules.to_dict(),
        "episode_count": episode_count,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def make_packet(module_id: str, shape: int, rules: RuleBase, episode_count: int) -> SkillPacket:
    packet = SkillPacket(
        packet_id=packet_content_id(module_id, shape, rules, episode_count),
        module_id=module_id,
        shape=shape,
        rules=rules,
        episode_count=episode_count,
    )
    packet.validate()
    return packet


ACCEPTED = "accepted"
DUPLICATE = "duplicate"


class SkillCentre:
    """Accumulated rule base plus the packet log backing it.

    With log_path=None the centre is memory-only (handy in tests); with a
    path, every accepted packet is appended and flushed before it touches
    the in-memory state, so a crash never loses an acknowledged packet.
    """

    def __init__(self, log_path: str | Path | None = None) -> None:
        self.log_path = Path(log_path) if log_path is not None else None
        self.accumulated = RuleBase()
        self.seen: set[str] = set()
        self.packets: list[SkillPacket] = []
        if self.log_path is not None and self.log_path.exists():
            self._replay(self.log_path)

    def _replay(self, path: Path) -> None:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    packet = SkillPacket.from_dict(json.loads(line))
                except (json.JSONDecodeError, MalformedPacket) as exc:
                    raise CorruptLog(str(path), lineno, str(exc)) from exc
                if packet.packet_id in self.seen:
                    continue  # replay is idempotent, like live ingestion
                self._apply(packet)

    def _apply(self, packet: SkillPacket) -> None:
        self.accumulated = self.accumulated.merge(packet.rules)
        self.accumulated.provenance.add(packet.packet_id)
        self.seen.add(packet.packet_id)
        self.packets.append(packet)

    def submit(self, packet: SkillPacket) -> str:
        packet.validate()
        if packet.packet_id in self.seen:
            return DUPLICATE
        if self.log_path is not None:
            line = json.dumps(packet.to_dict(), sort_keys=True, separators=(",", ":"))
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        self._apply(packet)
        return ACCEPTED

    def query(
        self,
        context: RuleContext,
        goal_outcomes: frozenset[str] | set[str] | None = None,
    ) -> list[RuleEntry]:
        return self.accumulated.query(context, goal_outcomes)

    def snapshot(self, path: str | Path) -> None:
        """Write the distinct accepted packets as a packet log; loading it
        replays to an identical centre state."""
        with open(path, "w", encoding="utf-8") as fh:
            for packet in self.packets:
                fh.write(
                    json.dumps(packet.to_dict(), sort_keys=True, separators=(",", ":"))
                    + "\n"
                )

    @classmethod
    def load(cls, path: str | Path) -> "SkillCentre":
        centre = cls(log_path=path)
        return centre
