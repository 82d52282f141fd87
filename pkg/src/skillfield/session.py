"""Single-object interactive training sessions.

A module session wraps a small world containing exactly one hidden object.
Users (human or bot) act tick by tick; the session records every
(percepts, action, outcome) step and groups them into episodes. Nothing a
session emits ever names the object kind, only its shape id.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .world import (
    AGENT_DESTROYED,
    Action,
    Event,
    ObjectKind,
    Percept,
    SHAPE_IDS,
    WorldConfig,
    WorldState,
    create_world,
    sense,
    step,
)

DEFAULT_WORLD_SIZE = 16
DEFAULT_EPISODE_CAP = 120
DEFAULT_SENSING_RADIUS = 8

CAP_REACHED = "cap_reached"
AGENT_LOST = "agent_destroyed"
CLOSED = "closed"


class SessionClosed(Exception):
    pass


@dataclass
class TraceStep:
    tick: int
    percepts: list[Percept]
    action: Action
    events: list[Event]
    attached: bool = False  # was the agent held by a sticker when it acted

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "attached": self.attached,
            "percepts": [p.to_dict() for p in self.percepts],
            "action": self.action.to_dict(),
            "events": [e.to_dict() for e in self.events],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TraceStep":
        return cls(
            tick=d["tick"],
            percepts=[Percept.from_dict(p) for p in d["percepts"]],
            action=Action.from_dict(d["action"]),
            events=[Event.from_dict(e) for e in d["events"]],
            attached=d.get("attached", False),
        )


@dataclass
class Episode:
    episode_id: int
    seed: int
    steps: list[TraceStep] = field(default_factory=list)
    status: str | None = None  # set exactly once, when the episode closes


def _border_cells(width: int, height: int) -> list[tuple[int, int]]:
    cells = [(x, 0) for x in range(width)]
    cells += [(x, height - 1) for x in range(width)]
    cells += [(0, y) for y in range(1, height - 1)]
    cells += [(width - 1, y) for y in range(1, height - 1)]
    return cells


class ModuleSession:
    """One object, one learner, many episodes.

    The object kind is fixed at construction and never exposed through the
    session API. Each episode re-places the object, the agent and the
    target from a derived seed (base seed + episode index), so a session
    replays exactly from (kind, seed).
    """

    def __init__(
        self,
        module_id: str,
        kind: ObjectKind,
        seed: int,
        *,
        world_size: int = DEFAULT_WORLD_SIZE,
        episode_cap: int = DEFAULT_EPISODE_CAP,
        sensing_radius: int = DEFAULT_SENSING_RADIUS,
    ) -> None:
        self.module_id = module_id
        self.session_id = f"{module_id}:{seed}"
        self.seed = seed
        self.world_size = world_size
        self.episode_cap = episode_cap
        self.sensing_radius = sensing_radius
        self._kind = kind
        self.shape = SHAPE_IDS[kind]
        self.episode_index = 0
        self.closed_episodes: list[Episode] = []
        self.current: Episode | None = None
        self.world: WorldState = None  # type: ignore[assignment]
        self._open_episode(0)

    # -- episode lifecycle --

    def _open_episode(self, index: int) -> None:
        ep_seed = self.seed + index
        rng = random.Random(ep_seed)
        size = self.world_size
        obj_pos = (rng.randrange(1, size - 1), rng.randrange(1, size - 1))
        border = _border_cells(size, size)
        agent_start = border[rng.randrange(len(border))]
        # The goal marker stays well away from the trainee object so that
        # conveyor flings land clear of it.
        min_gap = size // 2
        while True:
            target = (rng.randrange(size), rng.randrange(size))
            if target in (obj_pos, agent_start):
                continue
            if max(abs(target[0] - obj_pos[0]), abs(target[1] - obj_pos[1])) >= min_gap:
                break
        config = WorldConfig(
            width=size,
            height=size,
            tick_budget=self.episode_cap,
            sensing_radius=self.sensing_radius,
            object_placements=((self._kind, obj_pos),),
            agent_start=agent_start,
            target_pos=target,
            seed=ep_seed,
        )
        self.world = create_world(config)
        self.episode_index = index
        self.current = Episode(episode_id=index, seed=ep_seed)

    def _finish_episode(self, status: str) -> None:
        assert self.current is not None and self.current.status is None
        self.current.status = status
        self.closed_episodes.append(self.current)
        self.current = None

    # -- public api --

    @property
    def is_open(self) -> bool:
        return self.current is not None

    def percepts(self) -> list[Percept]:
        if self.current is None:
            raise SessionClosed("session is closed")
        return sense(self.world)

    def act(self, action: Action) -> tuple[list[Percept], list[Event]]:
        """Apply one action; returns (post-step percepts, outcome events).

        Death or the episode cap closes the episode and immediately opens
        the next one with a derived seed; the returned percepts then
        describe the fresh episode's starting state.
        """
        if self.current is None:
            raise SessionClosed("session is closed")
        before = sense(self.world)
        attached = self.world.attached_to is not None
        tick = self.world.tick
        events = step(self.world, action)
        self.current.steps.append(TraceStep(tick, before, action, events, attached))
        if any(e.kind == AGENT_DESTROYED for e in events):
            self._finish_episode(AGENT_LOST)
            self._open_episode(self.episode_index + 1)
        elif len(self.current.steps) >= self.episode_cap:
            self._finish_episode(CAP_REACHED)
            self._open_episode(self.episode_index + 1)
        return sense(self.world), events

    def close(self) -> None:
        """Close the open episode (possibly empty) and the session."""
        if self.current is not None:
            self._finish_episode(CLOSED)

    def export_episodes(self) -> list[Episode]:
        return list(self.closed_episodes)


# --- trace files ------------------------------------------------------------
#
# Newline-delimited JSON: one header line per episode followed by one line
# per step. Keys are sorted so identical runs produce identical bytes.


def episodes_to_ndjson(episodes: list[Episode], module_id: str, shape: int) -> str:
    lines = []
    for ep in episodes:
        header = {
            "episode": ep.episode_id,
            "seed": ep.seed,
            "status": ep.status,
            "steps": len(ep.steps),
            "module": module_id,
            "shape": shape,
        }
        lines.append(json.dumps(header, sort_keys=True, separators=(",", ":")))
        for s in ep.steps:
            lines.append(json.dumps(s.to_dict(), sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def ndjson_to_episodes(text: str) -> tuple[dict, list[Episode]]:
    """Parse a trace file; returns (last header metadata, episodes)."""
    episodes: list[Episode] = []
    meta: dict = {}
    current: Episode | None = None
    remaining = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"trace line {lineno}: bad JSON ({exc})") from exc
        if "episode" in record:
            current = Episode(
                episode_id=record["episode"],
                seed=record["seed"],
                status=record["status"],
            )
            episodes.append(current)
            remaining = record["steps"]
            meta = {"module": record.get("module"), "shape": record.get("shape")}
        else:
            if current is None or remaining <= 0:
                raise ValueError(f"trace line {lineno}: step outside an episode")
            current.steps.append(TraceStep.from_dict(record))
            remaining -= 1
    return meta, episodes


def write_trace(path: str, episodes: list[Episode], module_id: str, shape: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(episodes_to_ndjson(episodes, module_id, shape))


def read_trace(path: str) -> tuple[dict, list[Episode]]:
    with open(path, "r", encoding="utf-8") as fh:
        return ndjson_to_episodes(fh.read())
