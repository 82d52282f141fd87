"""Deterministic grid world for the minefield navigation task.

A rectangular field holds one agent, one target cell and a set of
stationary unidentified objects. Every object hides a small reactive
automaton (destroyer, sticker, power supply, conveyor); the agent only
ever observes shape ids, distances, bearings and alignments. All
dynamics are deterministic functions of state, so any run can be
replayed bit-identically from its config and action sequence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum

Cell = tuple[int, int]

# --- geometry ---------------------------------------------------------------

# Canonical direction order; also the tie-break order used by the solver.
DIRECTIONS: tuple[str, ...] = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")

# +x is east, +y is north.
DIR_VECTORS: dict[str, Cell] = {
    "N": (0, 1),
    "NE": (1, 1),
    "E": (1, 0),
    "SE": (1, -1),
    "S": (0, -1),
    "SW": (-1, -1),
    "W": (-1, 0),
    "NW": (-1, 1),
}

_OCTANT_BY_SECTOR = ("E", "NE", "N", "NW", "W", "SW", "S", "SE")


def chebyshev(dx: int, dy: int) -> int:
    return max(abs(dx), abs(dy))


def bearing_octant(dx: int, dy: int) -> str:
    """Octant containing the offset vector (sector boundaries at 22.5°).

    Integer offsets never fall on a boundary (its tangent is irrational),
    so rounding the angle is exact.
    """
    if dx == 0 and dy == 0:
        raise ValueError("octant of zero offset is undefined")
    sector = round(math.atan2(dy, dx) / (math.pi / 4)) % 8
    return _OCTANT_BY_SECTOR[sector]


def alignment_of(dx: int, dy: int) -> str:
    if dy == 0:
        return "axis_h"
    if dx == 0:
        return "axis_v"
    if abs(dx) == abs(dy):
        return "diagonal"
    return "none"


def rotate_cw(direction: str) -> str:
    """Direction rotated 90° clockwise (N -> E -> S -> W)."""
    return DIRECTIONS[(DIRECTIONS.index(direction) + 2) % 8]


def octant_steps(a: str, b: str) -> int:
    """Angular distance between two octants, in 45° steps (0..4)."""
    d = abs(DIRECTIONS.index(a) - DIRECTIONS.index(b)) % 8
    return min(d, 8 - d)


# --- object catalog ---------------------------------------------------------


class ObjectKind(str, Enum):
    DESTROYER = "destroyer"
    STICKER = "sticker"
    POWER_SUPPLY = "power_supply"
    CONVEYOR = "conveyor"


# Shapes are honest (one shape per kind) but carry no meaning for a learner.
SHAPE_IDS: dict[ObjectKind, int] = {
    ObjectKind.DESTROYER: 1,
    ObjectKind.STICKER: 2,
    ObjectKind.POWER_SUPPLY: 3,
    ObjectKind.CONVEYOR: 4,
}

# Default behavior constants. The destroyer is lethal only along the grid
# axes and can only be shot from an exact diagonal; the asymmetry between
# the two ranges is what makes the skill non-obvious.
DESTROYER_KILL_RANGE = 4
DESTROYER_FIRE_RANGE = 3
STICKER_RELEASE_PRESSES = 2
STICKER_REATTACH_IMMUNITY = 3
POWER_CHARGES = 3
POWER_TOUCH_TICKS = 2
POWER_RECHARGE_TICKS = 1
CONVEY_DISTANCE = 6
CONVEY_COOLDOWN = 10
MAX_SPEED_BONUS = 2


# --- events, actions, percepts ----------------------------------------------

OBJECT_DESTROYED = "object_destroyed"
AGENT_DESTROYED = "agent_destroyed"
ATTACHED = "attached"
RELEASED = "released"
POWER_GAINED = "power_gained"
CHARGING = "charging"
CONVEYED = "conveyed"
MOVED = "moved"
BLOCKED = "blocked"
NO_EFFECT = "no_effect"

EVENT_KINDS = (
    OBJECT_DESTROYED,
    AGENT_DESTROYED,
    ATTACHED,
    RELEASED,
    POWER_GAINED,
    CHARGING,
    CONVEYED,
    MOVED,
    BLOCKED,
    NO_EFFECT,
)


@dataclass(frozen=True)
class Event:
    kind: str
    object_id: int | None = None
    cells: int | None = None

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.object_id is not None:
            d["object_id"] = self.object_id
        if self.cells is not None:
            d["cells"] = self.cells
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        return cls(d["kind"], d.get("object_id"), d.get("cells"))


@dataclass(frozen=True)
class Action:
    kind: str  # "move" | "fire" | "touch" | "pushpull" | "wait"
    direction: str | None = None

    def __post_init__(self) -> None:
        if self.kind == "move":
            if self.direction not in DIRECTIONS:
                raise ValueError(f"move needs a direction, got {self.direction!r}")
        elif self.kind in ("fire", "touch", "pushpull", "wait"):
            if self.direction is not None:
                raise ValueError(f"{self.kind} takes no direction")
        else:
            raise ValueError(f"unknown action kind {self.kind!r}")

    @classmethod
    def move(cls, direction: str) -> "Action":
        return cls("move", direction)

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.direction is not None:
            d["direction"] = self.direction
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Action":
        return cls(d["kind"], d.get("direction"))


FIRE = Action("fire")
TOUCH = Action("touch")
PUSHPULL = Action("pushpull")
WAIT = Action("wait")

# The 12 concrete actions available every tick.
ALL_ACTIONS: tuple[Action, ...] = tuple(Action.move(d) for d in DIRECTIONS) + (
    FIRE,
    TOUCH,
    PUSHPULL,
    WAIT,
)


@dataclass(frozen=True)
class Percept:
    """What the agent senses about one in-range object."""

    object_id: int
    shape: int
    distance: int
    octant: str
    alignment: str

    def to_dict(self) -> dict:
        return {
            "id": self.object_id,
            "shape": self.shape,
            "distance": self.distance,
            "octant": self.octant,
            "alignment": self.alignment,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Percept":
        return cls(d["id"], d["shape"], d["distance"], d["octant"], d["alignment"])


# --- world state ------------------------------------------------------------


class WorldError(Exception):
    pass


class WorldConfigError(WorldError):
    pass


class ContractViolation(WorldError):
    """An operation was called outside its stated precondition."""


@dataclass(frozen=True)
class WorldConfig:
    width: int
    height: int
    tick_budget: int
    sensing_radius: int
    object_placements: tuple[tuple[ObjectKind, Cell], ...]
    agent_start: Cell
    target_pos: Cell
    seed: int

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def validate(self) -> None:
        if self.width < 8 or self.height < 8:
            raise WorldConfigError(f"field too small: {self.width}x{self.height}")
        if self.tick_budget < 1:
            raise WorldConfigError("tick_budget must be >= 1")
        if self.sensing_radius < 1:
            raise WorldConfigError("sensing_radius must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise WorldConfigError("seed must fit in 64 unsigned bits")
        if not self.in_bounds(self.agent_start):
            raise WorldConfigError(f"agent_start {self.agent_start} out of bounds")
        if not self.in_bounds(self.target_pos):
            raise WorldConfigError(f"target_pos {self.target_pos} out of bounds")
        if self.agent_start == self.target_pos:
            raise WorldConfigError("agent_start equals target_pos")
        seen: dict[Cell, int] = {}
        for i, (kind, pos) in enumerate(self.object_placements):
            if not isinstance(kind, ObjectKind):
                raise WorldConfigError(f"object {i}: unknown kind {kind!r}")
            if not self.in_bounds(pos):
                raise WorldConfigError(f"object {i} at {pos} out of bounds")
            if pos in seen:
                raise WorldConfigError(
                    f"objects {seen[pos]} and {i} share cell {pos}"
                )
            if pos == self.agent_start:
                raise WorldConfigError(f"object {i} on agent_start {pos}")
            if pos == self.target_pos:
                raise WorldConfigError(f"object {i} on target_pos {pos}")
            seen[pos] = i

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "tick_budget": self.tick_budget,
            "sensing_radius": self.sensing_radius,
            "object_placements": [
                [kind.value, list(pos)] for kind, pos in self.object_placements
            ],
            "agent_start": list(self.agent_start),
            "target_pos": list(self.target_pos),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldConfig":
        return cls(
            width=d["width"],
            height=d["height"],
            tick_budget=d["tick_budget"],
            sensing_radius=d["sensing_radius"],
            object_placements=tuple(
                (ObjectKind(k), (p[0], p[1])) for k, p in d["object_placements"]
            ),
            agent_start=tuple(d["agent_start"]),  # type: ignore[arg-type]
            target_pos=tuple(d["target_pos"]),  # type: ignore[arg-type]
            seed=d["seed"],
        )


@dataclass
class BehaviorState:
    """Hidden per-object counters. Which fields matter depends on the kind."""

    attach_cooldown: int = 0
    push_streak: int = 0
    charges_left: int = 0
    touch_streak: int = 0
    recharge: int = 0
    cooldown: int = 0

    def to_dict(self) -> dict:
        return {
            "attach_cooldown": self.attach_cooldown,
            "push_streak": self.push_streak,
            "charges_left": self.charges_left,
            "touch_streak": self.touch_streak,
            "recharge": self.recharge,
            "cooldown": self.cooldown,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BehaviorState":
        return cls(**d)


def initial_behavior(kind: ObjectKind) -> BehaviorState:
    if kind is ObjectKind.POWER_SUPPLY:
        return BehaviorState(charges_left=POWER_CHARGES)
    return BehaviorState()


@dataclass
class WorldObject:
    kind: ObjectKind
    pos: Cell
    behavior: BehaviorState

    @property
    def shape(self) -> int:
        return SHAPE_IDS[self.kind]


@dataclass
class WorldState:
    config: WorldConfig
    tick: int
    agent_pos: Cell
    agent_power: int
    attached_to: int | None
    agent_alive: bool
    objects: dict[int, WorldObject]
    rng_state: int  # reserved; the default automata are all deterministic

    def clone(self) -> "WorldState":
        return WorldState(
            config=self.config,
            tick=self.tick,
            agent_pos=self.agent_pos,
            agent_power=self.agent_power,
            attached_to=self.attached_to,
            agent_alive=self.agent_alive,
            objects={
                oid: WorldObject(o.kind, o.pos, replace(o.behavior))
                for oid, o in self.objects.items()
            },
            rng_state=self.rng_state,
        )

    def occupied(self) -> set[Cell]:
        return {o.pos for o in self.objects.values()}

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "tick": self.tick,
            "agent": {
                "pos": list(self.agent_pos),
                "power": self.agent_power,
                "attached_to": self.attached_to,
                "alive": self.agent_alive,
            },
            "objects": {
                str(oid): {
                    "kind": o.kind.value,
                    "pos": list(o.pos),
                    "state": o.behavior.to_dict(),
                }
                for oid, o in sorted(self.objects.items())
            },
            "rng_state": self.rng_state,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldState":
        agent = d["agent"]
        return cls(
            config=WorldConfig.from_dict(d["config"]),
            tick=d["tick"],
            agent_pos=tuple(agent["pos"]),  # type: ignore[arg-type]
            agent_power=agent["power"],
            attached_to=agent["attached_to"],
            agent_alive=agent["alive"],
            objects={
                int(oid): WorldObject(
                    ObjectKind(o["kind"]),
                    (o["pos"][0], o["pos"][1]),
                    BehaviorState.from_dict(o["state"]),
                )
                for oid, o in d["objects"].items()
            },
            rng_state=d["rng_state"],
        )


def canonical_json(obj: object) -> str:
    """Canonical serialization: sorted keys, no whitespace, ASCII-safe."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def create_world(config: WorldConfig) -> WorldState:
    config.validate()
    objects = {
        oid: WorldObject(kind, pos, initial_behavior(kind))
        for oid, (kind, pos) in enumerate(config.object_placements)
    }
    return WorldState(
        config=config,
        tick=0,
        agent_pos=config.agent_start,
        agent_power=0,
        attached_to=None,
        agent_alive=True,
        objects=objects,
        rng_state=config.seed,
    )


# --- dynamics ---------------------------------------------------------------


def resolve_object_reaction(
    kind: ObjectKind,
    state: BehaviorState,
    offset: Cell,
    agent_attached: bool,
    action: Action,
) -> tuple[BehaviorState, list[Event]]:
    """One object's automaton for one tick.

    `offset` is object position minus agent position after the agent's own
    movement resolved. `agent_attached` means attached to *this* object.
    Pure function: returns the successor counters and the events the object
    contributes. Conveyed events come back without a displacement; the world
    step performs the actual walk and fills it in (or drops the event if the
    agent cannot move at all).
    """
    dx, dy = offset
    dist = chebyshev(dx, dy)
    align = alignment_of(dx, dy) if dist > 0 else "none"
    st = replace(state)
    events: list[Event] = []

    if kind is ObjectKind.DESTROYER:
        if action.kind == "fire" and align == "diagonal" and dist <= DESTROYER_FIRE_RANGE:
            events.append(Event(OBJECT_DESTROYED))
        elif align in ("axis_h", "axis_v") and dist <= DESTROYER_KILL_RANGE:
            events.append(Event(AGENT_DESTROYED))

    elif kind is ObjectKind.STICKER:
        if st.attach_cooldown > 0:
            st.attach_cooldown -= 1
        if agent_attached:
            if action.kind == "pushpull":
                st.push_streak += 1
                if st.push_streak >= STICKER_RELEASE_PRESSES:
                    st.push_streak = 0
                    st.attach_cooldown = STICKER_REATTACH_IMMUNITY
                    events.append(Event(RELEASED))
            else:
                st.push_streak = 0
        else:
            st.push_streak = 0
            if dist == 1 and st.attach_cooldown == 0:
                events.append(Event(ATTACHED))

    elif kind is ObjectKind.POWER_SUPPLY:
        if st.recharge > 0:
            st.recharge -= 1
        if dist == 1 and action.kind == "touch" and st.charges_left > 0:
            st.touch_streak += 1
            if st.touch_streak >= POWER_TOUCH_TICKS and st.recharge == 0:
                st.touch_streak = 0
                st.charges_left -= 1
                st.recharge = POWER_RECHARGE_TICKS
                events.append(Event(POWER_GAINED))
                if st.charges_left == 0:
                    # A drained supply is spent and fades from the field.
                    events.append(Event(OBJECT_DESTROYED))
            else:
                events.append(Event(CHARGING))
        else:
            st.touch_streak = 0

    elif kind is ObjectKind.CONVEYOR:
        if st.cooldown > 0:
            st.cooldown -= 1
        # The two tips are the cells directly east and west of the conveyor.
        if (
            action.kind == "touch"
            and dist == 1
            and align == "axis_h"
            and st.cooldown == 0
        ):
            st.cooldown = CONVEY_COOLDOWN
            events.append(Event(CONVEYED))

    return st, events


def _walk(world: WorldState, direction: str, max_cells: int) -> int:
    """Move the agent up to max_cells along direction.

    Stops before out-of-bounds or occupied cells and halts upon entering
    the target cell. Returns the number of cells actually moved.
    """
    vec = DIR_VECTORS[direction]
    occupied = world.occupied()
    pos = world.agent_pos
    moved = 0
    for _ in range(max_cells):
        nxt = (pos[0] + vec[0], pos[1] + vec[1])
        if not world.config.in_bounds(nxt) or nxt in occupied:
            break
        pos = nxt
        moved += 1
        if pos == world.config.target_pos:
            break
    world.agent_pos = pos
    return moved


def _convey_walk(world: WorldState) -> int:
    """Greedy straight-line walk toward the target, up to CONVEY_DISTANCE.

    Each step decreases the Chebyshev distance to the target by exactly 1;
    the walk stops at the target or before any occupied cell.
    """
    occupied = world.occupied()
    tx, ty = world.config.target_pos
    pos = world.agent_pos
    moved = 0
    for _ in range(CONVEY_DISTANCE):
        if pos == (tx, ty):
            break
        step_vec = (
            (tx > pos[0]) - (tx < pos[0]),
            (ty > pos[1]) - (ty < pos[1]),
        )
        nxt = (pos[0] + step_vec[0], pos[1] + step_vec[1])
        if not world.config.in_bounds(nxt) or nxt in occupied:
            break
        pos = nxt
        moved += 1
    world.agent_pos = pos
    return moved


def agent_speed(power: int) -> int:
    return 1 + min(power, MAX_SPEED_BONUS)


def step(world: WorldState, action: Action) -> list[Event]:
    """Advance the world one tick under `action`, mutating `world`.

    Resolution order: agent movement, then each object's automaton in
    ascending id order, then the destroyers' end-of-tick axis-kill check
    against the agent's final position. Every tick yields at least one
    event. Deterministic: equal (state, action) gives equal (state', events).
    """
    if not world.agent_alive:
        raise ContractViolation("cannot step a dead-agent world")
    if world.tick >= world.config.tick_budget:
        raise ContractViolation("tick budget exhausted")

    events: list[Event] = []

    if action.kind == "move":
        direction = action.direction
        assert direction is not None
        if world.attached_to is not None:
            # A sticker diverts control: moves land 90° clockwise of intent.
            direction = rotate_cw(direction)
        moved = _walk(world, direction, agent_speed(world.agent_power))
        events.append(Event(MOVED) if moved > 0 else Event(BLOCKED))

    destroyed: list[int] = []
    for oid in sorted(world.objects):
        obj = world.objects[oid]
        offset = (obj.pos[0] - world.agent_pos[0], obj.pos[1] - world.agent_pos[1])
        new_state, reactions = resolve_object_reaction(
            obj.kind, obj.behavior, offset, world.attached_to == oid, action
        )
        obj.behavior = new_state
        for ev in reactions:
            if ev.kind == AGENT_DESTROYED:
                continue  # provisional; re-evaluated at end of tick
            if ev.kind == ATTACHED:
                if world.attached_to is not None:
                    continue  # already held by another sticker
                world.attached_to = oid
            elif ev.kind == RELEASED:
                world.attached_to = None
            elif ev.kind == POWER_GAINED:
                world.agent_power += 1
            elif ev.kind == OBJECT_DESTROYED:
                destroyed.append(oid)
            elif ev.kind == CONVEYED:
                cells = _convey_walk(world)
                if cells == 0:
                    continue
                ev = Event(CONVEYED, cells=cells)
            events.append(replace(ev, object_id=oid))

    for oid in destroyed:
        if world.attached_to == oid:
            world.attached_to = None
        del world.objects[oid]

    # End-of-tick axis-kill: only live destroyers, only the final position.
    for oid in sorted(world.objects):
        obj = world.objects[oid]
        if obj.kind is not ObjectKind.DESTROYER:
            continue
        dx = obj.pos[0] - world.agent_pos[0]
        dy = obj.pos[1] - world.agent_pos[1]
        if (
            alignment_of(dx, dy) in ("axis_h", "axis_v")
            and chebyshev(dx, dy) <= DESTROYER_KILL_RANGE
        ):
            world.agent_alive = False
            events.append(Event(AGENT_DESTROYED, object_id=oid))
            break

    world.tick += 1
    if not events:
        events.append(Event(NO_EFFECT))
    return events


def sense(world: WorldState) -> list[Percept]:
    """Percepts for every object within sensing radius, nearest first."""
    if not world.agent_alive:
        raise ContractViolation("cannot sense from a dead-agent world")
    ax, ay = world.agent_pos
    found: list[Percept] = []
    for oid in sorted(world.objects):
        obj = world.objects[oid]
        dx, dy = obj.pos[0] - ax, obj.pos[1] - ay
        dist = chebyshev(dx, dy)
        if dist > world.config.sensing_radius:
            continue
        found.append(
            Percept(oid, obj.shape, dist, bearing_octant(dx, dy), alignment_of(dx, dy))
        )
    found.sort(key=lambda p: (p.distance, p.object_id))
    return found


def replay(config: WorldConfig, actions: list[Action]) -> tuple[WorldState, list[list[Event]]]:
    """Run an action sequence from scratch; stops early if the agent dies."""
    world = create_world(config)
    log: list[list[Event]] = []
    for action in actions:
        if not world.agent_alive or world.tick >= config.tick_budget:
            break
        log.append(step(world, action))
    return world, log
