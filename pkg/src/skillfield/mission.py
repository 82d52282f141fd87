"""Full-field missions solved with accumulated rules only.

The solver never sees object kinds or hidden counters: it works from
shapes, offsets and whatever the rule base says about contexts. Decision
procedure per tick: release-rule persistence while attached, then a danger
filter that refuses to enter contexts the rules call lethal, then
opportunistic execution of a useful rule on the nearest object, then a
greedy step toward the target.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from .rules import (
    MOVE_AWAY,
    MOVE_ORTHOGONAL,
    MOVE_TOWARD,
    RuleBase,
    RuleContext,
    RuleEntry,
    context_of,
    distance_bucket,
)
from .world import (
    AGENT_DESTROYED,
    ATTACHED,
    CONVEY_DISTANCE,
    CONVEYED,
    DIRECTIONS,
    DIR_VECTORS,
    OBJECT_DESTROYED,
    POWER_GAINED,
    RELEASED,
    Action,
    ObjectKind,
    WorldConfig,
    WorldState,
    agent_speed,
    alignment_of,
    chebyshev,
    create_world,
    sense,
    step,
)

RISK_THRESHOLD = 0.2
USEFULNESS_THRESHOLD = 0.3
PERSISTENCE_TICKS = 4
USEFUL_MISSION_OUTCOMES = frozenset({OBJECT_DESTROYED, POWER_GAINED, CONVEYED})

# A static field never un-forbids anything, so an agent cornered against
# danger walls (typically pinned by a sticker next to them, or bouncing
# between the few allowed cells of a pocket) would spend the whole budget
# going nowhere. When its recent footprint is that small, it escapes along
# the least-risky direction and keeps going for a few ticks so the greedy
# step cannot immediately pull it back in; near-certain kills stay off
# limits throughout.
STALL_WINDOW = 12
STALL_DISTINCT = 5
ESCAPE_TICKS = 3
DESPERATION_CEILING = 0.9

REACHED = "reached"
DESTROYED = "destroyed"
TIMEOUT = "timeout"

DEFAULT_MIX = {
    ObjectKind.DESTROYER: 40,
    ObjectKind.STICKER: 40,
    ObjectKind.POWER_SUPPLY: 25,
    ObjectKind.CONVEYOR: 15,
}


@dataclass(frozen=True)
class MissionConfig:
    placement_seed: int
    width: int = 48
    height: int = 48
    tick_budget: int = 600
    sensing_radius: int = 8
    counts: tuple[tuple[ObjectKind, int], ...] = tuple(DEFAULT_MIX.items())
    agent_start: tuple[int, int] = (1, 1)
    target_pos: tuple[int, int] = (46, 46)

    def total_objects(self) -> int:
        return sum(n for _, n in self.counts)

    def to_dict(self) -> dict:
        return {
            "placement_seed": self.placement_seed,
            "width": self.width,
            "height": self.height,
            "tick_budget": self.tick_budget,
            "sensing_radius": self.sensing_radius,
            "counts": [[kind.value, n] for kind, n in self.counts],
            "agent_start": list(self.agent_start),
            "target_pos": list(self.target_pos),
        }


def _axis_within(cell: tuple[int, int], anchor: tuple[int, int], radius: int) -> bool:
    dx, dy = cell[0] - anchor[0], cell[1] - anchor[1]
    return alignment_of(dx, dy) in ("axis_h", "axis_v") and chebyshev(dx, dy) <= radius


def mission_world_config(config: MissionConfig) -> WorldConfig:
    """Sample the field layout for a mission seed.

    Spawn fairness is part of the frozen preset: nothing within three
    cells of start or target, and no destroyer near either endpoint (its
    axis reach plus avoidance margins would otherwise box the spawn or
    make the goal unenterable). The mid-field stays as dense as the mix
    dictates.
    """
    rng = random.Random(config.placement_seed)
    start, target = config.agent_start, config.target_pos
    clear_radius = config.sensing_radius + 2
    taken: set[tuple[int, int]] = set()
    placements: list[tuple[ObjectKind, tuple[int, int]]] = []
    for kind, count in config.counts:
        for _ in range(count):
            while True:
                cell = (rng.randrange(config.width), rng.randrange(config.height))
                if cell in taken or cell == start or cell == target:
                    continue
                if chebyshev(cell[0] - start[0], cell[1] - start[1]) < 3:
                    continue
                if chebyshev(cell[0] - target[0], cell[1] - target[1]) < 3:
                    continue
                if kind is ObjectKind.DESTROYER and (
                    chebyshev(cell[0] - start[0], cell[1] - start[1]) <= clear_radius
                    or chebyshev(cell[0] - target[0], cell[1] - target[1]) <= clear_radius
                    or _axis_within(cell, start, config.sensing_radius)
                    or _axis_within(cell, target, config.sensing_radius)
                ):
                    continue
                taken.add(cell)
                placements.append((kind, cell))
                break
    return WorldConfig(
        width=config.width,
        height=config.height,
        tick_budget=config.tick_budget,
        sensing_radius=config.sensing_radius,
        object_placements=tuple(placements),
        agent_start=start,
        target_pos=target,
        seed=config.placement_seed,
    )


@dataclass
class Decision:
    tick: int
    action: Action
    reason: str
    rule: RuleEntry | None = None

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "action": self.action.to_dict(),
            "reason": self.reason,
            "rule": self.rule.to_dict() if self.rule is not None else None,
        }


@dataclass
class MissionResult:
    outcome: str
    ticks_used: int
    trajectory: list[tuple[int, int]]
    decisions: list[Decision]

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "ticks_used": self.ticks_used,
            "trajectory": [list(p) for p in self.trajectory],
            "decisions": [d.to_dict() for d in self.decisions],
        }


@dataclass
class _Commitment:
    entry: RuleEntry
    ticks_left: int


_BUCKETS_OUTWARD = {
    "adjacent": ("adjacent", "near", "far"),
    "near": ("near", "far"),
    "far": ("far",),
    "none": ("none",),
}

_STATIONARY_CLASSES = ("fire", "pushpull", "touch", "wait")

# Both grid axes express the same behavior; danger evidence for one row
# direction also speaks about the other.
_ALIGNMENT_FAMILY = {
    "axis_h": ("axis_h", "axis_v"),
    "axis_v": ("axis_h", "axis_v"),
    "diagonal": ("diagonal",),
    "none": ("none",),
}


def _pessimistic_rate(rulebase: RuleBase, pairs) -> float:
    """Upper end of the death-rate uncertainty range over pooled counts.

    A survival filter cannot take a recorded rate at face value: 5 deaths
    in 30 tries is compatible with a true rate well above the point
    estimate. Contexts with no deaths at all stay at exactly zero."""
    hits = support = 0
    for ctx, action_class in pairs:
        support += rulebase.support.get((ctx, action_class), 0)
        hits += rulebase.hits.get((ctx, action_class, AGENT_DESTROYED), 0)
    if support == 0 or hits == 0:
        return 0.0
    rate = hits / support
    margin = 1.64 * (rate * (1.0 - rate) / support) ** 0.5
    return min(1.0, rate + margin)


def _death_confidence(rulebase: RuleBase, ctx: RuleContext) -> float:
    """How lethal the rules say it is to *be* in this context.

    Sources, all monotone in distance (the same alignment seen from
    farther away is never more dangerous than from here): deaths under
    stationary actions mark the ground itself, and deaths while moving
    toward an axis-aligned object mark the inward ray, which keeps that
    alignment (the exact-bearing move is the only member of the toward
    class that can die there, and it stays on the axis). Diagonal
    toward-deaths are excluded: the on-ray member is blocked by the
    object itself, so those deaths were sidesteps onto the axis, and say
    nothing about the diagonal cells. Learned bases need the ray
    inference because the innermost kill cells are never observed from
    within; nobody survives to report them.
    """
    best = 0.0
    for alignment in _ALIGNMENT_FAMILY[ctx.alignment]:
        for bucket in _BUCKETS_OUTWARD[ctx.bucket]:
            probe = RuleContext(ctx.shape, bucket, alignment, ctx.attached)
            for action_class in _STATIONARY_CLASSES:
                best = max(best, _pessimistic_rate(rulebase, [(probe, action_class)]))
            if ctx.alignment in ("axis_h", "axis_v"):
                best = max(best, _pessimistic_rate(rulebase, [(probe, MOVE_TOWARD)]))
    return best


def _simulate_move(world: WorldState, direction: str) -> tuple[int, int]:
    """Landing cell of a move, under the same walking rule the world uses."""
    vec = DIR_VECTORS[direction]
    occupied = world.occupied()
    pos = world.agent_pos
    for _ in range(agent_speed(world.agent_power)):
        nxt = (pos[0] + vec[0], pos[1] + vec[1])
        if not world.config.in_bounds(nxt) or nxt in occupied:
            break
        pos = nxt
        if pos == world.config.target_pos:
            break
    return pos


class Solver:
    """Stateful per-mission decision maker (rules are frozen at start)."""

    def __init__(self, rulebase: RuleBase) -> None:
        self.rulebase = rulebase
        self.commitment: _Commitment | None = None
        self.skip_useful_once = False
        self.visits: dict[tuple[int, int], int] = {}
        self.recent: deque[tuple[int, int]] = deque(maxlen=STALL_WINDOW)
        self.escape: tuple[str, int] | None = None  # (direction, ticks left)

    def _is_stuck(self) -> bool:
        return (
            len(self.recent) == STALL_WINDOW
            and len(set(self.recent)) <= STALL_DISTINCT
        )

    # -- helpers --

    def _forbidden_dirs(self, world: WorldState) -> set[str]:
        """Directions whose landing cell would put some sensed object into
        a context the rules call lethal (see _death_confidence). Every
        object is judged as if it were nearest, which is the single-object
        setting the rules came from."""
        sensed = [
            (obj.shape, obj.pos)
            for oid, obj in sorted(world.objects.items())
            if chebyshev(obj.pos[0] - world.agent_pos[0], obj.pos[1] - world.agent_pos[1])
            <= world.config.sensing_radius
        ]
        attached = world.attached_to is not None
        forbidden: set[str] = set()
        for direction in DIRECTIONS:
            landing = _simulate_move(world, direction)
            if landing == world.agent_pos:
                continue  # blocked moves are handled as non-candidates
            for shape, pos in sensed:
                dx, dy = pos[0] - landing[0], pos[1] - landing[1]
                dist = chebyshev(dx, dy)
                if dist == 0 or dist > world.config.sensing_radius:
                    continue
                ctx = RuleContext(shape, distance_bucket(dist), alignment_of(dx, dy), attached)
                if _death_confidence(self.rulebase, ctx) >= RISK_THRESHOLD:
                    forbidden.add(direction)
                    break
        return forbidden

    def _materialize(
        self, world: WorldState, entry: RuleEntry, forbidden: set[str]
    ) -> Action | None:
        """Concrete action for a committed rule, or None if unrealizable."""
        action_class = entry.action
        if action_class not in (MOVE_TOWARD, MOVE_AWAY, MOVE_ORTHOGONAL, "move_free"):
            return Action(action_class)
        percepts = sense(world)
        if not percepts:
            octant_index = 0
        else:
            nearest = min(percepts, key=lambda p: (p.distance, p.object_id))
            octant_index = DIRECTIONS.index(nearest.octant)
        if action_class == MOVE_TOWARD:
            offsets = (0, 1, -1)
        elif action_class == MOVE_AWAY:
            offsets = (4, 3, 5)
        elif action_class == MOVE_ORTHOGONAL:
            offsets = (2, -2)
        else:
            offsets = tuple(range(8))
        for off in offsets:
            direction = DIRECTIONS[(octant_index + off) % 8]
            if direction in forbidden:
                continue
            if _simulate_move(world, direction) == world.agent_pos:
                continue
            return Action.move(direction)
        return None

    def _landing_risk(self, world: WorldState, cell: tuple[int, int]) -> tuple[float, int]:
        """(worst recorded danger, distance to the closest object causing
        any) over the sensed objects' contexts at cell."""
        ax, ay = world.agent_pos
        radius = world.config.sensing_radius
        attached = world.attached_to is not None
        worst = 0.0
        nearest_risky = radius + 1
        for oid, obj in sorted(world.objects.items()):
            if chebyshev(obj.pos[0] - ax, obj.pos[1] - ay) > radius:
                continue
            dx, dy = obj.pos[0] - cell[0], obj.pos[1] - cell[1]
            dist = chebyshev(dx, dy)
            if dist == 0 or dist > radius:
                continue
            ctx = RuleContext(obj.shape, distance_bucket(dist), alignment_of(dx, dy), attached)
            conf = _death_confidence(self.rulebase, ctx)
            worst = max(worst, conf)
            if conf >= RISK_THRESHOLD and dist < nearest_risky:
                nearest_risky = dist
        return worst, nearest_risky

    def _fling_would_be_risky(self, world: WorldState) -> bool:
        """Anticipate where a conveyance would drop the agent.

        Every trainee who rode a conveyor saw the same thing: a straight
        hop toward the target that stops short of anything in the way. The
        solver replays that experience over the cells it can currently
        sense and refuses the ride if the drop point is flagged."""
        radius = world.config.sensing_radius
        ax, ay = world.agent_pos
        occupied = {
            obj.pos
            for obj in world.objects.values()
            if chebyshev(obj.pos[0] - ax, obj.pos[1] - ay) <= radius
        }
        tx, ty = world.config.target_pos
        pos = world.agent_pos
        for _ in range(CONVEY_DISTANCE):
            if pos == (tx, ty):
                break
            nxt = (
                pos[0] + (tx > pos[0]) - (tx < pos[0]),
                pos[1] + (ty > pos[1]) - (ty < pos[1]),
            )
            if not world.config.in_bounds(nxt) or nxt in occupied:
                break
            pos = nxt
        return self._landing_risk(world, pos)[0] >= RISK_THRESHOLD

    def _desperation_move(self, world: WorldState) -> Action | None:
        """Least-risky exit from a total lockdown.

        Picks the landing with the lowest recorded danger, preferring the
        one farthest from whatever triggers that danger (the outer edge of
        a wall rather than its core), and never accepts a near-certain
        kill."""
        tx, ty = world.config.target_pos
        best: tuple | None = None
        best_dir: str | None = None
        for idx, direction in enumerate(DIRECTIONS):
            landing = _simulate_move(world, direction)
            if landing == world.agent_pos:
                continue
            worst, nearest_risky = self._landing_risk(world, landing)
            if worst >= DESPERATION_CEILING:
                continue
            key = (
                worst,
                -nearest_risky,
                chebyshev(tx - landing[0], ty - landing[1]),
                idx,
            )
            if best is None or key < best:
                best = key
                best_dir = direction
        return Action.move(best_dir) if best_dir is not None else None

    # -- the decision procedure --

    def choose(self, world: WorldState) -> Decision:
        tick = world.tick
        forbidden = self._forbidden_dirs(world)

        if self.commitment is not None:
            action = self._materialize(world, self.commitment.entry, forbidden)
            if action is not None:
                return Decision(tick, action, "persist", self.commitment.entry)
            self.commitment = None  # unrealizable; fall through

        if world.attached_to is None and self.escape is not None:
            direction, left = self.escape
            landing = _simulate_move(world, direction)
            if left > 0 and landing != world.agent_pos:
                danger, clearance = self._landing_risk(world, landing)
                _, here_clearance = self._landing_risk(world, world.agent_pos)
                # Keep punching through the wall, but never march inward.
                if danger < DESPERATION_CEILING and clearance >= here_clearance:
                    self.escape = (direction, left - 1)
                    return Decision(tick, Action.move(direction), "desperation")
            self.escape = None

        if world.attached_to is None and self._is_stuck():
            action = self._desperation_move(world)
            if action is not None:
                self.recent.clear()
                assert action.direction is not None
                self.escape = (action.direction, ESCAPE_TICKS - 1)
                return Decision(tick, action, "desperation")

        percepts = sense(world)
        attached = world.attached_to is not None
        ctx = context_of(percepts, attached)

        if attached:
            # The thing holding us is rarely the nearest object out here,
            # so try the release rule against every sensed object's
            # context (nearest first), then against empty surroundings.
            candidates = [
                RuleContext(p.shape, distance_bucket(p.distance), p.alignment, True)
                for p in percepts
            ]
            candidates.append(RuleContext(None, "none", "none", True))
            for release_ctx in candidates:
                release = self.rulebase.query(release_ctx, {RELEASED})
                if release:
                    self.commitment = _Commitment(release[0], PERSISTENCE_TICKS)
                    action = self._materialize(world, release[0], forbidden)
                    if action is not None:
                        return Decision(tick, action, "release", release[0])
                    self.commitment = None
                    break

        if percepts and not self.skip_useful_once:
            useful = [
                e
                for e in self.rulebase.query(ctx, USEFUL_MISSION_OUTCOMES)
                if e.confidence >= USEFULNESS_THRESHOLD
                and not (e.outcome == CONVEYED and self._fling_would_be_risky(world))
            ]
            if useful:
                self.commitment = _Commitment(useful[0], PERSISTENCE_TICKS)
                action = self._materialize(world, useful[0], forbidden)
                if action is not None:
                    return Decision(tick, action, "skill", useful[0])
                self.commitment = None
        self.skip_useful_once = False

        # Greedy approach among allowed moves: fresh cells first (stops the
        # walk from ping-ponging against forbidden walls), then progress
        # toward the target, then the fixed direction order.
        tx, ty = world.config.target_pos
        best: tuple[int, int, int] | None = None  # (visits, distance, dir index)
        for idx, direction in enumerate(DIRECTIONS):
            if direction in forbidden:
                continue
            landing = _simulate_move(world, direction)
            if landing == world.agent_pos:
                continue
            key = (
                self.visits.get(landing, 0),
                chebyshev(tx - landing[0], ty - landing[1]),
                idx,
            )
            if best is None or key < best:
                best = key
        if best is not None:
            return Decision(tick, Action.move(DIRECTIONS[best[2]]), "greedy")
        return Decision(tick, Action("wait"), "cornered")

    def after_step(self, events: list) -> None:
        kinds = {e.kind for e in events}
        if self.commitment is not None:
            if self.commitment.entry.outcome in kinds:
                self.commitment = None
            elif ATTACHED in kinds and self.commitment.entry.outcome != RELEASED:
                self.commitment = None  # grabbed mid-plan; reconsider
            else:
                self.commitment.ticks_left -= 1
                if self.commitment.ticks_left <= 0:
                    self.commitment = None
                    self.skip_useful_once = True


def solve(config: MissionConfig, rulebase: RuleBase) -> MissionResult:
    """Run one mission to completion. Deterministic in (config, rulebase)."""
    world = create_world(mission_world_config(config))
    solver = Solver(rulebase)
    trajectory = [world.agent_pos]
    decisions: list[Decision] = []
    while (
        world.agent_alive
        and world.tick < world.config.tick_budget
        and world.agent_pos != world.config.target_pos
    ):
        solver.visits[world.agent_pos] = solver.visits.get(world.agent_pos, 0) + 1
        decision = solver.choose(world)
        events = step(world, decision.action)
        solver.after_step(events)
        solver.recent.append(world.agent_pos)
        decisions.append(decision)
        trajectory.append(world.agent_pos)
    if not world.agent_alive:
        outcome = DESTROYED
    elif world.agent_pos == world.config.target_pos:
        outcome = REACHED
    else:
        outcome = TIMEOUT
    return MissionResult(outcome, world.tick, trajectory, decisions)
