"""Cause-effect rule induction over recorded traces.

Each trace step is abstracted to (context, action class, outcome kinds):
the context describes only the nearest percept (shape, distance bucket,
alignment, attached flag) and moves collapse to toward/away/orthogonal
relative to that object. Counting those triples yields IF-THEN rules with
support and confidence; rule bases add entrywise, so bases induced in
different places merge into exactly the base a single induction over the
union would produce.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .session import Episode, TraceStep
from .world import (
    AGENT_DESTROYED,
    BLOCKED,
    CHARGING,
    CONVEYED,
    EVENT_KINDS,
    MOVED,
    NO_EFFECT,
    OBJECT_DESTROYED,
    POWER_GAINED,
    RELEASED,
    Action,
    DIRECTIONS,
    Percept,
    octant_steps,
)

# Distance buckets. "near" tops out at 3 so that a diagonal fire skill is
# exact within its bucket (the fire range is 3); the destroyer's axis kill
# range (4) therefore straddles near/far, which the solver treats
# conservatively.
ADJACENT_MAX = 1
NEAR_MAX = 3

BUCKET_ADJACENT = "adjacent"
BUCKET_NEAR = "near"
BUCKET_FAR = "far"
BUCKET_NONE = "none"
BUCKETS = (BUCKET_ADJACENT, BUCKET_NEAR, BUCKET_FAR, BUCKET_NONE)

ALIGNMENTS = ("axis_h", "axis_v", "diagonal", "none")

MOVE_TOWARD = "move_toward"
MOVE_AWAY = "move_away"
MOVE_ORTHOGONAL = "move_orthogonal"
MOVE_FREE = "move_free"
ACTION_CLASSES = (
    "fire",
    MOVE_AWAY,
    MOVE_FREE,
    MOVE_ORTHOGONAL,
    MOVE_TOWARD,
    "pushpull",
    "touch",
    "wait",
)

# Outcomes that count as a skill paying off, and the ones that are mere
# navigation noise.
USEFUL_OUTCOMES = frozenset({OBJECT_DESTROYED, POWER_GAINED, CONVEYED, RELEASED})
NEUTRAL_OUTCOMES = frozenset({MOVED, BLOCKED, NO_EFFECT, CHARGING})


def distance_bucket(distance: int) -> str:
    if distance <= ADJACENT_MAX:
        return BUCKET_ADJACENT
    if distance <= NEAR_MAX:
        return BUCKET_NEAR
    return BUCKET_FAR


@dataclass(frozen=True)
class RuleContext:
    """Abstraction of the nearest percept at decision time."""

    shape: int | None
    bucket: str
    alignment: str
    attached: bool

    def __post_init__(self) -> None:
        if self.bucket not in BUCKETS:
            raise ValueError(f"bad bucket {self.bucket!r}")
        if self.alignment not in ALIGNMENTS:
            raise ValueError(f"bad alignment {self.alignment!r}")
        if (self.bucket == BUCKET_NONE) != (self.shape is None):
            raise ValueError("empty context must have no shape, and vice versa")
        if self.bucket == BUCKET_NONE and self.alignment != "none":
            raise ValueError("empty context must have alignment none")

    def sort_key(self) -> tuple:
        return (self.shape is not None, self.shape or 0, self.bucket, self.alignment, self.attached)

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "bucket": self.bucket,
            "alignment": self.alignment,
            "attached": self.attached,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RuleContext":
        return cls(d["shape"], d["bucket"], d["alignment"], d["attached"])


EMPTY_CONTEXT_FIELDS = (None, BUCKET_NONE, "none")


def context_of(percepts: list[Percept], attached: bool) -> RuleContext:
    """Context from the nearest percept; ties break on lowest object id."""
    if not percepts:
        return RuleContext(None, BUCKET_NONE, "none", attached)
    nearest = min(percepts, key=lambda p: (p.distance, p.object_id))
    return RuleContext(
        nearest.shape, distance_bucket(nearest.distance), nearest.alignment, attached
    )


def classify_action(action: Action, percepts: list[Percept]) -> str:
    """Collapse a concrete action to its rule-level class.

    Moves are classified by the angle between the move direction and the
    bearing of the nearest object: within 45° is toward, beyond 135° is
    away, a right angle is orthogonal. With nothing in range every move is
    free movement.
    """
    if action.kind != "move":
        return action.kind
    if not percepts:
        return MOVE_FREE
    nearest = min(percepts, key=lambda p: (p.distance, p.object_id))
    assert action.direction is not None
    steps = octant_steps(action.direction, nearest.octant)
    if steps <= 1:
        return MOVE_TOWARD
    if steps >= 3:
        return MOVE_AWAY
    return MOVE_ORTHOGONAL


def concrete_action(action_class: str, octant: str | None) -> Action:
    """A concrete action realizing an action class, given the bearing of
    the nearest object (None when nothing is in range)."""
    if action_class == MOVE_FREE or (
        action_class in (MOVE_TOWARD, MOVE_AWAY, MOVE_ORTHOGONAL) and octant is None
    ):
        return Action.move("N")
    if action_class == MOVE_TOWARD:
        assert octant is not None
        return Action.move(octant)
    if action_class == MOVE_AWAY:
        assert octant is not None
        return Action.move(DIRECTIONS[(DIRECTIONS.index(octant) + 4) % 8])
    if action_class == MOVE_ORTHOGONAL:
        assert octant is not None
        return Action.move(DIRECTIONS[(DIRECTIONS.index(octant) + 2) % 8])
    return Action(action_class)


def abstract_step(step: TraceStep) -> tuple[RuleContext, str, list[str]]:
    """(context, action class, outcome kinds) for one recorded step.

    Outcome kinds are deduplicated, preserving first occurrence order, so
    one decision contributes at most one hit per outcome kind.
    """
    ctx = context_of(step.percepts, step.attached)
    action_class = classify_action(step.action, step.percepts)
    seen: list[str] = []
    for ev in step.events:
        if ev.kind not in seen:
            seen.append(ev.kind)
    return ctx, action_class, seen


@dataclass(frozen=True)
class RuleEntry:
    context: RuleContext
    action: str
    outcome: str
    support: int
    hits: int

    @property
    def confidence(self) -> float:
        return self.hits / self.support

    def to_dict(self) -> dict:
        return {
            "context": self.context.to_dict(),
            "action": self.action,
            "outcome": self.outcome,
            "support": self.support,
            "hits": self.hits,
        }


class RuleBase:
    """Counter maps over (context, action) and (context, action, outcome).

    All outcome entries of one (context, action) share the same support:
    support counts decision occurrences, hits count how often a given
    outcome kind followed. Addition of bases is commutative and
    associative with the empty base as identity.
    """

    def __init__(self) -> None:
        self.support: dict[tuple[RuleContext, str], int] = {}
        self.hits: dict[tuple[RuleContext, str, str], int] = {}
        self.provenance: set[str] = set()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RuleBase):
            return NotImplemented
        return (
            self.support == other.support
            and self.hits == other.hits
            and self.provenance == other.provenance
        )

    def __len__(self) -> int:
        return len(self.hits)

    def is_empty(self) -> bool:
        return not self.support and not self.hits and not self.provenance

    def add_observation(self, ctx: RuleContext, action_class: str, outcomes: list[str]) -> None:
        """One decision occurrence: support once, one hit per outcome kind."""
        key = (ctx, action_class)
        self.support[key] = self.support.get(key, 0) + 1
        for out in outcomes:
            okey = (ctx, action_class, out)
            self.hits[okey] = self.hits.get(okey, 0) + 1

    def confidence(self, ctx: RuleContext, action_class: str, outcome: str) -> float:
        sup = self.support.get((ctx, action_class), 0)
        if sup == 0:
            return 0.0
        return self.hits.get((ctx, action_class, outcome), 0) / sup

    def entries(self) -> list[RuleEntry]:
        out = [
            RuleEntry(ctx, act, outcome, self.support[(ctx, act)], hits)
            for (ctx, act, outcome), hits in self.hits.items()
        ]
        out.sort(key=lambda e: (e.context.sort_key(), e.action, e.outcome))
        return out

    def query(
        self, ctx: RuleContext, goal_outcomes: frozenset[str] | set[str] | None = None
    ) -> list[RuleEntry]:
        """Entries matching `ctx` whose outcome is in `goal_outcomes`,
        best first: confidence desc, support desc, then action/outcome
        alphabetical."""
        matches = [
            e
            for e in self.entries()
            if e.context == ctx
            and (goal_outcomes is None or e.outcome in goal_outcomes)
        ]
        matches.sort(key=lambda e: (-e.confidence, -e.support, e.action, e.outcome))
        return matches

    def merge(self, other: "RuleBase") -> "RuleBase":
        merged = RuleBase()
        merged.support = dict(self.support)
        merged.hits = dict(self.hits)
        for key, n in other.support.items():
            merged.support[key] = merged.support.get(key, 0) + n
        for okey, n in other.hits.items():
            merged.hits[okey] = merged.hits.get(okey, 0) + n
        merged.provenance = self.provenance | other.provenance
        return merged

    def prune(self, min_support: int, min_confidence: float) -> "RuleBase":
        if min_support < 1:
            raise ValueError("min_support must be >= 1")
        if not 0.0 <= min_confidence <= 1.0:
            raise ValueError("min_confidence must be in [0, 1]")
        kept = RuleBase()
        for e in self.entries():
            if e.support >= min_support and e.confidence >= min_confidence:
                kept.support[(e.context, e.action)] = e.support
                kept.hits[(e.context, e.action, e.outcome)] = e.hits
        kept.provenance = set(self.provenance)
        return kept

    # -- serialization --

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries()],
            "provenance": sorted(self.provenance),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "RuleBase":
        base = cls()
        for ed in d["entries"]:
            ctx = RuleContext.from_dict(ed["context"])
            key = (ctx, ed["action"])
            if key in base.support and base.support[key] != ed["support"]:
                raise ValueError(
                    f"inconsistent support for {key}: "
                    f"{base.support[key]} vs {ed['support']}"
                )
            if ed["outcome"] not in EVENT_KINDS:
                raise ValueError(f"unknown outcome {ed['outcome']!r}")
            if not 0 <= ed["hits"] <= ed["support"]:
                raise ValueError(f"bad counts in entry {ed}")
            base.support[key] = ed["support"]
            base.hits[(ctx, ed["action"], ed["outcome"])] = ed["hits"]
        base.provenance = set(d.get("provenance", []))
        return base

    @classmethod
    def from_json(cls, text: str) -> "RuleBase":
        return cls.from_dict(json.loads(text))


def merge(a: RuleBase, b: RuleBase) -> RuleBase:
    return a.merge(b)


DEFAULT_MIN_SUPPORT = 5
DEFAULT_MIN_CONFIDENCE = 0.2


def prune(
    base: RuleBase,
    min_support: int = DEFAULT_MIN_SUPPORT,
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> RuleBase:
    return base.prune(min_support, min_confidence)


def induce(episodes: list[Episode]) -> RuleBase:
    base = RuleBase()
    for ep in episodes:
        for step in ep.steps:
            ctx, action_class, outcomes = abstract_step(step)
            base.add_observation(ctx, action_class, outcomes)
    return base


def episode_success(episode: Episode) -> bool:
    """An episode succeeded if some skill paid off and the agent survived."""
    died = False
    useful = False
    for step in episode.steps:
        for ev in step.events:
            if ev.kind == AGENT_DESTROYED:
                died = True
            elif ev.kind in USEFUL_OUTCOMES:
                useful = True
    return useful and not died


def learning_curve(episodes: list[Episode], window: int) -> list[tuple[int, float]]:
    """Trailing-window success rate per episode index."""
    if window < 1:
        raise ValueError("window must be >= 1")
    flags = [1.0 if episode_success(ep) else 0.0 for ep in episodes]
    if not flags:
        return []
    if window > len(flags):
        return [(len(flags) - 1, sum(flags) / len(flags))]
    curve = []
    for i in range(len(flags)):
        lo = max(0, i - window + 1)
        chunk = flags[lo : i + 1]
        curve.append((i, sum(chunk) / len(chunk)))
    return curve
