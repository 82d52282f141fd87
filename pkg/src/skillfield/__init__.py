"""Skill acquisition pipeline for the minefield navigation task.

Subpackages by responsibility: world (the deterministic simulator),
session (single-object training sessions), rules (cause-effect rule
induction), centre (packet accumulation and queries), transport (the wire
protocol), bots (scripted users), mission (the rule-driven solver),
oracle (the hand-written reference rule base).
"""

from .world import (
    Action,
    BehaviorState,
    Event,
    ObjectKind,
    Percept,
    SHAPE_IDS,
    WorldConfig,
    WorldConfigError,
    WorldState,
    ContractViolation,
    create_world,
    resolve_object_reaction,
    sense,
    step,
)
from .session import Episode, ModuleSession, SessionClosed, TraceStep
from .rules import (
    RuleBase,
    RuleContext,
    RuleEntry,
    abstract_step,
    induce,
    learning_curve,
    merge,
    prune,
)
from .centre import SkillCentre, SkillPacket, make_packet
from .bots import Bot, PolicyConfig, run_bot
from .mission import MissionConfig, MissionResult, Solver, solve
from .oracle import oracle_rulebase

__version__ = "0.1.0"
