"""Scripted module users.

Bots stand in for the human players: a `random` bot acts uniformly, an
`epsilon_greedy` bot keeps a private rule base that it updates after every
step and exploits between exploration draws. Everything is driven by a
seeded generator, so a bot run is reproducible byte for byte.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .rules import (
    RuleBase,
    USEFUL_OUTCOMES,
    classify_action,
    concrete_action,
    context_of,
)
from .session import Episode, ModuleSession
from .world import AGENT_DESTROYED, ALL_ACTIONS, Action, Percept

RANDOM = "random"
EPSILON_GREEDY = "epsilon_greedy"

# Exploit moves whose recorded death rate in this context reaches this are
# skipped; the bot learned the hard way not to go there. Deliberately
# higher than the mission solver's risk threshold: a trainee that stops
# sampling a transition at the solver's own cutoff would leave its death
# estimates frozen right at the decision boundary.
BOT_RISK_THRESHOLD = 0.3


@dataclass
class PolicyConfig:
    kind: str = EPSILON_GREEDY
    epsilon_initial: float = 1.0
    epsilon_decay: float = 0.985  # multiplicative, per episode
    epsilon_floor: float = 0.1
    seed: int = 0


class Bot:
    """One policy instance bound to one module session run."""

    def __init__(self, config: PolicyConfig) -> None:
        if config.kind not in (RANDOM, EPSILON_GREEDY):
            raise ValueError(f"unknown policy kind {config.kind!r}")
        if not 0.0 <= config.epsilon_floor <= config.epsilon_initial <= 1.0:
            raise ValueError("need 0 <= floor <= initial <= 1")
        self.config = config
        self.rng = random.Random(config.seed)
        self.epsilon = config.epsilon_initial
        self.private = RuleBase()

    def _too_risky(self, ctx, action_class: str) -> bool:
        return (
            self.private.confidence(ctx, action_class, AGENT_DESTROYED)
            >= BOT_RISK_THRESHOLD
        )

    def decide(self, percepts: list[Percept], attached: bool) -> Action:
        """Pick the next action from percepts and the private rule base.

        Exploit order: best useful-outcome rule for the current context;
        with no applicable rule, close in on whatever is visible (an
        experienced user heads for the object); otherwise roam uniformly.
        Exploit choices that previously got the agent killed in this
        context are vetoed; exploration stays uniform.
        """
        explore = self.rng.random() < self.epsilon
        if self.config.kind == RANDOM or explore:
            return ALL_ACTIONS[self.rng.randrange(len(ALL_ACTIONS))]
        ctx = context_of(percepts, attached)
        nearest = min(percepts, key=lambda p: (p.distance, p.object_id)) if percepts else None
        best = self.private.query(ctx, USEFUL_OUTCOMES)
        if best and not self._too_risky(ctx, best[0].action):
            return concrete_action(best[0].action, nearest.octant if nearest else None)
        if nearest is not None and nearest.distance > 1:
            approach = Action.move(nearest.octant)
            if not self._too_risky(ctx, classify_action(approach, percepts)):
                return approach
        return ALL_ACTIONS[self.rng.randrange(len(ALL_ACTIONS))]

    def observe(self, percepts: list[Percept], attached: bool, action: Action, events: list) -> None:
        """Online update: fold the (context, action, outcomes) of one step
        into the private base. Matches batch induction exactly."""
        if self.config.kind != EPSILON_GREEDY:
            return
        ctx = context_of(percepts, attached)
        action_class = classify_action(action, percepts)
        outcomes: list[str] = []
        for ev in events:
            if ev.kind not in outcomes:
                outcomes.append(ev.kind)
        self.private.add_observation(ctx, action_class, outcomes)

    def end_episode(self) -> None:
        self.epsilon = max(self.config.epsilon_floor, self.epsilon * self.config.epsilon_decay)


def run_bot(session: ModuleSession, bot: Bot, n_episodes: int) -> list[Episode]:
    """Drive the session until n_episodes have closed; returns them."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    start = len(session.closed_episodes)
    while len(session.closed_episodes) - start < n_episodes:
        percepts = session.percepts()
        attached = session.world.attached_to is not None
        episode_before = session.episode_index
        action = bot.decide(percepts, attached)
        _, events = session.act(action)
        bot.observe(percepts, attached, action, events)
        if session.episode_index != episode_before:
            bot.end_episode()
    return session.closed_episodes[start : start + n_episodes]
