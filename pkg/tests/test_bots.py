"""Bot policies: determinism, exploration uniformity, online induction."""

from collections import Counter

import pytest

from skillfield.bots import Bot, PolicyConfig, RANDOM, run_bot
from skillfield.rules import induce
from skillfield.session import ModuleSession, episodes_to_ndjson
from skillfield.world import ALL_ACTIONS, Event, FIRE, ObjectKind, Percept


def test_bad_policy_rejected():
    with pytest.raises(ValueError):
        Bot(PolicyConfig(kind="clever"))
    with pytest.raises(ValueError):
        Bot(PolicyConfig(epsilon_floor=0.5, epsilon_initial=0.2))


def test_pure_exploration_is_uniform():
    bot = Bot(PolicyConfig(kind=RANDOM, seed=99))
    counts = Counter()
    for _ in range(12000):
        counts[bot.decide([], False)] += 1
    assert set(counts) == set(ALL_ACTIONS)
    for action in ALL_ACTIONS:
        assert 800 <= counts[action] <= 1200  # 1000 expected per action


def test_pure_exploitation_picks_learned_rule():
    bot = Bot(PolicyConfig(epsilon_initial=0.0, epsilon_floor=0.0, seed=4))
    percepts = [Percept(0, 1, 3, "NE", "diagonal")]
    for _ in range(3):
        bot.observe(percepts, False, FIRE, [Event("object_destroyed", 0)])
    action = bot.decide(percepts, False)
    assert action.kind == "fire"


def test_exploit_approaches_when_no_rule_applies():
    bot = Bot(PolicyConfig(epsilon_initial=0.0, epsilon_floor=0.0, seed=4))
    percepts = [Percept(0, 2, 5, "SW", "none")]
    action = bot.decide(percepts, False)
    assert action.kind == "move" and action.direction == "SW"


def test_same_seeds_reproduce_traces_byte_for_byte():
    outputs = []
    for _ in range(2):
        session = ModuleSession("m", ObjectKind.POWER_SUPPLY, 31, episode_cap=40)
        bot = Bot(PolicyConfig(seed=7))
        run_bot(session, bot, 5)
        outputs.append(episodes_to_ndjson(session.export_episodes(), "m", session.shape))
    assert outputs[0] == outputs[1]


def test_run_bot_counts_and_caps_episodes():
    session = ModuleSession("m", ObjectKind.CONVEYOR, 5, episode_cap=15)
    bot = Bot(PolicyConfig(kind=RANDOM, seed=1))
    episodes = run_bot(session, bot, 4)
    assert len(episodes) == 4
    assert all(len(ep.steps) <= 15 for ep in episodes)


def test_online_private_base_equals_batch_induction():
    session = ModuleSession("m", ObjectKind.STICKER, 13, episode_cap=25)
    bot = Bot(PolicyConfig(seed=3))
    episodes = run_bot(session, bot, 8)
    batch = induce(episodes)
    assert bot.private.support == batch.support
    assert bot.private.hits == batch.hits


def test_epsilon_decays_to_floor():
    session = ModuleSession("m", ObjectKind.CONVEYOR, 5, episode_cap=5)
    bot = Bot(PolicyConfig(seed=1, epsilon_decay=0.5, epsilon_floor=0.25))
    run_bot(session, bot, 4)
    assert bot.epsilon == 0.25
