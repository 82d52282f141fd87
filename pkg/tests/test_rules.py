"""Abstraction, induction counting, learning curves, pruning, queries."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import strategies
from skillfield.rules import (
    BUCKET_ADJACENT,
    BUCKET_FAR,
    BUCKET_NEAR,
    BUCKET_NONE,
    MOVE_AWAY,
    MOVE_FREE,
    MOVE_ORTHOGONAL,
    MOVE_TOWARD,
    RuleBase,
    RuleContext,
    abstract_step,
    classify_action,
    context_of,
    distance_bucket,
    episode_success,
    induce,
    learning_curve,
    merge,
    prune,
)
from skillfield.session import Episode, ModuleSession, TraceStep
from skillfield.world import (
    Action,
    Event,
    FIRE,
    ObjectKind,
    PUSHPULL,
    Percept,
    TOUCH,
    WAIT,
)


def pct(object_id, shape, distance, octant, alignment):
    return Percept(object_id, shape, distance, octant, alignment)


# --- context abstraction ------------------------------------------------------


def test_distance_buckets_exact():
    assert distance_bucket(1) == BUCKET_ADJACENT
    assert distance_bucket(2) == BUCKET_NEAR
    assert distance_bucket(3) == BUCKET_NEAR
    assert distance_bucket(4) == BUCKET_FAR
    assert distance_bucket(8) == BUCKET_FAR


def test_context_of_empty():
    ctx = context_of([], False)
    assert ctx == RuleContext(None, BUCKET_NONE, "none", False)


def test_context_uses_nearest_percept_with_id_tiebreak():
    ps = [pct(3, 1, 4, "N", "axis_v"), pct(1, 2, 2, "E", "axis_h"), pct(2, 4, 2, "NE", "diagonal")]
    ctx = context_of(ps, False)
    assert ctx == RuleContext(2, BUCKET_NEAR, "axis_h", False)


def test_invalid_context_rejected():
    with pytest.raises(ValueError):
        RuleContext(None, BUCKET_NEAR, "none", False)
    with pytest.raises(ValueError):
        RuleContext(1, BUCKET_NONE, "none", False)
    with pytest.raises(ValueError):
        RuleContext(1, "close", "none", False)


def test_classify_moves_relative_to_nearest():
    ps = [pct(0, 1, 3, "NE", "diagonal")]
    assert classify_action(Action.move("NE"), ps) == MOVE_TOWARD
    assert classify_action(Action.move("N"), ps) == MOVE_TOWARD  # within 45 degrees
    assert classify_action(Action.move("SW"), ps) == MOVE_AWAY
    assert classify_action(Action.move("W"), ps) == MOVE_AWAY
    assert classify_action(Action.move("NW"), ps) == MOVE_ORTHOGONAL
    assert classify_action(Action.move("SE"), ps) == MOVE_ORTHOGONAL
    assert classify_action(Action.move("E"), []) == MOVE_FREE
    assert classify_action(FIRE, ps) == "fire"


def test_abstract_step_fire_example():
    step = TraceStep(
        tick=4,
        percepts=[pct(0, 1, 3, "NE", "diagonal")],
        action=FIRE,
        events=[Event("object_destroyed", 0)],
    )
    ctx, action, outcomes = abstract_step(step)
    assert ctx == RuleContext(1, BUCKET_NEAR, "diagonal", False)
    assert action == "fire"
    assert outcomes == ["object_destroyed"]


def test_abstract_step_empty_context_move():
    step = TraceStep(tick=0, percepts=[], action=Action.move("E"), events=[Event("moved")])
    ctx, action, outcomes = abstract_step(step)
    assert ctx == RuleContext(None, BUCKET_NONE, "none", False)
    assert action == MOVE_FREE
    assert outcomes == ["moved"]


def test_abstract_step_attached_release():
    step = TraceStep(
        tick=9,
        percepts=[pct(0, 2, 1, "E", "axis_h")],
        action=PUSHPULL,
        events=[Event("released", 0)],
        attached=True,
    )
    ctx, action, outcomes = abstract_step(step)
    assert ctx == RuleContext(2, BUCKET_ADJACENT, "axis_h", True)
    assert action == "pushpull"
    assert outcomes == ["released"]


# --- induction counting -------------------------------------------------------


def test_induce_empty():
    base = induce([])
    assert base.is_empty()
    assert base.entries() == []


def test_induce_single_step():
    ep = Episode(0, 0, [TraceStep(0, [pct(0, 1, 2, "N", "none")], FIRE, [Event("no_effect")])], "closed")
    base = induce([ep])
    (entry,) = base.entries()
    assert entry.support == 1 and entry.hits == 1
    assert entry.outcome == "no_effect"


def test_multi_kind_step_counts_support_once():
    step = TraceStep(
        0,
        [pct(0, 2, 2, "E", "none")],
        Action.move("E"),
        [Event("moved"), Event("attached", 0), Event("moved")],
    )
    base = induce([Episode(0, 0, [step], "closed")])
    entries = {e.outcome: e for e in base.entries()}
    assert set(entries) == {"moved", "attached"}
    assert entries["moved"].support == 1 and entries["moved"].hits == 1
    assert entries["attached"].hits == 1


@settings(max_examples=60)
@given(st.lists(strategies.episodes(), max_size=4))
def test_entries_share_support_and_bound_hits(eps):
    base = induce(eps)
    for entry in base.entries():
        assert 0 <= entry.hits <= entry.support
        assert base.support[(entry.context, entry.action)] == entry.support
        assert 0.0 <= entry.confidence <= 1.0


@settings(max_examples=60)
@given(st.lists(strategies.episodes(), max_size=6), st.integers(min_value=2, max_value=5))
def test_induction_homomorphism(eps, k):
    whole = induce(eps)
    parts = RuleBase()
    for i in range(k):
        parts = merge(parts, induce(eps[i::k]))
    assert whole.support == parts.support
    assert whole.hits == parts.hits


# --- learning curve -----------------------------------------------------------


def _episode_with(outcomes):
    return Episode(0, 0, [TraceStep(0, [], WAIT, [Event(k) for k in outcomes])], "closed")


def test_learning_curve_flat_zero():
    eps = [_episode_with(["no_effect"]) for _ in range(10)]
    curve = learning_curve(eps, 3)
    assert all(rate == 0.0 for _, rate in curve)


def test_learning_curve_flat_one():
    eps = [_episode_with(["power_gained"]) for _ in range(10)]
    curve = learning_curve(eps, 3)
    assert all(rate == 1.0 for _, rate in curve)


def test_learning_curve_trailing_window():
    eps = [_episode_with(["no_effect"])] * 2 + [_episode_with(["released"])] * 2
    curve = learning_curve(eps, 2)
    assert curve == [(0, 0.0), (1, 0.0), (2, 0.5), (3, 1.0)]


def test_learning_curve_oversized_window_collapses():
    eps = [_episode_with(["conveyed"]), _episode_with(["no_effect"])]
    assert learning_curve(eps, 10) == [(1, 0.5)]


def test_success_requires_survival():
    ep = _episode_with(["object_destroyed", "agent_destroyed"])
    assert not episode_success(ep)
    assert episode_success(_episode_with(["object_destroyed"]))


# --- prune ----------------------------------------------------------------


def test_prune_identity_thresholds():
    base = RuleBase()
    base.add_observation(RuleContext(1, BUCKET_NEAR, "diagonal", False), "fire", ["object_destroyed"])
    kept = prune(base, 1, 0.0)
    assert kept.support == base.support and kept.hits == base.hits


def test_prune_drops_low_support():
    base = RuleBase()
    ctx = RuleContext(1, BUCKET_NEAR, "diagonal", False)
    for _ in range(4):
        base.add_observation(ctx, "fire", ["object_destroyed"])
    assert prune(base, 5, 0.0).entries() == []
    assert len(base.entries()) == 1  # input untouched


def test_prune_empty_is_empty():
    assert prune(RuleBase(), 5, 0.5).entries() == []


# --- queries and serialization --------------------------------------------


def test_query_ranks_confidence_support_action():
    base = RuleBase()
    ctx = RuleContext(1, BUCKET_NEAR, "diagonal", False)
    for _ in range(4):
        base.add_observation(ctx, "fire", ["object_destroyed"])
    base.add_observation(ctx, "touch", ["object_destroyed"])
    base.add_observation(ctx, "wait", ["object_destroyed"])
    ranked = base.query(ctx, {"object_destroyed"})
    assert [e.action for e in ranked] == ["fire", "touch", "wait"]
    # fire wins on support; touch and wait tie and fall back to alphabetical


def test_query_filters_goal_outcomes():
    base = RuleBase()
    ctx = RuleContext(3, BUCKET_ADJACENT, "axis_h", False)
    base.add_observation(ctx, "touch", ["charging"])
    base.add_observation(ctx, "touch", ["power_gained"])
    ranked = base.query(ctx, {"power_gained"})
    assert len(ranked) == 1
    assert ranked[0].outcome == "power_gained"
    assert ranked[0].support == 2


@settings(max_examples=60)
@given(strategies.rulebases())
def test_rulebase_json_roundtrip(base):
    restored = RuleBase.from_json(base.to_json())
    assert restored == base
    assert restored.to_json() == base.to_json()


def test_from_dict_rejects_inconsistent_support():
    ctx = RuleContext(1, BUCKET_NEAR, "diagonal", False).to_dict()
    doc = {
        "entries": [
            {"context": ctx, "action": "fire", "outcome": "object_destroyed", "support": 3, "hits": 3},
            {"context": ctx, "action": "fire", "outcome": "no_effect", "support": 4, "hits": 1},
        ],
        "provenance": [],
    }
    with pytest.raises(ValueError, match="inconsistent support"):
        RuleBase.from_dict(doc)


# --- scripted power-supply confidence (independent recount) ---------------


def test_scripted_touch_confidence_matches_manual_recount():
    episodes = []
    for seed in range(10):
        session = ModuleSession("m-power", ObjectKind.POWER_SUPPLY, 100 + seed, episode_cap=40)
        while session.episode_index == 0:
            percepts = session.percepts()
            if not percepts:
                session.act(Action.move("N"))
                continue
            nearest = min(percepts, key=lambda p: (p.distance, p.object_id))
            if nearest.distance <= 1:
                session.act(TOUCH)
            else:
                session.act(Action.move(nearest.octant))
        episodes.extend(session.export_episodes())
    base = induce(episodes)

    # Recount straight off the traces, independent of the induction code.
    support = hits = 0
    for ep in episodes:
        for s in ep.steps:
            if s.action.kind != "touch" or not s.percepts:
                continue
            nearest = min(s.percepts, key=lambda p: (p.distance, p.object_id))
            if nearest.shape == 3 and nearest.distance == 1 and not s.attached:
                support += 1
                if any(e.kind == "power_gained" for e in s.events):
                    hits += 1
    assert support > 0
    expected = hits / support
    pooled_support = pooled_hits = 0
    for e in base.entries():
        if (
            e.context.shape == 3
            and e.context.bucket == BUCKET_ADJACENT
            and not e.context.attached
            and e.action == "touch"
        ):
            if e.outcome == "power_gained":
                pooled_hits += e.hits
                pooled_support += e.support
    assert pooled_support == support
    assert pooled_hits == hits
    assert 0.0 < expected < 1.0  # the two-tick charge cycle shows through
