"""Per-object automaton behavior, both unit-level and through the world."""

from skillfield.world import (
    AGENT_DESTROYED,
    ATTACHED,
    CHARGING,
    CONVEYED,
    OBJECT_DESTROYED,
    POWER_GAINED,
    RELEASED,
    BehaviorState,
    FIRE,
    PUSHPULL,
    TOUCH,
    WAIT,
    Action,
    initial_behavior,
    resolve_object_reaction,
    step,
)

from test_world import make_world, D, S, P, C


def kinds(events):
    return [e.kind for e in events]


# --- destroyer ---------------------------------------------------------------


def test_destroyer_axis_kill_through_world():
    world = make_world([(D, (8, 8))], agent=(4, 8))
    events = step(world, WAIT)
    assert AGENT_DESTROYED in kinds(events)
    assert not world.agent_alive


def test_destroyer_diagonal_is_safe():
    world = make_world([(D, (8, 8))], agent=(6, 6))
    events = step(world, WAIT)
    assert AGENT_DESTROYED not in kinds(events)


def test_destroyer_fire_from_diagonal():
    world = make_world([(D, (8, 8))], agent=(6, 6))
    events = step(world, FIRE)
    assert kinds(events) == [OBJECT_DESTROYED]
    assert world.objects == {}


def test_fire_misses_on_axis():
    world = make_world([(D, (8, 8))], agent=(8, 2))  # axis_v, distance 6
    events = step(world, FIRE)
    assert OBJECT_DESTROYED not in kinds(events)
    assert len(world.objects) == 1


def test_fire_misses_beyond_range():
    world = make_world([(D, (8, 8))], agent=(4, 4))  # diagonal, distance 4
    events = step(world, FIRE)
    assert kinds(events) == ["no_effect"]


def test_escaping_move_beats_axis_kill():
    # The kill check runs against the end-of-tick position only.
    world = make_world([(D, (8, 8))], agent=(4, 8))
    events = step(world, Action.move("W"))
    assert world.agent_pos == (3, 8)
    assert AGENT_DESTROYED not in kinds(events)


def test_stepping_into_axis_range_kills():
    world = make_world([(D, (8, 8))], agent=(8, 3))  # axis_v at 5, safe
    events = step(world, Action.move("N"))
    assert world.agent_pos == (8, 4)
    assert AGENT_DESTROYED in kinds(events)


def test_fired_destroyer_cannot_kill_same_tick():
    # Both conditions cannot hold for one destroyer (diagonal is never an
    # axis), but a second one on the axis still kills after the first dies.
    world = make_world([(D, (6, 6)), (D, (4, 8))], agent=(4, 4))
    events = step(world, FIRE)
    assert OBJECT_DESTROYED in kinds(events)
    assert AGENT_DESTROYED in kinds(events)


# --- sticker -----------------------------------------------------------------


def test_sticker_attaches_on_entering_adjacency():
    world = make_world([(S, (3, 1))])
    events = step(world, Action.move("E"))
    assert kinds(events) == ["moved", ATTACHED]
    assert world.attached_to == 0


def test_attached_movement_is_rotated_clockwise():
    world = make_world([(S, (1, 2))], agent=(1, 1))
    step(world, WAIT)  # attach (already adjacent)
    assert world.attached_to == 0
    step(world, Action.move("N"))  # diverted to E
    assert world.agent_pos == (2, 1)
    step(world, Action.move("W"))  # diverted to N
    assert world.agent_pos == (2, 2)


def test_release_after_two_consecutive_pushpulls():
    world = make_world([(S, (2, 1))])
    step(world, WAIT)
    assert world.attached_to == 0
    ev1 = step(world, PUSHPULL)
    assert RELEASED not in kinds(ev1)
    ev2 = step(world, PUSHPULL)
    assert RELEASED in kinds(ev2)
    assert world.attached_to is None


def test_interrupted_pushpull_resets_streak():
    world = make_world([(S, (2, 1))])
    step(world, WAIT)
    step(world, PUSHPULL)
    step(world, WAIT)  # breaks the streak
    ev = step(world, PUSHPULL)
    assert RELEASED not in kinds(ev)
    ev = step(world, PUSHPULL)
    assert RELEASED in kinds(ev)


def test_reattach_immunity_lasts_three_ticks():
    world = make_world([(S, (2, 1))])
    step(world, WAIT)
    step(world, PUSHPULL)
    step(world, PUSHPULL)  # released, cooldown 3
    assert world.attached_to is None
    assert ATTACHED not in kinds(step(world, WAIT))
    assert ATTACHED not in kinds(step(world, WAIT))
    events = step(world, WAIT)
    assert ATTACHED in kinds(events)


def test_lowest_id_sticker_wins_attachment():
    world = make_world([(S, (2, 1)), (S, (1, 2))])
    events = step(world, WAIT)
    assert kinds(events).count(ATTACHED) == 1
    assert world.attached_to == 0


def test_release_works_at_distance():
    world = make_world([(S, (2, 1))])
    step(world, WAIT)
    step(world, Action.move("N"))  # diverted to E, blocked by the sticker
    step(world, Action.move("W"))  # diverted to N
    assert world.agent_pos == (1, 2)
    step(world, PUSHPULL)
    events = step(world, PUSHPULL)
    assert RELEASED in kinds(events)


# --- power supply ------------------------------------------------------------


def test_two_tick_touch_gains_power():
    world = make_world([(P, (2, 1))])
    ev1 = step(world, TOUCH)
    assert kinds(ev1) == [CHARGING]
    ev2 = step(world, TOUCH)
    assert POWER_GAINED in kinds(ev2)
    assert world.agent_power == 1


def test_touch_streak_resets_when_interrupted():
    world = make_world([(P, (2, 1))])
    step(world, TOUCH)
    step(world, WAIT)
    ev = step(world, TOUCH)
    assert kinds(ev) == [CHARGING]


def test_supply_drains_after_three_charges_and_despawns():
    world = make_world([(P, (2, 1))])
    gains = 0
    for _ in range(12):
        if not world.objects:
            break
        events = step(world, TOUCH)
        gains += kinds(events).count(POWER_GAINED)
    assert gains == 3
    assert world.agent_power == 3
    assert world.objects == {}  # drained supplies fade out


def test_continuous_touch_cycle_is_two_ticks():
    world = make_world([(P, (2, 1))])
    pattern = [kinds(step(world, TOUCH)) for _ in range(6)]
    assert pattern[0] == [CHARGING]
    assert POWER_GAINED in pattern[1]
    assert pattern[2] == [CHARGING]
    assert POWER_GAINED in pattern[3]
    assert pattern[4] == [CHARGING]
    assert POWER_GAINED in pattern[5] and OBJECT_DESTROYED in pattern[5]


def test_touch_from_distance_does_nothing():
    world = make_world([(P, (3, 1))])  # distance 2
    events = step(world, TOUCH)
    assert kinds(events) == ["no_effect"]


# --- conveyor ----------------------------------------------------------------


def test_conveyor_tip_touch_conveys_toward_target():
    world = make_world([(C, (5, 5))], agent=(4, 5), target=(14, 14))
    events = step(world, TOUCH)
    conveyed = [e for e in events if e.kind == CONVEYED]
    assert len(conveyed) == 1
    assert conveyed[0].cells == 6
    # Greedy line from (4,5) toward (14,14): six diagonal steps.
    assert world.agent_pos == (10, 11)


def test_conveyor_vertical_side_is_not_a_tip():
    world = make_world([(C, (5, 5))], agent=(5, 4), target=(14, 14))
    events = step(world, TOUCH)
    assert kinds(events) == ["no_effect"]


def test_conveyor_diagonal_corner_is_not_a_tip():
    world = make_world([(C, (5, 5))], agent=(4, 4), target=(14, 14))
    events = step(world, TOUCH)
    assert kinds(events) == ["no_effect"]


def test_conveyance_stops_before_occupied_cell():
    world = make_world([(C, (5, 5)), (S, (7, 8))], agent=(4, 5), target=(14, 14))
    events = step(world, TOUCH)
    (conveyed,) = [e for e in events if e.kind == CONVEYED]
    assert conveyed.cells == 2  # (5,6), (6,7); (7,8) is occupied
    assert world.agent_pos == (6, 7)


def test_conveyance_stops_at_target():
    world = make_world([(C, (5, 5))], agent=(4, 5), target=(6, 7))
    events = step(world, TOUCH)
    (conveyed,) = [e for e in events if e.kind == CONVEYED]
    assert conveyed.cells == 2
    assert world.agent_pos == (6, 7)


def test_conveyor_cooldown_blocks_for_ten_ticks():
    world = make_world([(C, (5, 5))], agent=(4, 5), target=(14, 14))
    step(world, TOUCH)  # conveys, cooldown 10
    # walk back to the west tip
    world.agent_pos = (4, 5)
    for i in range(9):
        events = step(world, TOUCH)
        assert CONVEYED not in kinds(events), f"conveyed too early at +{i + 1}"
    events = step(world, TOUCH)
    assert CONVEYED in kinds(events)


def test_conveyance_from_target_cell_is_dropped():
    world = make_world([(C, (5, 5))], agent=(3, 5), target=(4, 5))
    step(world, Action.move("E"))  # halt on the target, which is the west tip
    assert world.agent_pos == (4, 5)
    events = step(world, TOUCH)
    assert CONVEYED not in kinds(events)


# --- resolve_object_reaction is pure -----------------------------------------


def test_resolve_does_not_mutate_input_state():
    state = initial_behavior(P)
    out, events = resolve_object_reaction(P, state, (1, 0), False, TOUCH)
    assert state.touch_streak == 0
    assert out.touch_streak == 1
    assert kinds(events) == [CHARGING]


def test_resolve_same_inputs_same_outputs():
    state = BehaviorState(charges_left=2, touch_streak=1)
    a = resolve_object_reaction(P, state, (0, 1), False, TOUCH)
    b = resolve_object_reaction(P, state, (0, 1), False, TOUCH)
    assert a == b
    assert POWER_GAINED in kinds(a[1])
