import io
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llcexplore.environment import GroundAction, agent_position, \
    split_schema
from llcexplore.relational import Atom, state_diff


def test_start_position_and_progress(world):
    w = world.reset()
    assert w.agent == ("x1", "y1")
    assert world.exploration_progress(w) == 1
    assert world.observe(w) == world.problem.init


def test_observe_is_side_effect_free(world):
    w = world.reset()
    assert world.observe(w) == world.observe(w)


def test_move_into_free_adjacent_tile(world):
    # x2 lies west of x1, so reaching (x2, y1) from the start is a westward
    # move.
    w = world.step(world.reset(), GroundAction("move_w", ("x2", "y1")))
    assert w.agent == ("x2", "y1")
    adds, dels = state_diff(world.problem.init, w.state)
    assert adds == {Atom("agentat", ("x2", "y1"))}
    assert dels == {Atom("agentat", ("x1", "y1"))}
    assert world.exploration_progress(w) == 2


def test_move_with_wrong_direction_fails(world):
    w0 = world.reset()
    assert world.step(w0, GroundAction("move_e", ("x2", "y1"))) == w0


def test_move_into_wall_fails(world):
    w0 = world.reset()
    assert world.step(w0, GroundAction("move_n", ("x1", "y2"))) == w0


def test_move_to_non_adjacent_tile_fails(world):
    w0 = world.reset()
    assert world.step(w0, GroundAction("move_w", ("x4", "y1"))) == w0


def at(world, x, y, extra=()):
    init = world.problem.init
    s = (init - {Atom("agentat", agent_position(init))}) | {
        Atom("agentat", (x, y))
    }
    return frozenset(s | set(extra))


def test_door_open_close_and_pass(world):
    s = at(world, "x8", "y5")
    assert not world.succeeds(s, GroundAction("move_s", ("x8", "y4")))
    assert not world.succeeds(s, GroundAction("close_door_s", ("x8", "y4")))
    s2 = world.apply(s, GroundAction("open_door_s", ("x8", "y4")))
    assert Atom("odoor", ("x8", "y4")) in s2
    assert Atom("cdoor", ("x8", "y4")) not in s2
    s3 = world.apply(s2, GroundAction("move_s", ("x8", "y4")))
    assert agent_position(s3) == ("x8", "y4")
    s4 = world.apply(s2, GroundAction("close_door_s", ("x8", "y4")))
    assert s4 == s


def test_split_schema():
    assert split_schema("open_door_ne") == ("open_door", "ne")
    with pytest.raises(ValueError):
        split_schema("jump_n")


def test_reachable_configurations(reachable_states):
    positions = {agent_position(s) for s in reachable_states}
    assert len(positions) == 33
    assert len(reachable_states) == 65


def test_revisit_does_not_increase_progress(world):
    w = world.step(world.reset(), GroundAction("move_w", ("x2", "y1")))
    w = world.step(w, GroundAction("move_e", ("x1", "y1")))
    assert world.exploration_progress(w) == 2


def test_perfect_models_agree_with_simulator(world, reachable_states,
                                             perfect, scenario1):
    start = time.perf_counter()
    u = scenario1.objects
    for s in reachable_states:
        for schema, model in perfect.items():
            action = world.adjacent_action(s, schema)
            if action is None:
                continue
            assert world.succeeds(s, action) == model.executable(
                s, action.args, u), (schema, agent_position(s))
    assert time.perf_counter() - start < 10


def test_render_marks_agent_walls_and_door(world):
    buf = io.StringIO()
    world.render(world.reset(), buf)
    text = buf.getvalue()
    assert text.count("A") == 1 and text.count("W") == 12
    assert "CD" in text
    # North at the top: the start tile (south-east corner) is the last cell.
    assert text.rstrip().endswith("A")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 64), st.integers(0, 23), st.integers(0, 8),
       st.integers(0, 4))
def test_frame_property(world, reachable_states, i, k, xi, yi):
    s = reachable_states[i]
    schema = ("move", "open_door", "close_door")[k % 3]
    direction = ["n", "s", "e", "w", "ne", "nw", "se", "sw"][k % 8]
    x = world.universe.of_type("xcoord")[xi]
    y = world.universe.of_type("ycoord")[yi]
    a = GroundAction(f"{schema}_{direction}", (x, y))
    t = world.apply(s, a)
    assert t == world.apply(s, a)
    adds, dels = state_diff(s, t)
    changed = {atom.predicate for atom in adds | dels}
    assert changed <= {"agentat"} or changed <= {"cdoor", "odoor"}
    assert len(adds) == len(dels) <= 1
