import random
from collections import Counter

import pytest

from llcexplore.controller import AgentMode, Controller, ControllerConfig, \
    Grounding, ground, least_taken_actions, run
from llcexplore.environment import GroundAction, agent_position
from llcexplore.llc import LLCActionTable


def test_lta_no_active_llcs(llcs, domain):
    table = LLCActionTable(llcs, list(domain.schemas))
    assert least_taken_actions([], table, list(domain.schemas)) == []


def test_lta_fresh_table_returns_all(llcs, domain):
    table = LLCActionTable(llcs, list(domain.schemas))
    assert least_taken_actions(llcs[:4], table,
                               list(domain.schemas)) == list(domain.schemas)


def test_lta_single_untaken_schema(llcs, domain):
    schemas = list(domain.schemas)
    table = LLCActionTable(llcs, schemas)
    for a in schemas:
        if a != "move_n":
            table.record_action(llcs[:1], a)
    assert least_taken_actions(llcs[:1], table, schemas) == ["move_n"]
    table.record_action(llcs[:1], "move_n")
    assert least_taken_actions(llcs[:1], table, schemas) == []


def test_lta_prefers_schemas_untaken_in_more_contexts(llcs, domain):
    schemas = list(domain.schemas)
    table = LLCActionTable(llcs, schemas)
    for a in schemas:
        if a not in ("move_n", "move_s"):
            table.record_action(llcs[:2], a)
    table.record_action(llcs[:1], "move_s")
    assert least_taken_actions(llcs[:2], table, schemas) == ["move_n"]


def test_uniform_grounding_is_uniform(domain, scenario1):
    rng = random.Random(7)
    counts = Counter(
        ground("move_n", domain, scenario1.objects, rng).args
        for _ in range(10_000))
    assert len(counts) == 45
    expected = 10_000 / 45
    chi2 = sum((c - expected)**2 / expected for c in counts.values())
    # Critical value of chi-square with 44 degrees of freedom at p = 0.001.
    assert chi2 < 78.75


def test_grounding_is_reproducible(domain, scenario1):
    def draw(seed):
        rng = random.Random(seed)
        return [ground("move_e", domain, scenario1.objects, rng)
                for _ in range(20)]

    assert draw(3) == draw(3)


def test_adjacent_grounding(domain, world):
    init = world.problem.init
    from llcexplore.relational import Atom
    s = frozenset((init - {Atom("agentat", ("x1", "y1"))})
                  | {Atom("agentat", ("x3", "y3"))})
    a = ground("move_n", domain, world.universe, random.Random(0),
               Grounding.ADJACENT, world, s)
    assert a == GroundAction("move_n", ("x3", "y4"))


def test_zero_steps(world, domain, llcs):
    result = run(world, domain, "random", 0, 0, llcs=llcs)
    assert result.history == [] and result.progress == []


@pytest.mark.parametrize("mode", ["random", "explore"])
def test_history_chains_and_progress(world, domain, llcs, mode):
    result = run(world, domain, mode, 300, 5, llcs=llcs)
    h = result.history
    assert len(h) == 300
    assert all(h[i].post == h[i + 1].prior for i in range(len(h) - 1))
    p = result.progress
    assert all(a <= b for a, b in zip(p, p[1:])) and p[-1] <= 33


def test_explore_first_steps_are_exploratory(world, domain, llcs):
    ctl = Controller(world, domain, ControllerConfig(mode=AgentMode.EXPLORE),
                     0, llcs)
    record = ctl.step()
    assert record.tier == "lta"


def test_runs_are_deterministic(world, domain, llcs):
    a = run(world, domain, "planning", 150, 11, llcs=llcs)
    b = run(world, domain, "planning", 150, 11, llcs=llcs)
    assert a.history == b.history
    assert [r.tier for r in a.trace] == [r.tier for r in b.trace]


def test_plan_is_followed_then_abandoned_on_failure(world, domain, llcs):
    ctl = Controller(world, domain,
                     ControllerConfig(mode=AgentMode.PLANNING), 0, llcs)
    ok = GroundAction("move_w", ("x2", "y1"))
    bad = GroundAction("move_n", ("x9", "y5"))
    never = GroundAction("move_w", ("x4", "y1"))
    ctl.state.plan = [ok, bad, never]
    r1 = ctl.step()
    assert (r1.tier, r1.action, r1.positive) == ("plan", ok, True)
    r2 = ctl.step()
    assert (r2.tier, r2.action, r2.positive) == ("plan", bad, False)
    assert ctl.state.plan == []
    assert ctl.step().tier != "plan"


def test_counts_recorded_before_execution(world, domain, llcs):
    ctl = Controller(world, domain, ControllerConfig(mode=AgentMode.RANDOM),
                     0, llcs)
    before = ctl.activity.active(ctl.world.state)
    r = ctl.step()
    for c in before:
        assert ctl.state.table[c, r.action.schema] == 1


def test_planning_falls_back_to_random_when_nothing_to_plan(
        world, domain, llcs):
    ctl = Controller(world, domain,
                     ControllerConfig(mode=AgentMode.PLANNING), 0, llcs)
    for a in ctl.schemas:
        ctl.state.table.record_action(llcs, a)
    r = ctl.step()
    assert r.tier == "random"
    assert ctl.planner_calls == 1


def test_planning_agent_uses_planner(world, domain, llcs):
    result = run(world, domain, "planning", 600, 0, llcs=llcs)
    assert result.planner_calls > 0
    tiers = Counter()
    ctl_run = result.trace
    for r in ctl_run:
        tiers[r.tier] += 1
    assert tiers["lta"] > 0 and tiers["random"] > 0


def test_negative_steps_rejected(world, domain, llcs):
    ctl = Controller(world, domain, ControllerConfig(), 0, llcs)
    with pytest.raises(ValueError):
        ctl.run(-1)


def test_random_mode_never_plans(world, domain, llcs):
    result = run(world, domain, "random", 200, 1, llcs=llcs)
    assert {r.tier for r in result.trace} == {"random"}
    assert agent_position(result.history[-1].post)
