import io
import random
import time

import pytest

from llcexplore.controller import Controller, ControllerConfig, AgentMode
from llcexplore.llc import LLC, ActivityCache, LLCActionTable, dump_llcs, \
    examples_count, generate_llcs, is_active, is_connected, llc_upper_bound
from llcexplore.relational import Clause, Literal, Predicate, Variable

from oracles import brute_llcs, literal_rows, normal_form, rescan_counts

WALL = Predicate("wall", ("xcoord", "ycoord"))
AGENTAT = Predicate("agentat", ("xcoord", "ycoord"))
X, Y = Variable("X", "xcoord"), Variable("Y", "ycoord")
X2 = Variable("X2", "xcoord")


def test_scenario_llc_count_and_bound(domain, llcs):
    assert llc_upper_bound(domain, 2) == 276
    assert len(llcs) == 258 <= 276
    assert sum(1 for c in llcs if c.size == 1) == 16


def test_llcs_match_brute_force_enumeration(domain, llcs):
    start = time.perf_counter()
    generated = generate_llcs(domain, 2)
    assert time.perf_counter() - start < 5
    oracle = brute_llcs([(p.name, p.types)
                         for p in domain.predicates.values()], 2)
    assert {normal_form(literal_rows(c.clause)) for c in generated} == oracle


def test_llcs_sorted_and_unique(llcs):
    assert llcs == sorted(llcs)
    assert len({c.key for c in llcs}) == len(llcs)


def test_llcs_size_one(domain):
    assert len(generate_llcs(domain, 1)) == 16


def test_llc_size_must_be_positive(domain):
    with pytest.raises(ValueError):
        generate_llcs(domain, 0)


def test_connectedness():
    assert is_connected([Literal(AGENTAT, (X, Y)), Literal(WALL, (X2, Y))])
    assert not is_connected([Literal(AGENTAT, (X, Y)),
                             Literal(WALL, (X2, Variable("Y2", "ycoord")))])


def test_every_generated_llc_is_connected(llcs):
    assert all(is_connected(c.clause.literals) for c in llcs)


def test_activity_on_start_state(scenario1):
    u = scenario1.objects
    s = scenario1.init
    # Agent stands on a tile without a wall.
    assert is_active(LLC(Clause((Literal(AGENTAT, (X, Y)),
                                 Literal(WALL, (X, Y), False)))), s, u)
    # Agent is not on a wall.
    assert not is_active(LLC(Clause((Literal(AGENTAT, (X, Y)),
                                     Literal(WALL, (X, Y))))), s, u)


def test_activity_cache_matches_direct_evaluation(llcs, scenario1):
    cache = ActivityCache(llcs, scenario1.objects)
    direct = tuple(c for c in llcs
                   if is_active(c, scenario1.init, scenario1.objects))
    assert cache.active(scenario1.init) == direct
    assert cache.active(scenario1.init) is cache.active(scenario1.init)


def test_table_counts_and_unknown_schema(llcs, domain):
    table = LLCActionTable(llcs, list(domain.schemas))
    table.record_action(llcs[:3], "move_n")
    table.record_action(llcs[1:2], "move_n")
    assert table[llcs[1], "move_n"] == 2
    assert table[llcs[0], "move_n"] == 1
    assert table[llcs[5], "move_n"] == 0
    assert table.total(llcs[1]) == 2
    with pytest.raises(KeyError):
        table.record_action(llcs[:1], "fly")


def test_table_by_predicate_index(llcs, domain):
    table = LLCActionTable(llcs, list(domain.schemas))
    assert all("wall" in c.predicates() for c in table.by_predicate["wall"])
    assert sum(len(v) for v in table.by_predicate.values()) >= len(llcs)


def test_dump_llcs(llcs):
    buf = io.StringIO()
    assert dump_llcs(llcs, buf) == 258
    lines = buf.getvalue().splitlines()
    assert lines[0] == llcs[0].key


@pytest.mark.parametrize("seed", range(5))
def test_incremental_counts_equal_rescan(seed, world, domain, llcs,
                                         scenario1):
    ctl = Controller(world, domain, ControllerConfig(mode=AgentMode.EXPLORE),
                     seed, llcs)
    ctl.run(200)
    u = scenario1.objects
    oracle = rescan_counts(ctl.state.history, llcs, ctl.schemas,
                           lambda c, s: is_active(c, s, u))
    got = {(c.key, a): ctl.state.table[c, a]
           for c in llcs for a in ctl.schemas}
    assert got == oracle
    rng = random.Random(seed)
    c = rng.choice(llcs)
    a = rng.choice(ctl.schemas)
    assert examples_count(c, a, ctl.state.history, u) == oracle[(c.key, a)]
