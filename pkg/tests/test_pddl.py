import io

import pytest

from llcexplore.accuracy import data_path
from llcexplore.controller import AgentMode, ControllerConfig, Controller
from llcexplore.pddl import PDDLSyntaxError, PDDLTypeError, parse_domain, \
    parse_problem, parse_sexpr, read_interaction_log, serialize_domain, \
    serialize_problem, write_interaction_log
from llcexplore.relational import Atom


def count(problem, predicate):
    return sum(1 for a in problem.init if a.predicate == predicate)


def test_domain_headers(domain):
    assert set(domain.predicates) == {"agentat", "wall", "cdoor", "odoor",
                                      "north", "west"}
    assert len(domain.schemas) == 24
    assert domain.max_arity == 2
    assert all(s.parameter_types == ("xcoord", "ycoord")
               for s in domain.schemas.values())


def test_scenario1_contents(scenario1):
    assert count(scenario1, "wall") == 12
    assert count(scenario1, "north") == 4
    assert count(scenario1, "west") == 8
    assert len(scenario1.objects.of_type("xcoord")) == 9
    assert len(scenario1.objects.of_type("ycoord")) == 5
    assert Atom("agentat", ("x1", "y1")) in scenario1.init
    assert Atom("cdoor", ("x8", "y4")) in scenario1.init


def test_scenario2_parses(scenario2):
    assert count(scenario2, "agentat") == 1
    assert count(scenario2, "north") + count(scenario2, "west") > 0


def test_problem_round_trip(scenario1, domain):
    assert parse_problem(serialize_problem(scenario1), domain) == scenario1


def test_domain_round_trip(domain):
    again = parse_domain(serialize_domain(domain))
    assert again.predicates == domain.predicates
    assert again.schemas == domain.schemas


def test_unbalanced_parenthesis_reports_position():
    with pytest.raises(PDDLSyntaxError) as err:
        parse_sexpr("(define\n  (problem p)\n  (:init (a b)")
    assert err.value.line >= 1


def test_stray_close_reports_line_and_column():
    with pytest.raises(PDDLSyntaxError) as err:
        parse_sexpr("(a b))")
    assert (err.value.line, err.value.col) == (1, 6)


PROBLEM = """(define (problem t) (:domain dcss)
  (:objects x1 x2 - xcoord y1 - ycoord)
  (:init {init}))"""


def test_problem_unknown_predicate(domain):
    with pytest.raises(PDDLTypeError, match="unknown predicate"):
        parse_problem(PROBLEM.format(init="(lava x1 y1)"), domain)


def test_problem_arity_mismatch(domain):
    with pytest.raises(PDDLTypeError, match="arity"):
        parse_problem(PROBLEM.format(init="(wall x1)"), domain)


def test_problem_type_mismatch(domain):
    with pytest.raises(PDDLTypeError, match="expected"):
        parse_problem(PROBLEM.format(init="(wall y1 x1)"), domain)


def test_problem_unknown_object(domain):
    with pytest.raises(PDDLTypeError, match="unknown object"):
        parse_problem(PROBLEM.format(init="(wall x7 y1)"), domain)


def test_domain_duplicate_predicate_rejected():
    text = """(define (domain d) (:types a)
      (:predicates (p ?x - a) (p ?y - a)))"""
    with pytest.raises(Exception):
        parse_domain(text)


def test_interaction_log_round_trip(world, domain, llcs):
    ctl = Controller(world, domain, ControllerConfig(mode=AgentMode.EXPLORE),
                     3, llcs)
    ctl.run(150)
    buf = io.StringIO()
    assert write_interaction_log(ctl.state.history, buf) == 150
    buf.seek(0)
    assert read_interaction_log(buf) == ctl.state.history


def test_interaction_log_empty_history():
    buf = io.StringIO()
    assert write_interaction_log([], buf) == 0
    assert read_interaction_log(io.StringIO(buf.getvalue())) == []


def test_shipped_files_exist():
    assert data_path("scenario1.pddl").is_file()
    assert data_path("perfect_models.json").is_file()
