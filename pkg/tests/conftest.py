import itertools

import pytest

from llcexplore.accuracy import data_path, load_domain, load_perfect_models, \
    load_problem, load_test_states
from llcexplore.environment import GridWorld, GroundAction
from llcexplore.learner import Interaction
from llcexplore.llc import generate_llcs


@pytest.fixture(scope="session")
def domain():
    return load_domain()


@pytest.fixture(scope="session")
def scenario1(domain):
    return load_problem(data_path("scenario1.pddl"), domain)


@pytest.fixture(scope="session")
def scenario2(domain):
    return load_problem(data_path("scenario2.pddl"), domain)


@pytest.fixture(scope="session")
def world(scenario1):
    return GridWorld(scenario1)


@pytest.fixture(scope="session")
def llcs(domain):
    return generate_llcs(domain, 2)


@pytest.fixture(scope="session")
def perfect(domain):
    return load_perfect_models(domain)


@pytest.fixture(scope="session")
def test_states(domain):
    return load_test_states(domain)


@pytest.fixture(scope="session")
def reachable_states(world, scenario1, domain):
    """Every state reachable from the Scenario 1 start, by exhaustive search
    over all ground actions."""
    xs = scenario1.objects.of_type("xcoord")
    ys = scenario1.objects.of_type("ycoord")
    start = scenario1.init
    seen = {start}
    frontier = [start]
    while frontier:
        s = frontier.pop()
        for schema in domain.schemas:
            for x, y in itertools.product(xs, ys):
                t = world.apply(s, GroundAction(schema, (x, y)))
                if t not in seen:
                    seen.add(t)
                    frontier.append(t)
    return sorted(seen, key=sorted)


@pytest.fixture(scope="session")
def exhaustive_interactions(world, scenario1, reachable_states):
    """schema -> every (state, grounding) interaction over reachable states."""
    xs = scenario1.objects.of_type("xcoord")
    ys = scenario1.objects.of_type("ycoord")

    def build(schema):
        out = []
        for s in reachable_states:
            for x, y in itertools.product(xs, ys):
                a = GroundAction(schema, (x, y))
                out.append(Interaction(s, a, world.apply(s, a)))
        return out

    return build


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
