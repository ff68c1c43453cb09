"""Tiny grid problems for planner checks."""
from llcexplore.pddl import parse_problem


def grid_problem(domain, width, height, walls=(), cdoors=(), agent=(1, 1)):
    xs = [f"x{i}" for i in range(1, width + 1)]
    ys = [f"y{i}" for i in range(1, height + 1)]
    facts = [f"(agentat x{agent[0]} y{agent[1]})"]
    facts += [f"(west {xs[i + 1]} {xs[i]})" for i in range(width - 1)]
    facts += [f"(north {ys[i + 1]} {ys[i]})" for i in range(height - 1)]
    facts += [f"(wall x{x} y{y})" for x, y in walls]
    facts += [f"(cdoor x{x} y{y})" for x, y in cdoors]
    text = (f"(define (problem fx) (:domain dcss) (:objects {' '.join(xs)} "
            f"- xcoord {' '.join(ys)} - ycoord) (:init {' '.join(facts)}))")
    return parse_problem(text, domain)


FIXTURES = {
    "corridor": dict(width=5, height=1),
    "door-corridor": dict(width=4, height=1, cdoors=[(3, 1)]),
    "room": dict(width=3, height=3, walls=[(2, 2)]),
    "u-shape": dict(width=3, height=3, walls=[(2, 2), (2, 3)],
                    agent=(3, 3)),
}
