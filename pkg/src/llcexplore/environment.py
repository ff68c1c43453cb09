"""Deterministic, fully observable grid world used as ground truth."""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Dict, FrozenSet, Iterable, List, NamedTuple, \
    Optional, Tuple

from llcexplore.pddl import ProblemInstance
from llcexplore.relational import Atom, State, Universe

# Direction -> (row step, column step); row step +1 is north, column step +1
# is east.
DIRECTIONS: Dict[str, Tuple[int, int]] = {
    "n": (1, 0),
    "s": (-1, 0),
    "e": (0, 1),
    "w": (0, -1),
    "ne": (1, 1),
    "nw": (1, -1),
    "se": (-1, 1),
    "sw": (-1, -1),
}
ACTION_KINDS = ("move", "open_door", "close_door")


class GroundAction(NamedTuple):
    schema: str
    args: Tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.schema}({', '.join(self.args)})"


def split_schema(schema: str) -> Tuple[str, str]:
    """``"open_door_ne"`` -> ``("open_door", "ne")``."""
    kind, _, direction = schema.rpartition("_")
    if kind not in ACTION_KINDS or direction not in DIRECTIONS:
        raise ValueError(f"not a grid action schema: {schema!r}")
    return kind, direction


class Geometry:
    """Adjacency derived from the static ``north``/``west`` facts."""

    def __init__(self, state: Iterable[Atom]):
        self.north_of: Dict[str, str] = {}
        self.south_of: Dict[str, str] = {}
        self.west_of: Dict[str, str] = {}
        self.east_of: Dict[str, str] = {}
        for atom in state:
            if atom.predicate == "north":
                a, b = atom.args
                self.north_of[b] = a
                self.south_of[a] = b
            elif atom.predicate == "west":
                a, b = atom.args
                self.west_of[b] = a
                self.east_of[a] = b

    def _row(self, y: str, step: int) -> Optional[str]:
        if step == 0:
            return y
        return self.north_of.get(y) if step > 0 else self.south_of.get(y)

    def _col(self, x: str, step: int) -> Optional[str]:
        if step == 0:
            return x
        return self.east_of.get(x) if step > 0 else self.west_of.get(x)

    def neighbour(self, x: str, y: str,
                  direction: str) -> Optional[Tuple[str, str]]:
        dy, dx = DIRECTIONS[direction]
        nx, ny = self._col(x, dx), self._row(y, dy)
        if nx is None or ny is None:
            return None
        return nx, ny


def agent_position(state: Iterable[Atom]) -> Tuple[str, str]:
    found = [a.args for a in state if a.predicate == "agentat"]
    if len(found) != 1:
        raise ValueError(f"expected exactly one agentat atom, found "
                         f"{len(found)}")
    return found[0][0], found[0][1]


@dataclass(frozen=True)
class WorldState:
    state: State
    visited: FrozenSet[Tuple[str, str]]

    @property
    def agent(self) -> Tuple[str, str]:
        return agent_position(self.state)


class GridWorld:
    """Transition function for the grid scenarios.

    Moving in direction d succeeds iff the destination is the tile adjacent to
    the agent in d and holds neither a wall nor a closed door. Opening
    (closing) succeeds iff the destination is adjacent in d and holds a closed
    (open) door. Anything else leaves the world unchanged.
    """

    def __init__(self, problem: ProblemInstance):
        self.problem = problem
        self.universe: Universe = problem.objects
        self.geometry = Geometry(problem.init)

    def reset(self) -> WorldState:
        init = self.problem.init
        return WorldState(init, frozenset([agent_position(init)]))

    def observe(self, world: WorldState) -> State:
        return world.state

    def succeeds(self, state: State, action: GroundAction) -> bool:
        kind, direction = split_schema(action.schema)
        if len(action.args) != 2:
            return False
        x, y = agent_position(state)
        if self.geometry.neighbour(x, y, direction) != tuple(action.args):
            return False
        dx, dy = action.args
        if kind == "move":
            return (Atom("wall", (dx, dy)) not in state
                    and Atom("cdoor", (dx, dy)) not in state)
        if kind == "open_door":
            return Atom("cdoor", (dx, dy)) in state
        return Atom("odoor", (dx, dy)) in state

    def apply(self, state: State, action: GroundAction) -> State:
        if not self.succeeds(state, action):
            return state
        kind, _ = split_schema(action.schema)
        dest = tuple(action.args)
        if kind == "move":
            old = Atom("agentat", agent_position(state))
            return (state - {old}) | {Atom("agentat", dest)}
        if kind == "open_door":
            return (state - {Atom("cdoor", dest)}) | {Atom("odoor", dest)}
        return (state - {Atom("odoor", dest)}) | {Atom("cdoor", dest)}

    def step(self, world: WorldState, action: GroundAction) -> WorldState:
        post = self.apply(world.state, action)
        if post is world.state:
            return world
        return WorldState(post, world.visited | {agent_position(post)})

    @staticmethod
    def exploration_progress(world: WorldState) -> int:
        return len(world.visited)

    def adjacent_action(self, state: State, schema: str) -> Optional[
            GroundAction]:
        """Ground ``schema`` at the tile adjacent to the agent in its
        direction, or None at the map edge."""
        _, direction = split_schema(schema)
        x, y = agent_position(state)
        dest = self.geometry.neighbour(x, y, direction)
        return None if dest is None else GroundAction(schema, dest)

    def tiles(self) -> List[Tuple[str, str]]:
        xs = self.universe.of_type("xcoord")
        ys = self.universe.of_type("ycoord")
        return [(x, y) for y in ys for x in xs]

    def render(self, world: WorldState, sink: IO[str]) -> None:
        """ASCII map, north at the top and east at the right."""
        render_state(world.state, self.universe, self.geometry, sink)


def _ordered(first: Optional[str], step: Dict[str, str]) -> List[str]:
    out = []
    while first is not None:
        out.append(first)
        first = step.get(first)
    return out


def render_state(state: State, universe: Universe, geometry: Geometry,
                 sink: IO[str]) -> None:
    xs = universe.of_type("xcoord")
    ys = universe.of_type("ycoord")
    west_edge = next((x for x in xs if x not in geometry.west_of), xs[0])
    north_edge = next((y for y in ys if y not in geometry.north_of), ys[0])
    cols = _ordered(west_edge, geometry.east_of)
    rows = _ordered(north_edge, geometry.south_of)
    for y in rows:
        cells = []
        for x in cols:
            if Atom("agentat", (x, y)) in state:
                cells.append("A ")
            elif Atom("wall", (x, y)) in state:
                cells.append("W ")
            elif Atom("cdoor", (x, y)) in state:
                cells.append("CD")
            elif Atom("odoor", (x, y)) in state:
                cells.append("OD")
            else:
                cells.append(". ")
        sink.write(" ".join(cells).rstrip() + "\n")
