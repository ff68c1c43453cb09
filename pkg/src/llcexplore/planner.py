"""Exploration planner: pick least-explored LLCs as goals and search the
learned transition model for a plan that makes one of them active."""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, \
    Optional, Sequence, Set, Tuple

from llcexplore.environment import GroundAction
from llcexplore.learner import LearnedActionModel
from llcexplore.llc import LLC, LLCActionTable, is_active
from llcexplore.relational import State, Universe

MAX_DEPTH = 25
MAX_NODES = 50_000


@dataclass
class Plan:
    actions: List[GroundAction]
    goal: LLC
    final_state: State

    def __len__(self) -> int:
        return len(self.actions)


class SearchStatus(Enum):
    FOUND = "found"
    UNREACHABLE = "unreachable"
    BUDGET = "budget"


@dataclass
class GoalLedger:
    done: Set[LLC] = field(default_factory=set)


def contexts_with_least_actions(table: LLCActionTable,
                                ledger: GoalLedger,
                                aggregate: str = "sum") -> List[LLC]:
    """Return the batch of not-yet-attempted LLCs with the smallest recorded
    action count, in canonical order, and mark them attempted.

    Only LLCs in which some schema has never been taken are candidates:
    reaching a fully explored context yields no new action to try.
    ``aggregate`` is ``"sum"`` (total count over all schemas) or ``"min"``
    (count of the least-taken schema).
    """
    if aggregate == "sum":
        score = table.total
    elif aggregate == "min":
        score = lambda c: min(table.row(c).values(), default=0)  # noqa: E731
    else:
        raise ValueError(f"unknown aggregate {aggregate!r}")
    remaining = [
        c for c in table.llcs
        if c not in ledger.done and min(table.row(c).values(), default=0) == 0
    ]
    if not remaining:
        return []
    scores = {c: score(c) for c in remaining}
    low = min(scores.values())
    batch = sorted(c for c in remaining if scores[c] == low)
    ledger.done.update(batch)
    return batch


def _successors(models: Iterable[LearnedActionModel], state: State,
                universe: Universe):
    for model in models:
        yield from model.successors(state, universe)


class _SearchTree:
    """Breadth-first expansion of the learned model from one start state,
    shared by all goals tried within one planner call.

    States are discovered in FIFO order until ``max_nodes`` are known or the
    depth bound is hit; a per-goal search with the same bounds would discover
    the same states in the same order, so the shallowest goal state is the
    first match in discovery order.
    """

    def __init__(self,
                 models: Sequence[LearnedActionModel],
                 start: State,
                 universe: Universe,
                 max_depth: int,
                 max_nodes: int,
                 active: Optional[Callable[[LLC, State], bool]] = None):
        self.models = [m for m in models if m.precondition is not None]
        self.universe = universe
        self.active = active or (lambda c, s: is_active(c, s, universe))
        self.max_depth = max_depth
        self.max_nodes = max_nodes
        self.order: List[State] = [start]
        self.parent: Dict[State, Optional[Tuple[State, GroundAction]]] = {
            start: None
        }
        self.depth: Dict[State, int] = {start: 0}
        self._queue = deque([start])
        self.truncated = False

    def expand_all(self, deadline: Optional[float] = None) -> None:
        while self._queue:
            if deadline is not None and time.monotonic() > deadline:
                self.truncated = True
                return
            state = self._queue.popleft()
            d = self.depth[state]
            if d >= self.max_depth:
                if any(True for _ in _successors(self.models, state,
                                                  self.universe)):
                    self.truncated = True
                continue
            for action, nxt in _successors(self.models, state, self.universe):
                if nxt in self.parent:
                    continue
                if len(self.order) >= self.max_nodes:
                    self.truncated = True
                    self._queue.clear()
                    return
                self.parent[nxt] = (state, action)
                self.depth[nxt] = d + 1
                self.order.append(nxt)
                self._queue.append(nxt)

    def plan_to(self, state: State) -> List[GroundAction]:
        actions = []
        link = self.parent[state]
        while link is not None:
            prev, action = link
            actions.append(action)
            link = self.parent[prev]
        return actions[::-1]

    def find(self, goal: LLC) -> Optional[State]:
        for s in self.order:
            if self.active(goal, s):
                return s
        return None


def search(models: Mapping[str, LearnedActionModel] | Sequence[
        LearnedActionModel],
           start: State,
           goal: LLC,
           universe: Universe,
           max_depth: int = MAX_DEPTH,
           max_nodes: int = MAX_NODES) -> Tuple[Optional[Plan], SearchStatus]:
    """Breadth-first search for a state where ``goal`` is active.

    The goal test happens when a state is dequeued; duplicate states are
    pruned by set equality.
    """
    ms = list(models.values()) if isinstance(models, Mapping) else list(models)
    ms = [m for m in ms if m.precondition is not None]
    parent: Dict[State, Optional[Tuple[State, GroundAction]]] = {start: None}
    depth = {start: 0}
    queue = deque([start])
    truncated = False
    while queue:
        state = queue.popleft()
        if is_active(goal, state, universe):
            actions = []
            link = parent[state]
            while link is not None:
                prev, action = link
                actions.append(action)
                link = parent[prev]
            return Plan(actions[::-1], goal, state), SearchStatus.FOUND
        if depth[state] >= max_depth:
            truncated = truncated or any(
                True for _ in _successors(ms, state, universe))
            continue
        for action, nxt in _successors(ms, state, universe):
            if nxt in parent:
                continue
            if len(parent) >= max_nodes:
                truncated = True
                continue
            parent[nxt] = (state, action)
            depth[nxt] = depth[state] + 1
            queue.append(nxt)
    return None, SearchStatus.BUDGET if truncated else SearchStatus.UNREACHABLE


def forward_plan(models, start: State, goal: LLC, universe: Universe,
                 max_depth: int = MAX_DEPTH,
                 max_nodes: int = MAX_NODES) -> Optional[Plan]:
    return search(models, start, goal, universe, max_depth, max_nodes)[0]


def _changeable_predicates(
        models: Iterable[LearnedActionModel]) -> Set[str]:
    out: Set[str] = set()
    for m in models:
        if m.precondition is None:
            continue
        for lit in m.add_effects + m.del_effects:
            out.add(lit.predicate.name)
    return out


@dataclass
class PlannerTrace:
    goals_tried: int = 0
    goals_skipped: int = 0
    batches: int = 0
    cache_hits: int = 0


def model_signature(models: Iterable[LearnedActionModel]) -> Tuple:
    """Hashable summary of everything the search depends on."""
    return tuple((m.schema, m.parameters, m.precondition, m.add_effects,
                  m.del_effects) for m in models
                 if m.precondition is not None)


class PlannerCache:
    """Reuses work across planner calls.

    The search tree depends only on the start state and the learned models,
    so it is kept while both are unchanged. A call that found no plan is
    remembered together with the set of candidate goals: with the same start,
    models and candidates the answer is again "no plan".
    """

    def __init__(self,
                 active: Optional[Callable[[LLC, State], bool]] = None):
        self.active = active
        self._tree_key: Optional[Tuple] = None
        self._tree: Optional[_SearchTree] = None
        self._failed: Set[Tuple] = set()

    def tree(self, key: Tuple, build: Callable[[], "_SearchTree"]
             ) -> "_SearchTree":
        if self._tree is None or self._tree_key != key:
            self._tree = build()
            self._tree_key = key
        return self._tree

    def known_failure(self, key: Tuple) -> bool:
        return key in self._failed

    def record_failure(self, key: Tuple) -> None:
        self._failed.add(key)


def _open_contexts(table: LLCActionTable) -> FrozenSet[LLC]:
    return frozenset(c for c in table.llcs
                     if min(table.row(c).values(), default=0) == 0)


def llc_planner(state: State,
                models: Mapping[str, LearnedActionModel],
                table: LLCActionTable,
                universe: Universe,
                max_depth: int = MAX_DEPTH,
                max_nodes: int = MAX_NODES,
                aggregate: str = "sum",
                time_budget: Optional[float] = None,
                trace: Optional[PlannerTrace] = None,
                cache: Optional[PlannerCache] = None) -> Optional[Plan]:
    """Try goal batches from least-explored upwards; return the first
    non-empty plan found, or None once every LLC has been attempted.

    Goals that are inactive now and mention no predicate any learned effect
    can change are skipped without search.
    """
    ms = [models[k] for k in sorted(models)]
    changeable = _changeable_predicates(ms)
    trace = trace if trace is not None else PlannerTrace()
    cache = cache if cache is not None else PlannerCache()
    active = cache.active or (lambda c, s: is_active(c, s, universe))
    tree_key = (state, model_signature(ms), max_depth, max_nodes)
    failure_key = (tree_key, _open_contexts(table))
    if time_budget is None and cache.known_failure(failure_key):
        trace.cache_hits += 1
        return None
    ledger = GoalLedger()
    tree: Optional[_SearchTree] = None
    deadline = None if time_budget is None else time.monotonic() + time_budget

    def build() -> _SearchTree:
        t = _SearchTree(ms, state, universe, max_depth, max_nodes, active)
        t.expand_all(deadline)
        return t

    while True:
        batch = contexts_with_least_actions(table, ledger, aggregate)
        if not batch:
            if time_budget is None:
                cache.record_failure(failure_key)
            return None
        trace.batches += 1
        for goal in batch:
            if not (goal.predicates() & changeable) and not active(
                    goal, state):
                trace.goals_skipped += 1
                continue
            trace.goals_tried += 1
            if tree is None:
                tree = (cache.tree(tree_key, build)
                        if time_budget is None else build())
            hit = tree.find(goal)
            if hit is not None and hit != state:
                return Plan(tree.plan_to(hit), goal, hit)
