"""Agent run loop and action selection."""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Dict, List, Optional, Sequence, Tuple

from llcexplore.environment import GridWorld, GroundAction, WorldState
from llcexplore.learner import Interaction, LearnedActionModel, \
    TransitionModelLearner
from llcexplore.llc import LLC, ActivityCache, LLCActionTable, generate_llcs
from llcexplore.pddl import DomainModel
from llcexplore.planner import MAX_DEPTH, MAX_NODES, Plan, PlannerCache, \
    PlannerTrace, llc_planner
from llcexplore.relational import State, Universe

log = logging.getLogger(__name__)


class AgentMode(str, Enum):
    RANDOM = "random"
    EXPLORE = "explore"
    PLANNING = "planning"


class Grounding(str, Enum):
    UNIFORM = "uniform"
    ADJACENT = "adjacent"


def least_taken_actions(active: Sequence[LLC], table: LLCActionTable,
                        schemas: Sequence[str]) -> List[str]:
    """Schemas never taken in the most currently-active LLCs.

    A schema scores one point per active LLC in which it has never been
    taken; all schemas tied at the highest positive score are returned.
    """
    scores = dict.fromkeys(schemas, 0)
    for c in active:
        row = table.row(c)
        for a in schemas:
            if row[a] == 0:
                scores[a] += 1
    best = max(scores.values(), default=0)
    if best == 0:
        return []
    return [a for a in schemas if scores[a] == best]


def ground(schema: str,
           domain: DomainModel,
           universe: Universe,
           rng: random.Random,
           grounding: Grounding = Grounding.UNIFORM,
           env: Optional[GridWorld] = None,
           state: Optional[State] = None) -> GroundAction:
    """Pick arguments for ``schema``: uniformly over typed constants, or the
    tile adjacent to the agent in the schema's direction."""
    if grounding is Grounding.ADJACENT and env is not None \
            and state is not None:
        action = env.adjacent_action(state, schema)
        if action is not None:
            return action
    types = domain.schemas[schema].parameter_types
    return GroundAction(schema,
                        tuple(rng.choice(universe.of_type(t)) for t in types))


@dataclass
class ControllerConfig:
    mode: AgentMode = AgentMode.PLANNING
    llc_size: int = 2
    grounding: Grounding = Grounding.UNIFORM
    max_depth: int = MAX_DEPTH
    max_nodes: int = MAX_NODES
    aggregate: str = "sum"
    max_negatives: Optional[int] = None
    planner_time_budget: Optional[float] = None


@dataclass
class StepRecord:
    step: int
    tier: str
    action: GroundAction
    positive: bool
    progress: int


@dataclass
class ControllerState:
    table: LLCActionTable
    rng: random.Random
    plan: List[GroundAction] = field(default_factory=list)
    plan_goal: Optional[LLC] = None
    history: List[Interaction] = field(default_factory=list)
    step: int = 0


class Controller:
    """Observe, select, record, execute."""

    def __init__(self,
                 env: GridWorld,
                 domain: DomainModel,
                 config: ControllerConfig,
                 seed: int = 0,
                 llcs: Optional[Sequence[LLC]] = None):
        self.env = env
        self.domain = domain
        self.config = config
        self.universe = env.universe
        self.schemas = list(domain.schemas)
        self.llcs = list(llcs) if llcs is not None else generate_llcs(
            domain, config.llc_size)
        self.activity = ActivityCache(self.llcs, self.universe)
        self.learner = TransitionModelLearner(domain, self.universe,
                                              config.max_negatives, seed)
        self.state = ControllerState(LLCActionTable(self.llcs, self.schemas),
                                     random.Random(seed))
        self.world: WorldState = env.reset()
        self.trace: List[StepRecord] = []
        self.plans: List[Plan] = []
        self.planner_calls = 0
        self.planner_trace = PlannerTrace()
        active_sets: Dict[State, frozenset] = {}

        def active(c: LLC, s: State) -> bool:
            hit = active_sets.get(s)
            if hit is None:
                hit = active_sets[s] = frozenset(self.activity.active(s))
            return c in hit

        self.planner_cache = PlannerCache(active)

    @property
    def models(self) -> Dict[str, LearnedActionModel]:
        return self.learner.models

    def random_action(self) -> GroundAction:
        schema = self.state.rng.choice(self.schemas)
        return self._ground(schema)

    def _ground(self, schema: str) -> GroundAction:
        return ground(schema, self.domain, self.universe, self.state.rng,
                      self.config.grounding, self.env, self.world.state)

    def select_action(self, s: State,
                      active: Sequence[LLC]) -> Tuple[GroundAction, str]:
        mode = self.config.mode
        st = self.state
        if mode is AgentMode.RANDOM:
            return self.random_action(), "random"
        if mode is AgentMode.PLANNING and st.plan:
            return st.plan.pop(0), "plan"
        lta = least_taken_actions(active, st.table, self.schemas)
        if lta:
            return self._ground(st.rng.choice(lta)), "lta"
        if mode is AgentMode.PLANNING:
            self.learner.learn_all(st.history)
            self.planner_calls += 1
            plan = llc_planner(s,
                               self.learner.models,
                               st.table,
                               self.universe,
                               max_depth=self.config.max_depth,
                               max_nodes=self.config.max_nodes,
                               aggregate=self.config.aggregate,
                               time_budget=self.config.planner_time_budget,
                               trace=self.planner_trace,
                               cache=self.planner_cache)
            if plan is not None and plan.actions:
                self.plans.append(plan)
                st.plan = list(plan.actions)
                st.plan_goal = plan.goal
                log.debug("plan for %s: %s", plan.goal,
                          " ".join(map(str, plan.actions)))
                return st.plan.pop(0), "planner-new"
        return self.random_action(), "random"

    def step(self) -> StepRecord:
        st = self.state
        s = self.env.observe(self.world)
        active = self.activity.active(s)
        action, tier = self.select_action(s, active)
        # Counts are recorded before execution.
        st.table.record_action(active, action.schema)
        self.world = self.env.step(self.world, action)
        inter = Interaction(s, action, self.env.observe(self.world))
        st.history.append(inter)
        if not inter.positive and tier in ("plan", "planner-new"):
            st.plan = []
            st.plan_goal = None
        record = StepRecord(st.step, tier, action, inter.positive,
                            self.env.exploration_progress(self.world))
        st.step += 1
        self.trace.append(record)
        return record

    def run(self, steps: int) -> List[Interaction]:
        if steps < 0:
            raise ValueError("steps must be non-negative")
        for _ in range(steps):
            self.step()
        self.learner.learn_all(self.state.history)
        return self.state.history


@dataclass
class RunResult:
    history: List[Interaction]
    trace: List[StepRecord]
    models: Dict[str, LearnedActionModel]
    table: LLCActionTable
    planner_calls: int = 0
    plans: int = 0

    @property
    def progress(self) -> List[int]:
        return [r.progress for r in self.trace]


def run(env: GridWorld,
        domain: DomainModel,
        mode: AgentMode | str,
        steps: int,
        seed: int = 0,
        config: Optional[ControllerConfig] = None,
        llcs: Optional[Sequence[LLC]] = None) -> RunResult:
    cfg = ControllerConfig() if config is None else config
    cfg = ControllerConfig(**{**cfg.__dict__, "mode": AgentMode(mode)})
    ctl = Controller(env, domain, cfg, seed, llcs)
    history = ctl.run(steps)
    return RunResult(history, ctl.trace, dict(ctl.models), ctl.state.table,
                     ctl.planner_calls, len(ctl.plans))


def write_run_log(trace: Sequence[StepRecord], sink: IO[str]) -> None:
    for r in trace:
        label = "positive" if r.positive else "negative"
        sink.write(f"{r.step}\t{r.tier}\t{r.action}\t{label}\t"
                   f"{r.progress}\n")
