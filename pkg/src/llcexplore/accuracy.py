"""Learning-accuracy metric: compare learned and perfect preconditions on
hand-authored test states."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from llcexplore.environment import Geometry, GroundAction, agent_position, \
    split_schema
from llcexplore.learner import LearnedActionModel, load_models
from llcexplore.pddl import DomainModel, ProblemInstance, parse_domain, \
    parse_problem

# Row order of the published accuracy table.
TABLE_ORDER = [
    f"{kind}_{d}" for kind in ("move", "close_door", "open_door")
    for d in ("w", "e", "n", "s", "nw", "ne", "sw", "se")
]


def data_path(*parts: str) -> Path:
    node = resources.files("llcexplore").joinpath("data")
    for part in parts:
        node = node.joinpath(part)
    return Path(str(node))


def load_domain(path: Optional[Path] = None) -> DomainModel:
    path = path or data_path("dcss_domain.pddl")
    return parse_domain(Path(path).read_text(encoding="utf-8"))


def load_problem(path: Path, domain: DomainModel) -> ProblemInstance:
    return parse_problem(Path(path).read_text(encoding="utf-8"), domain)


def load_perfect_models(domain: DomainModel,
                        path: Optional[Path] = None
                        ) -> Dict[str, LearnedActionModel]:
    return load_models(path or data_path("perfect_models.json"), domain)


@dataclass(frozen=True)
class TestState:
    name: str
    problem: ProblemInstance
    tag: str  # "closed-door" | "open-door"


def load_test_states(domain: DomainModel,
                     directory: Optional[Path] = None) -> List[TestState]:
    directory = Path(directory or data_path("test_states"))
    out = []
    for path in sorted(directory.glob("*.pddl")):
        problem = load_problem(path, domain)
        preds = {a.predicate for a in problem.init}
        if "cdoor" in preds:
            tag = "closed-door"
        elif "odoor" in preds:
            tag = "open-door"
        else:
            tag = "no-door"
        out.append(TestState(path.stem, problem, tag))
    if not out:
        raise FileNotFoundError(f"no test states in {directory}")
    return out


def adjacent_grounding(problem: ProblemInstance,
                       schema: str) -> Optional[GroundAction]:
    _, direction = split_schema(schema)
    x, y = agent_position(problem.init)
    dest = Geometry(problem.init).neighbour(x, y, direction)
    return None if dest is None else GroundAction(schema, dest)


@dataclass
class ScoreRow:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def precision(self) -> float:
        return 100.0 * self.tp / (self.tp + self.fp) if self.tp + self.fp \
            else 0.0

    @property
    def recall(self) -> float:
        return 100.0 * self.tp / (self.tp + self.fn) if self.tp + self.fn \
            else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def percent(value: float) -> int:
    """Round half up to an integer percentage."""
    return int(Decimal(repr(value)).quantize(Decimal("1"),
                                             rounding=ROUND_HALF_UP))


@dataclass
class AccuracyReport:
    rows: Dict[str, ScoreRow]

    def learned(self) -> List[str]:
        """Schemas with nonzero F1."""
        return [s for s, r in self.rows.items() if r.f1 > 0]

    def ordered(self) -> List[str]:
        known = [s for s in TABLE_ORDER if s in self.rows]
        return known + sorted(s for s in self.rows if s not in TABLE_ORDER)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["action", "precision", "recall", "f1", "tp", "fp", "fn",
                    "tn"])
        for s in self.ordered():
            r = self.rows[s]
            w.writerow([s, percent(r.precision), percent(r.recall),
                        percent(r.f1), r.tp, r.fp, r.fn, r.tn])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'action':<15}{'P':>5}{'R':>5}{'F1':>5}"]
        for s in self.ordered():
            r = self.rows[s]
            lines.append(f"{s:<15}{percent(r.precision):>5}"
                         f"{percent(r.recall):>5}{percent(r.f1):>5}")
        return "\n".join(lines) + "\n"


def evaluate_accuracy(models: Mapping[str, LearnedActionModel],
                      perfect: Mapping[str, LearnedActionModel],
                      tests: Sequence[TestState]) -> AccuracyReport:
    """Score each schema's learned precondition against the perfect one.

    Every schema is grounded at the tile adjacent to the agent in its
    direction; a missing precondition means "not executable". The perfect
    model is the ground truth for precision and recall.
    """
    rows = {s: ScoreRow() for s in perfect}
    for test in tests:
        state = test.problem.init
        universe = test.problem.objects
        for schema, truth_model in perfect.items():
            action = adjacent_grounding(test.problem, schema)
            if action is None:
                truth = guess = False
            else:
                truth = truth_model.executable(state, action.args, universe)
                model = models.get(schema)
                guess = model is not None and model.executable(
                    state, action.args, universe)
            row = rows[schema]
            if truth and guess:
                row.tp += 1
            elif guess:
                row.fp += 1
            elif truth:
                row.fn += 1
            else:
                row.tn += 1
    return AccuracyReport(rows)


def mean_report(reports: Sequence[AccuracyReport]) -> Dict[str, Tuple[
        float, float, float]]:
    """Per-schema mean (P, R, F1) over several runs."""
    out = {}
    for s in reports[0].rows:
        rs = [r.rows[s] for r in reports]
        out[s] = (sum(r.precision for r in rs) / len(rs),
                  sum(r.recall for r in rs) / len(rs),
                  sum(r.f1 for r in rs) / len(rs))
    return out

