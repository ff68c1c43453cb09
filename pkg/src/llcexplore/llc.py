"""Lifted linked clauses: generation, activity, and the per-context action
count table."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, factorial
from typing import IO, Dict, FrozenSet, Iterable, List, Mapping, Sequence, \
    Set, Tuple

from llcexplore.pddl import DomainModel
from llcexplore.relational import Clause, Literal, Predicate, State, \
    Universe, Variable, canonicalize, holds


@dataclass(frozen=True, eq=False)
class LLC:
    clause: Clause

    def __post_init__(self) -> None:
        object.__setattr__(self, "key", str(self.clause))
        object.__setattr__(self, "_hash", hash(self.key))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LLC) and self.key == other.key

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    @property
    def size(self) -> int:
        return len(self.clause)

    def predicates(self) -> FrozenSet[str]:
        return frozenset(l.predicate.name for l in self.clause)

    def __str__(self) -> str:
        return self.key

    def __lt__(self, other: "LLC") -> bool:
        return (self.size, self.key) < (other.size, other.key)


def is_connected(literals: Sequence[Literal]) -> bool:
    """Every literal shares a variable with some other literal, and the
    variable-sharing graph has a single component."""
    if len(literals) <= 1:
        return all(l.variables for l in literals)
    var_sets = [set(l.variables) for l in literals]
    if any(not vs for vs in var_sets):
        return False
    reached = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j, vs in enumerate(var_sets):
            if j not in reached and vs & var_sets[i]:
                reached.add(j)
                frontier.append(j)
    return len(reached) == len(literals)


def llc_upper_bound(domain: DomainModel, n: int) -> int:
    """``binom(M! * 2 * |P|, n)`` for a single size ``n``."""
    m = domain.max_arity
    return comb(factorial(m) * 2 * len(domain.predicates), n)


def _lifted_literals(predicates: Iterable[Predicate],
                     pool: Mapping[str, Sequence[Variable]]) -> List[Literal]:
    out = []
    for pred in predicates:
        choices = [pool.get(t, ()) for t in pred.types]
        for args in itertools.product(*choices):
            for positive in (True, False):
                out.append(Literal(pred, tuple(args), positive))
    return out


def generate_llcs(domain: DomainModel, n: int = 2) -> List[LLC]:
    """All canonical connected LLCs of size 1..n, sorted.

    Sizes above 3 are allowed but grow combinatorially.
    """
    if n < 1:
        raise ValueError("LLC size must be at least 1")
    preds = sorted(domain.predicates.values(), key=lambda p: p.name)
    pool_size = n * max(domain.max_arity, 1)
    types = sorted({t for p in preds for t in p.types})
    pool = {
        t: [Variable(f"_{t}{i}", t) for i in range(pool_size)]
        for t in types
    }
    seen: Set[Clause] = set()
    result: List[LLC] = []
    for size in range(1, n + 1):
        # Extend connected clauses of size-1 by one literal; every connected
        # clause has a literal whose removal keeps it connected, so this
        # reaches all of them.
        if size == 1:
            frontier = [
                Clause((l, )) for l in _lifted_literals(preds, {
                    t: vs[:domain.max_arity]
                    for t, vs in pool.items()
                })
            ]
        else:
            frontier = []
            for llc in result:
                if llc.size != size - 1:
                    continue
                used = llc.clause.variables()
                # Existing variables plus enough fresh ones of each type.
                local = {}
                for t in types:
                    have = [v for v in used if v.type == t]
                    fresh = [
                        Variable(f"_{t}f{i}", t)
                        for i in range(domain.max_arity)
                    ]
                    local[t] = have + fresh
                for lit in _lifted_literals(preds, local):
                    if lit in llc.clause.literals:
                        continue
                    frontier.append(Clause(llc.clause.literals + (lit, )))
        for clause in frontier:
            if not is_connected(clause.literals):
                continue
            canon = canonicalize(clause)
            if len(canon) != size or canon in seen:
                continue
            seen.add(canon)
            result.append(LLC(canon))
    return sorted(result)


def is_active(llc: LLC, state: State, universe: Universe) -> bool:
    return holds(llc.clause, state, universe)


class ActivityCache:
    """Memoizes the active LLC set per state."""

    def __init__(self, llcs: Sequence[LLC], universe: Universe):
        self.llcs = list(llcs)
        self.universe = universe
        self._cache: Dict[State, Tuple[LLC, ...]] = {}

    def active(self, state: State) -> Tuple[LLC, ...]:
        hit = self._cache.get(state)
        if hit is None:
            hit = tuple(c for c in self.llcs
                        if is_active(c, state, self.universe))
            self._cache[state] = hit
        return hit


class LLCActionTable:
    """Counts of schema executions per active LLC."""

    def __init__(self, llcs: Sequence[LLC], schemas: Sequence[str]):
        self.llcs = list(llcs)
        self.schemas = list(schemas)
        self._schema_set = set(schemas)
        self._counts: Dict[LLC, Dict[str, int]] = {
            c: dict.fromkeys(self.schemas, 0)
            for c in self.llcs
        }
        self.by_predicate: Dict[str, List[LLC]] = {}
        for c in self.llcs:
            for p in sorted(c.predicates()):
                self.by_predicate.setdefault(p, []).append(c)

    def __getitem__(self, key: Tuple[LLC, str]) -> int:
        llc, schema = key
        return self._counts[llc][schema]

    def row(self, llc: LLC) -> Mapping[str, int]:
        return self._counts[llc]

    def total(self, llc: LLC) -> int:
        return sum(self._counts[llc].values())

    def record_action(self, active: Iterable[LLC], schema: str) -> None:
        if schema not in self._schema_set:
            raise KeyError(f"unknown action schema {schema!r}")
        for c in active:
            self._counts[c][schema] += 1

    def as_dict(self) -> Dict[Tuple[str, str], int]:
        return {(c.key, a): k
                for c, row in self._counts.items()
                for a, k in row.items() if k}


def examples_count(llc: LLC, schema: str, history: Iterable,
                   universe: Universe) -> int:
    """Number of interactions taking ``schema`` from a state where ``llc`` is
    active."""
    return sum(1 for i in history if i.action.schema == schema
               and is_active(llc, i.prior, universe))


def dump_llcs(llcs: Iterable[LLC], sink: IO[str]) -> int:
    count = 0
    for c in llcs:
        sink.write(c.key + "\n")
        count += 1
    return count
