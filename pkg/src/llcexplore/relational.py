"""Terms, atoms, literals, clauses and closed-world clause satisfaction."""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, \
    NamedTuple, Optional, Sequence, Tuple, Union


class Variable(NamedTuple):
    name: str
    type: str

    def __str__(self) -> str:
        return self.name


class Constant(NamedTuple):
    name: str
    type: str

    def __str__(self) -> str:
        return self.name


Term = Union[Variable, str]
Binding = Dict[Variable, str]


@dataclass(frozen=True)
class Predicate:
    name: str
    types: Tuple[str, ...]

    def __hash__(self) -> int:
        return hash((self.name, self.types))

    @property
    def arity(self) -> int:
        return len(self.types)

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


class Atom(NamedTuple):
    """A ground atom. Arguments are constant names; their types live in the
    owning :class:`Universe`."""
    predicate: str
    args: Tuple[str, ...]

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate, ) + self.args) + ")"


State = FrozenSet[Atom]


class Universe:
    """Typed constants, kept in declaration order."""

    def __init__(self, constants: Mapping[str, Sequence[str]]):
        self._by_type: Dict[str, Tuple[str, ...]] = {
            t: tuple(names)
            for t, names in constants.items()
        }
        self._type_of: Dict[str, str] = {}
        for t, names in self._by_type.items():
            for name in names:
                if name in self._type_of and self._type_of[name] != t:
                    raise ValueError(f"constant {name!r} declared with two "
                                     f"types")
                self._type_of[name] = t

    def of_type(self, type_name: str) -> Tuple[str, ...]:
        return self._by_type.get(type_name, ())

    def type_of(self, name: str) -> Optional[str]:
        return self._type_of.get(name)

    @property
    def types(self) -> Tuple[str, ...]:
        return tuple(self._by_type)

    def constants(self) -> List[Constant]:
        return [Constant(n, t) for t, ns in self._by_type.items() for n in ns]

    def as_dict(self) -> Dict[str, Tuple[str, ...]]:
        return dict(self._by_type)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Universe) and self._by_type == other._by_type

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._by_type.items())))

    def __repr__(self) -> str:
        return f"Universe({self._by_type!r})"


@dataclass(frozen=True)
class Literal:
    predicate: Predicate
    args: Tuple[Term, ...]
    positive: bool = True

    def __post_init__(self) -> None:
        if len(self.args) != self.predicate.arity:
            raise ValueError(f"{self.predicate.name} expects "
                             f"{self.predicate.arity} arguments, got "
                             f"{len(self.args)}")
        for arg, t in zip(self.args, self.predicate.types):
            if isinstance(arg, Variable) and arg.type != t:
                raise TypeError(f"variable {arg.name} of type {arg.type} "
                                f"used where {t} expected in "
                                f"{self.predicate.name}")
        object.__setattr__(
            self, "_hash",
            hash((self.predicate.name, self.args, self.positive)))
        object.__setattr__(
            self, "_vars",
            tuple(a for a in self.args if isinstance(a, Variable)))

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    @property
    def variables(self) -> Tuple[Variable, ...]:
        return self._vars  # type: ignore[attr-defined]

    def negate(self) -> "Literal":
        return Literal(self.predicate, self.args, not self.positive)

    def ground(self, binding: Mapping[Variable, str]) -> Atom:
        return Atom(self.predicate.name,
                    tuple(binding[a] if isinstance(a, Variable) else a
                          for a in self.args))

    def __str__(self) -> str:
        body = f"{self.predicate.name}({', '.join(map(str, self.args))})"
        return body if self.positive else "not " + body


@dataclass(frozen=True)
class Clause:
    """An ordered conjunction of literals."""
    literals: Tuple[Literal, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash(self.literals))

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    def variables(self) -> Tuple[Variable, ...]:
        return _clause_variables(self)

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def __str__(self) -> str:
        return "{" + ", ".join(map(str, self.literals)) + "}"


def unify_literal(lit: Literal, atom: Atom,
                  binding: Mapping[Variable, str]) -> Optional[Binding]:
    """Extend ``binding`` so that ``lit`` grounds to ``atom``, or return None."""
    if lit.predicate.name != atom.predicate or len(lit.args) != len(atom.args):
        return None
    out = dict(binding)
    for term, value in zip(lit.args, atom.args):
        if isinstance(term, Variable):
            bound = out.get(term)
            if bound is None:
                out[term] = value
            elif bound != value:
                return None
        elif term != value:
            return None
    return out


@functools.lru_cache(maxsize=8192)
def _index(state: State) -> Dict[str, Tuple[Tuple[str, ...], ...]]:
    idx: Dict[str, List[Tuple[str, ...]]] = {}
    for atom in sorted(state):
        idx.setdefault(atom.predicate, []).append(atom.args)
    return {k: tuple(v) for k, v in idx.items()}


def _order_positives(positives: Sequence[Literal],
                     bound: Iterable[Variable]) -> List[Literal]:
    # Greedy join order: most already-bound variables first, ties keep
    # clause order.
    known = set(bound)
    remaining = list(positives)
    ordered = []
    while remaining:
        best = max(range(len(remaining)),
                   key=lambda i: (sum(v in known for v in remaining[i].
                                      variables), -i))
        lit = remaining.pop(best)
        ordered.append(lit)
        known.update(lit.variables)
    return ordered


@functools.lru_cache(maxsize=65536)
def _clause_variables(clause: Clause) -> Tuple[Variable, ...]:
    seen: Dict[Variable, None] = {}
    for lit in clause.literals:
        for v in lit.variables:
            seen.setdefault(v, None)
    return tuple(seen)


@functools.lru_cache(maxsize=65536)
def _compile(clause: Clause, bound: FrozenSet[Variable]):
    positives = _order_positives([l for l in clause if l.positive], bound)
    negatives = [l for l in clause if not l.positive]
    after = set(bound)
    for lit in positives:
        after.update(lit.variables)
    early = tuple(l for l in negatives if all(v in after
                                              for v in l.variables))
    late = tuple(l for l in negatives if l not in early)
    free = tuple(v for v in clause.variables() if v not in after)
    return tuple(positives), early, late, free


def satisfy(clause: Clause,
            state: State,
            universe: Universe,
            binding: Optional[Mapping[Variable, str]] = None
            ) -> Iterator[Binding]:
    """Yield every total binding of the clause's variables that satisfies it.

    Positive literals must be in ``state``; negated literals hold when their
    grounding is absent (closed world). Variables that occur only under
    negation range over their type in ``universe``.
    """
    start: Binding = dict(binding or {})
    positives, early_neg, late_neg, free = _compile(clause, frozenset(start))
    index = _index(state)

    def negatives_ok(b: Mapping[Variable, str],
                     lits: Sequence[Literal]) -> bool:
        return all(lit.ground(b) not in state for lit in lits)

    free_domains = [universe.of_type(v.type) for v in free]

    def close(b: Binding) -> Iterator[Binding]:
        if not negatives_ok(b, early_neg):
            return
        if not free:
            yield b
            return
        for combo in itertools.product(*free_domains):
            nb = dict(b)
            nb.update(zip(free, combo))
            if negatives_ok(nb, late_neg):
                yield nb

    def extend(i: int, b: Binding) -> Iterator[Binding]:
        if i == len(positives):
            yield from close(b)
            return
        lit = positives[i]
        for args in index.get(lit.predicate.name, ()):
            nb = unify_literal(lit, Atom(lit.predicate.name, args), b)
            if nb is not None:
                yield from extend(i + 1, nb)

    yield from extend(0, start)


def holds(clause: Clause, state: State, universe: Universe,
          binding: Optional[Mapping[Variable, str]] = None) -> bool:
    return next(satisfy(clause, state, universe, binding), None) is not None


def state_diff(before: State, after: State) -> Tuple[FrozenSet[Atom],
                                                     FrozenSet[Atom]]:
    """Return ``(adds, dels)`` taking ``before`` to ``after``."""
    return frozenset(after - before), frozenset(before - after)


def _pattern(literals: Sequence[Literal]) -> Tuple:
    names: Dict[Variable, int] = {}
    out = []
    for lit in literals:
        args = []
        for a in lit.args:
            if isinstance(a, Variable):
                args.append((0, names.setdefault(a, len(names))))
            else:
                args.append((1, a))
        out.append((lit.predicate.name, not lit.positive, tuple(args)))
    return tuple(out)


def canonicalize(clause: Clause) -> Clause:
    """Return the canonical alpha-variant of ``clause``.

    Literals are grouped by (predicate name, positive before negated); within
    each group the permutation with the lexicographically smallest argument
    pattern (variables numbered by first occurrence) is chosen, and variables
    are renamed V0, V1, ... in that order. Duplicate literals are dropped.
    """
    unique = list(dict.fromkeys(clause.literals))
    groups: Dict[Tuple[str, bool], List[Literal]] = {}
    for lit in unique:
        groups.setdefault((lit.predicate.name, not lit.positive),
                          []).append(lit)
    keys = sorted(groups)
    best: Optional[Tuple] = None
    best_order: Sequence[Literal] = ()
    for choice in itertools.product(
            *(itertools.permutations(groups[k]) for k in keys)):
        order = [lit for perm in choice for lit in perm]
        pat = _pattern(order)
        if best is None or pat < best:
            best, best_order = pat, order
    renaming: Dict[Variable, Variable] = {}
    out = []
    for lit in best_order:
        args = []
        for a in lit.args:
            if isinstance(a, Variable):
                if a not in renaming:
                    renaming[a] = Variable(f"V{len(renaming)}", a.type)
                args.append(renaming[a])
            else:
                args.append(a)
        out.append(Literal(lit.predicate, tuple(args), lit.positive))
    return Clause(tuple(out))
