"""Transition model learner.

Interactions are labelled by whether they changed the state. Preconditions
are learned per action schema with a greedy FOIL-style search over
mode-declared literals; effects are obtained by lifting state differences.
"""
from __future__ import annotations

import json
import logging
import math
import random
import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, \
    Optional, Sequence, Tuple

from llcexplore.environment import GroundAction
from llcexplore.pddl import ActionSchema, DomainModel
from llcexplore.relational import Atom, Binding, Clause, Literal, Predicate, \
    State, Universe, Variable, _index, satisfy, state_diff

HEAD_NAMES = "XYZUW"

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Interaction:
    prior: State
    action: GroundAction
    post: State

    @property
    def positive(self) -> bool:
        return self.prior != self.post

    @property
    def label(self) -> str:
        return "positive" if self.positive else "negative"


def label(prior: State, action: GroundAction, post: State) -> Interaction:
    return Interaction(prior, action, post)


@dataclass(frozen=True)
class ModeDeclaration:
    """Body literal template: any slot may take a head variable, an
    existing existential, or a fresh one; both signs are allowed."""
    predicate: Predicate
    allow_negated: bool = True
    allow_fresh: bool = True


def mode_declarations(domain: DomainModel) -> List[ModeDeclaration]:
    return [
        ModeDeclaration(p)
        for p in sorted(domain.predicates.values(), key=lambda p: p.name)
    ]


def head_variables(schema: ActionSchema) -> Tuple[Variable, ...]:
    names = list(HEAD_NAMES) + [f"H{i}" for i in range(len(HEAD_NAMES), 99)]
    return tuple(
        Variable(names[i], t) for i, t in enumerate(schema.parameter_types))


@dataclass
class LearnedActionModel:
    schema: str
    parameters: Tuple[Variable, ...]
    precondition: Optional[Clause] = None
    add_effects: Tuple[Literal, ...] = ()
    del_effects: Tuple[Literal, ...] = ()
    residual: int = 0
    conflict: bool = False
    n_positive: int = 0
    n_negative: int = 0

    @property
    def status(self) -> str:
        return "unknown" if self.precondition is None else "learned"

    def _bindings(self, state: State, universe: Universe,
                  binding: Optional[Binding] = None) -> Iterator[Binding]:
        assert self.precondition is not None
        missing = [
            v for v in self.parameters
            if v not in self.precondition.variables()
            and (binding is None or v not in binding)
        ]
        for b in satisfy(self.precondition, state, universe, binding):
            if not missing:
                yield b
                continue
            for combo in _product(universe, missing):
                nb = dict(b)
                nb.update(zip(missing, combo))
                yield nb

    def executable(self, state: State, args: Sequence[str],
                   universe: Universe) -> bool:
        if self.precondition is None:
            return False
        head = dict(zip(self.parameters, args))
        return next(self._bindings(state, universe, head), None) is not None

    def apply(self, state: State, binding: Mapping[Variable, str]) -> State:
        dels = {l.ground(binding) for l in self.del_effects}
        adds = {l.ground(binding) for l in self.add_effects}
        return (state - dels) | adds

    def successors(self, state: State,
                   universe: Universe) -> Iterator[Tuple[GroundAction, State]]:
        """Predicted (action, next state) pairs, one per ground action."""
        if self.precondition is None:
            return
        seen = set()
        for b in self._bindings(state, universe):
            args = tuple(b[v] for v in self.parameters)
            if args in seen:
                continue
            seen.add(args)
            yield GroundAction(self.schema, args), self.apply(state, b)

    def rule_text(self) -> str:
        head = f"{self.schema}({', '.join(v.name for v in self.parameters)})"
        if self.precondition is None:
            return f"% {head}: unknown"
        if not len(self.precondition):
            return head + "."
        return head + " :- " + ", ".join(map(str, self.precondition)) + "."

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "rule": self.rule_text(),
            "adds": [str(l) for l in self.add_effects],
            "dels": [str(l) for l in self.del_effects],
            "residual": self.residual,
            "conflict": self.conflict,
            "positives": self.n_positive,
            "negatives": self.n_negative,
        }


def _product(universe: Universe, variables: Sequence[Variable]):
    import itertools
    return itertools.product(*(universe.of_type(v.type) for v in variables))


# --- FOIL-style precondition search ----------------------------------------


@dataclass
class _Tuples:
    pos: List[Tuple[int, Binding]]
    neg: List[Tuple[int, Binding]]


@dataclass
class _Candidate:
    literal: Literal
    new_vars: Tuple[Variable, ...]
    gain: float
    tuples: _Tuples
    determinate: bool
    depth: int = 0

    @property
    def order_key(self) -> Tuple:
        return (-self.gain, len(self.new_vars), self.depth,
                _literal_key(self.literal))


def _literal_key(lit: Literal) -> Tuple:
    return (lit.predicate.name, not lit.positive,
            tuple(a.name if isinstance(a, Variable) else a for a in lit.args))


def _info(p: int, n: int) -> float:
    return -math.log2(p / (p + n))


def _extend(lit: Literal, states: Sequence[State],
            tuples: Sequence[Tuple[int, Binding]]
            ) -> Tuple[List[Tuple[int, Binding]], List[int]]:
    """Extend each tuple through ``lit``. Returns the new tuples and the
    number of extensions of each input tuple."""
    out: List[Tuple[int, Binding]] = []
    per: List[int] = []
    name = lit.predicate.name
    if not lit.positive:
        for ex, b in tuples:
            ok = lit.ground(b) not in states[ex]
            per.append(1 if ok else 0)
            if ok:
                out.append((ex, b))
        return out, per
    for ex, b in tuples:
        k = 0
        for args in _index(states[ex]).get(name, ()):
            nb = None
            ok = True
            for term, value in zip(lit.args, args):
                if isinstance(term, Variable):
                    bound = b.get(term) if nb is None else nb.get(term)
                    if bound is None:
                        if nb is None:
                            nb = dict(b)
                        nb[term] = value
                    elif bound != value:
                        ok = False
                        break
                elif term != value:
                    ok = False
                    break
            if ok:
                out.append((ex, nb if nb is not None else b))
                k += 1
        per.append(k)
    return out, per


def _redundant(cand: "_Candidate", variables: Sequence[Variable]) -> bool:
    """True when every new variable of ``cand`` always takes the value of an
    existing variable, so the literal adds nothing but a longer chain."""
    rows = [b for _, b in cand.tuples.pos + cand.tuples.neg]
    for v in cand.new_vars:
        if not any(w.type == v.type and all(b[v] == b[w] for b in rows)
                   for w in variables):
            return False
    return True


def _candidate_literals(modes: Sequence[ModeDeclaration],
                        variables: Sequence[Variable], fresh_start: int,
                        max_fresh_per_literal: int,
                        existing: Sequence[Literal]) -> Iterator[Tuple[
                            Literal, Tuple[Variable, ...]]]:
    import itertools
    have = set(existing)
    for mode in modes:
        pred = mode.predicate
        slot_choices = []
        for i, t in enumerate(pred.types):
            opts: List[Optional[Variable]] = [v for v in variables
                                              if v.type == t]
            if mode.allow_fresh:
                opts.append(None)
            slot_choices.append(opts)
        for combo in itertools.product(*slot_choices):
            n_new = sum(1 for c in combo if c is None)
            if n_new > max_fresh_per_literal:
                continue
            args = []
            new_vars = []
            for c, t in zip(combo, pred.types):
                if c is None:
                    v = Variable(f"V{fresh_start + len(new_vars)}", t)
                    new_vars.append(v)
                    args.append(v)
                else:
                    args.append(c)
            if n_new == len(args):
                continue
            pos = Literal(pred, tuple(args), True)
            if pos not in have:
                yield pos, tuple(new_vars)
            if mode.allow_negated and not new_vars:
                neg = Literal(pred, tuple(args), False)
                if neg not in have:
                    yield neg, ()


@dataclass
class PreconditionResult:
    clause: Optional[Clause]
    residual: int = 0
    covered_positives: int = 0


def learn_preconditions(schema: ActionSchema,
                        positives: Sequence[Interaction],
                        negatives: Sequence[Interaction],
                        modes: Sequence[ModeDeclaration],
                        universe: Universe,
                        max_literals: int = 8,
                        max_fresh_per_literal: int = 2,
                        max_existentials: int = 4) -> PreconditionResult:
    """Greedy single-clause covering.

    Starts from an empty body and repeatedly adds the literal with the best
    FOIL information gain until no negative example is covered or nothing
    improves. When no literal reaches 80% of the attainable gain, all
    determinate literals (one extension per positive tuple, at most one per
    negative) are added first so that gainless linking literals such as the
    agent's position can be introduced; a determinate literal whose new
    variables merely copy existing ones is skipped. Redundant literals are
    pruned at the end. Ties go to fewer new variables, then to shallower
    variables (closer to the head), then to lexicographic literal order.
    """
    if not positives:
        return PreconditionResult(None)
    head = head_variables(schema)
    pos_ex = _unique(positives)
    neg_ex = _unique(negatives)
    states = [s for s, _ in pos_ex] + [s for s, _ in neg_ex]
    n_pos = len(pos_ex)
    tuples = _Tuples(
        [(i, dict(zip(head, args))) for i, (_, args) in enumerate(pos_ex)],
        [(n_pos + i, dict(zip(head, args)))
         for i, (_, args) in enumerate(neg_ex)])
    body: List[Literal] = []
    variables: List[Variable] = list(head)
    # Variable depth: head variables are 0; a new variable is one deeper than
    # the deepest old variable of the literal that introduced it.
    depth: Dict[Variable, int] = dict.fromkeys(head, 0)
    n_exist = 0
    while tuples.neg and len(body) < max_literals:
        p0, n0 = len(tuples.pos), len(tuples.neg)
        i0 = _info(p0, n0)
        cands: List[_Candidate] = []
        budget = min(max_fresh_per_literal, max_existentials - n_exist)
        for lit, new_vars in _candidate_literals(modes, variables, n_exist,
                                                 budget, body):
            pos_t, per_pos = _extend(lit, states, tuples.pos)
            if not pos_t:
                continue
            neg_t, per_neg = _extend(lit, states, tuples.neg)
            t = sum(1 for k in per_pos if k)
            gain = t * (i0 - _info(len(pos_t), len(neg_t)))
            det = bool(new_vars) and all(k == 1 for k in per_pos) and all(
                k <= 1 for k in per_neg)
            old_depth = max((depth[v] for v in lit.variables
                             if v not in new_vars), default=0)
            lit_depth = old_depth + 1 if new_vars else old_depth
            cands.append(_Candidate(lit, new_vars, gain, _Tuples(pos_t, neg_t),
                                    det, lit_depth))
        if not cands:
            break
        cands.sort(key=lambda c: c.order_key)
        best = cands[0]
        max_gain = p0 * i0
        if best.gain < 0.8 * max_gain:
            dets = sorted((c for c in cands
                           if c.determinate and not _redundant(c, variables)),
                          key=lambda c: _literal_key(c.literal))
            if dets:
                det = dets[0]
                log.debug("%s: determinate %s", schema.name, det.literal)
                body.append(det.literal)
                variables.extend(det.new_vars)
                depth.update(dict.fromkeys(det.new_vars, det.depth))
                n_exist += len(det.new_vars)
                tuples = det.tuples
                continue
        if best.gain <= 0:
            break
        log.debug("%s: add %s (gain %.3f of %.3f, %d+/%d-)", schema.name,
                  best.literal, best.gain, max_gain, len(best.tuples.pos),
                  len(best.tuples.neg))
        body.append(best.literal)
        variables.extend(best.new_vars)
        depth.update(dict.fromkeys(best.new_vars, best.depth))
        n_exist += len(best.new_vars)
        tuples = best.tuples
    clause = _prune(Clause(tuple(body)), head, pos_ex, neg_ex, universe)
    clause = _rename_existentials(clause, head)
    covered_pos = _coverage(clause, head, pos_ex, universe)
    residual = _coverage(clause, head, neg_ex, universe)
    return PreconditionResult(clause, residual, covered_pos)


def _unique(interactions: Sequence[Interaction]
            ) -> List[Tuple[State, Tuple[str, ...]]]:
    return list(dict.fromkeys((i.prior, tuple(i.action.args))
                              for i in interactions))


def _coverage(clause: Clause, head: Sequence[Variable],
              examples: Sequence[Tuple[State, Tuple[str, ...]]],
              universe: Universe) -> int:
    from llcexplore.relational import holds
    return sum(1 for s, args in examples
               if holds(clause, s, universe, dict(zip(head, args))))


def _safe(clause: Clause, head: Sequence[Variable]) -> bool:
    bound = set(head)
    for lit in clause:
        if lit.positive:
            bound.update(lit.variables)
    return all(v in bound for lit in clause if not lit.positive
               for v in lit.variables)


def _prune(clause: Clause, head: Sequence[Variable],
           pos_ex, neg_ex, universe: Universe) -> Clause:
    target_pos = _coverage(clause, head, pos_ex, universe)
    target_neg = _coverage(clause, head, neg_ex, universe)
    lits = list(clause.literals)
    i = len(lits) - 1
    while i >= 0:
        trial = Clause(tuple(lits[:i] + lits[i + 1:]))
        if _safe(trial, head) and \
                _coverage(trial, head, pos_ex, universe) >= target_pos and \
                _coverage(trial, head, neg_ex, universe) <= target_neg:
            lits = list(trial.literals)
        i -= 1
    return Clause(tuple(lits))


def _rename_existentials(clause: Clause, head: Sequence[Variable]) -> Clause:
    mapping: Dict[Variable, Variable] = {}
    out = []
    for lit in clause:
        args = []
        for a in lit.args:
            if isinstance(a, Variable) and a not in head:
                if a not in mapping:
                    mapping[a] = Variable(f"V{len(mapping)}", a.type)
                a = mapping[a]
            args.append(a)
        out.append(Literal(lit.predicate, tuple(args), lit.positive))
    return Clause(tuple(out))


# --- effects -----------------------------------------------------------------


def _lift(atoms: Iterable[Atom], binding: Mapping[Variable, str],
          order: Sequence[Variable],
          predicates: Mapping[str, Predicate]) -> FrozenSet[Literal]:
    by_const: Dict[str, Variable] = {}
    for v in order:
        if v in binding:
            by_const.setdefault(binding[v], v)
    out = set()
    for atom in atoms:
        pred = predicates[atom.predicate]
        out.add(Literal(pred, tuple(by_const.get(a, a) for a in atom.args)))
    return frozenset(out)


@dataclass
class EffectResult:
    adds: Tuple[Literal, ...]
    dels: Tuple[Literal, ...]
    conflict: bool


def derive_effects(schema: ActionSchema, positives: Sequence[Interaction],
                   precondition: Optional[Clause], universe: Universe,
                   predicates: Mapping[str, Predicate]) -> EffectResult:
    """Lift each positive's state difference onto the head and precondition
    variables; keep the most frequent lifted difference and flag a conflict
    when the examples disagree."""
    if not positives:
        raise ValueError("effects need at least one positive interaction")
    head = head_variables(schema)
    order = list(head)
    if precondition is not None:
        order += [v for v in precondition.variables() if v not in head]
    tally: Counter = Counter()
    first_seen: Dict[Tuple, int] = {}
    for i, inter in enumerate(positives):
        binding: Binding = dict(zip(head, inter.action.args))
        if precondition is not None:
            full = next(satisfy(precondition, inter.prior, universe, binding),
                        None)
            if full is not None:
                binding = full
        adds, dels = state_diff(inter.prior, inter.post)
        key = (_lift(adds, binding, order, predicates),
               _lift(dels, binding, order, predicates))
        tally[key] += 1
        first_seen.setdefault(key, i)
    best = min(tally, key=lambda k: (-tally[k], first_seen[k]))
    adds, dels = best
    return EffectResult(tuple(sorted(adds, key=_literal_key)),
                        tuple(sorted(dels, key=_literal_key)),
                        len(tally) > 1)


# --- learner with dirty tracking --------------------------------------------


class TransitionModelLearner:
    """Keeps one model per schema and relearns only schemas that received new
    interactions since the previous call."""

    def __init__(self,
                 domain: DomainModel,
                 universe: Universe,
                 max_negatives: Optional[int] = None,
                 seed: int = 0):
        self.domain = domain
        self.universe = universe
        self.modes = mode_declarations(domain)
        self.max_negatives = max_negatives
        self.seed = seed
        self._consumed = 0
        self._pos: Dict[str, List[Interaction]] = {s: [] for s in
                                                   domain.schemas}
        self._neg: Dict[str, List[Interaction]] = {s: [] for s in
                                                   domain.schemas}
        self.models: Dict[str, LearnedActionModel] = {
            name: LearnedActionModel(name, head_variables(schema))
            for name, schema in domain.schemas.items()
        }
        self.last_relearned: List[str] = []

    def learn_all(self,
                  history: Sequence[Interaction]
                  ) -> Dict[str, LearnedActionModel]:
        dirty = []
        for inter in history[self._consumed:]:
            name = inter.action.schema
            (self._pos if inter.positive else self._neg)[name].append(inter)
            if name not in dirty:
                dirty.append(name)
        self._consumed = len(history)
        self.last_relearned = [s for s in self.domain.schemas if s in dirty]
        for name in self.last_relearned:
            self.models[name] = self.learn_schema(name)
        return self.models

    def learn_schema(self, name: str) -> LearnedActionModel:
        schema = self.domain.schemas[name]
        pos, neg = self._pos[name], self._neg[name]
        if self.max_negatives is not None and len(neg) > self.max_negatives:
            rng = random.Random(f"{self.seed}:{name}:{len(neg)}")
            neg = rng.sample(neg, self.max_negatives)
        model = LearnedActionModel(name, head_variables(schema),
                                   n_positive=len(pos), n_negative=len(neg))
        result = learn_preconditions(schema, pos, neg, self.modes,
                                     self.universe)
        if result.clause is None:
            return model
        effects = derive_effects(schema, pos, result.clause, self.universe,
                                 self.domain.predicates)
        model.precondition = result.clause
        model.residual = result.residual
        model.add_effects = effects.adds
        model.del_effects = effects.dels
        model.conflict = effects.conflict
        return model


def learn_models(history: Sequence[Interaction], domain: DomainModel,
                 universe: Universe) -> Dict[str, LearnedActionModel]:
    return TransitionModelLearner(domain, universe).learn_all(history)


# --- rule text ----------------------------------------------------------------

_ATOM_RE = re.compile(r"\s*(not\s+)?([A-Za-z_][\w-]*)\s*\(([^()]*)\)\s*")


def _parse_literal(text: str, predicates: Mapping[str, Predicate],
                   var_types: Dict[str, str]) -> Literal:
    m = _ATOM_RE.fullmatch(text)
    if not m:
        raise ValueError(f"cannot parse literal {text!r}")
    negated, name, raw = m.groups()
    pred = predicates.get(name)
    if pred is None:
        raise ValueError(f"unknown predicate {name!r}")
    names = [a.strip() for a in raw.split(",") if a.strip()]
    if len(names) != pred.arity:
        raise ValueError(f"arity mismatch in {text!r}")
    args = []
    for a, t in zip(names, pred.types):
        if a[0].isupper():
            known = var_types.setdefault(a, t)
            if known != t:
                raise ValueError(f"variable {a} used with types {known} and "
                                 f"{t}")
            args.append(Variable(a, t))
        else:
            args.append(a)
    return Literal(pred, tuple(args), negated is None)


def _split_top(text: str) -> List[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return parts


def model_from_json(name: str, data: Mapping, domain: DomainModel
                    ) -> LearnedActionModel:
    """Inverse of :meth:`LearnedActionModel.to_json`."""
    schema = domain.schemas[name]
    head = head_variables(schema)
    model = LearnedActionModel(name,
                               head,
                               residual=data.get("residual", 0),
                               conflict=data.get("conflict", False),
                               n_positive=data.get("positives", 0),
                               n_negative=data.get("negatives", 0))
    if data.get("status") != "learned":
        return model
    var_types = {v.name: v.type for v in head}
    rule = data["rule"].strip()
    if not rule.endswith("."):
        raise ValueError(f"rule for {name} must end with '.'")
    rule = rule[:-1]
    head_text, _, body_text = rule.partition(":-")
    if not head_text.strip().startswith(name + "("):
        raise ValueError(f"rule head does not match schema {name}")
    body = tuple(
        _parse_literal(p, domain.predicates, var_types)
        for p in _split_top(body_text))
    model.precondition = Clause(body)
    model.add_effects = tuple(
        _parse_literal(t, domain.predicates, var_types)
        for t in data.get("adds", ()))
    model.del_effects = tuple(
        _parse_literal(t, domain.predicates, var_types)
        for t in data.get("dels", ()))
    return model


def save_models(models: Mapping[str, LearnedActionModel], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({k: m.to_json() for k, m in models.items()}, fh, indent=1)
        fh.write("\n")


def load_models(path, domain: DomainModel) -> Dict[str, LearnedActionModel]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - set(domain.schemas)
    if unknown:
        raise ValueError(f"models file names unknown schemas: "
                         f"{sorted(unknown)}")
    return {
        name: model_from_json(name, data.get(name, {}), domain)
        for name in domain.schemas
    }
