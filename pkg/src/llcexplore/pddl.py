"""Reader and writer for the small PDDL subset used by the grid scenarios,
plus the line-delimited interaction log."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Dict, Iterable, Iterator, List, Optional, Sequence, \
    Tuple, Union

from llcexplore.relational import Atom, Predicate, State, Universe


class PDDLError(ValueError):
    pass


class PDDLSyntaxError(PDDLError):

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class PDDLTypeError(PDDLError):
    pass


class Symbol(str):
    """A token that remembers where it came from."""
    line: int
    col: int

    def __new__(cls, text: str, line: int, col: int) -> "Symbol":
        obj = super().__new__(cls, text)
        obj.line = line
        obj.col = col
        return obj


class SList(list):
    line: int = 0
    col: int = 0


SExpr = Union[Symbol, SList]


def _tokenize(text: str) -> Iterator[Tuple[str, int, int]]:
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            yield ch, line, col
            i += 1
            col += 1
            continue
        start, start_col = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        yield text[start:i], line, start_col


def parse_sexpr(text: str) -> SList:
    """Parse exactly one top-level s-expression."""
    stack: List[SList] = []
    result: Optional[SList] = None
    for tok, line, col in _tokenize(text):
        if result is not None:
            raise PDDLSyntaxError(f"unexpected {tok!r} after end of input",
                                  line, col)
        if tok == "(":
            lst = SList()
            lst.line, lst.col = line, col
            stack.append(lst)
        elif tok == ")":
            if not stack:
                raise PDDLSyntaxError("unbalanced ')'", line, col)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                result = done
        else:
            if not stack:
                raise PDDLSyntaxError(f"symbol {tok!r} outside any list", line,
                                      col)
            stack[-1].append(Symbol(tok, line, col))
    if stack:
        raise PDDLSyntaxError("unclosed '('", stack[-1].line, stack[-1].col)
    if result is None:
        raise PDDLSyntaxError("empty input", 1, 1)
    return result


def _kw(expr: SExpr) -> Optional[str]:
    return expr.lower() if isinstance(expr, Symbol) else None


def _where(expr: SExpr) -> Tuple[int, int]:
    return getattr(expr, "line", 0), getattr(expr, "col", 0)


def _expect_symbol(expr: SExpr, what: str) -> Symbol:
    if not isinstance(expr, Symbol):
        raise PDDLSyntaxError(f"expected {what}, found a list", *_where(expr))
    return expr


def _typed_list(items: Sequence[SExpr]) -> List[Tuple[Symbol, str]]:
    """``a b - t c - u`` -> [(a, t), (b, t), (c, u)]; untyped -> object."""
    out: List[Tuple[Symbol, str]] = []
    pending: List[Symbol] = []
    i = 0
    while i < len(items):
        item = _expect_symbol(items[i], "a name")
        if item == "-":
            if i + 1 >= len(items):
                raise PDDLSyntaxError("type expected after '-'", *_where(item))
            t = _expect_symbol(items[i + 1], "a type name")
            out.extend((p, str(t)) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(item)
        i += 1
    out.extend((p, "object") for p in pending)
    return out


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameter_types: Tuple[str, ...]


@dataclass
class DomainModel:
    name: str
    types: Tuple[str, ...]
    predicates: Dict[str, Predicate]
    schemas: Dict[str, ActionSchema]
    constants_by_type: Dict[str, Tuple[str, ...]] = field(default_factory=dict)

    @property
    def max_arity(self) -> int:
        return max((p.arity for p in self.predicates.values()), default=0)

    def schema_names(self) -> List[str]:
        return list(self.schemas)


@dataclass
class ProblemInstance:
    name: str
    domain_name: str
    objects: Universe
    init: State

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, ProblemInstance)
                and self.name == other.name
                and self.domain_name == other.domain_name
                and self.objects == other.objects and self.init == other.init)


def _sections(root: SList, kind: str) -> Tuple[str, List[SList]]:
    if not root or _kw(root[0]) != "define":
        raise PDDLSyntaxError("expected (define ...)", root.line, root.col)
    if len(root) < 2 or not isinstance(root[1], SList) or len(root[1]) != 2 \
            or _kw(root[1][0]) != kind:
        raise PDDLSyntaxError(f"expected ({kind} <name>)", *_where(root))
    name = str(_expect_symbol(root[1][1], f"{kind} name"))
    body = []
    for item in root[2:]:
        if not isinstance(item, SList) or not item or _kw(item[0]) is None:
            raise PDDLSyntaxError("expected a (:section ...)", *_where(item))
        body.append(item)
    return name, body


def parse_domain(text: str) -> DomainModel:
    """Parse a domain file holding types, predicates and action headers."""
    name, sections = _sections(parse_sexpr(text), "domain")
    types: List[str] = []
    predicates: Dict[str, Predicate] = {}
    schemas: Dict[str, ActionSchema] = {}
    constants: Dict[str, List[str]] = {}
    for sec in sections:
        key = _kw(sec[0])
        if key == ":requirements":
            continue
        if key == ":types":
            for t, parent in _typed_list(sec[1:]):
                if t in types:
                    raise PDDLError(f"type {t!r} declared twice")
                types.append(str(t))
                if parent != "object" and parent not in types:
                    types.append(parent)
        elif key == ":constants":
            for c, t in _typed_list(sec[1:]):
                constants.setdefault(t, []).append(str(c))
        elif key == ":predicates":
            for decl in sec[1:]:
                if not isinstance(decl, SList) or not decl:
                    raise PDDLSyntaxError("malformed predicate declaration",
                                          *_where(decl))
                pname = str(_expect_symbol(decl[0], "predicate name"))
                if pname in predicates:
                    raise PDDLError(f"predicate {pname!r} declared twice")
                params = _typed_list(decl[1:])
                if not params:
                    raise PDDLError(f"predicate {pname!r} has no arguments")
                predicates[pname] = Predicate(pname,
                                              tuple(t for _, t in params))
        elif key == ":action":
            aname = str(_expect_symbol(sec[1], "action name"))
            if aname in schemas:
                raise PDDLError(f"action {aname!r} declared twice")
            params: List[Tuple[Symbol, str]] = []
            rest = sec[2:]
            i = 0
            while i < len(rest):
                k = _kw(rest[i])
                if k == ":parameters" and i + 1 < len(rest) and isinstance(
                        rest[i + 1], SList):
                    params = _typed_list(rest[i + 1])
                    i += 2
                elif k in (":precondition", ":effect"):
                    # Agents start with no action knowledge; bodies ignored.
                    i += 2
                else:
                    raise PDDLSyntaxError(f"unexpected {rest[i]!r} in action",
                                          *_where(rest[i]))
            schemas[aname] = ActionSchema(aname, tuple(t for _, t in params))
        else:
            raise PDDLSyntaxError(f"unsupported section {sec[0]!r}",
                                  *_where(sec[0]))
    declared = set(types) | {"object"}
    for schema in schemas.values():
        for t in schema.parameter_types:
            if t not in declared:
                raise PDDLTypeError(f"action {schema.name} uses undeclared "
                                    f"type {t!r}")
    for pred in predicates.values():
        for t in pred.types:
            if t not in declared:
                raise PDDLTypeError(f"predicate {pred.name} uses undeclared "
                                    f"type {t!r}")
    return DomainModel(name, tuple(types), predicates, schemas,
                       {t: tuple(cs) for t, cs in constants.items()})


def parse_problem(text: str, domain: DomainModel) -> ProblemInstance:
    """Parse a problem file against ``domain``; every init atom is checked."""
    name, sections = _sections(parse_sexpr(text), "problem")
    domain_name = domain.name
    objects: Dict[str, List[str]] = {
        t: list(cs)
        for t, cs in domain.constants_by_type.items()
    }
    raw_init: List[SList] = []
    for sec in sections:
        key = _kw(sec[0])
        if key == ":domain":
            domain_name = str(_expect_symbol(sec[1], "domain name"))
        elif key == ":objects":
            for obj, t in _typed_list(sec[1:]):
                if t not in domain.types and t != "object":
                    raise PDDLTypeError(f"object {obj} has undeclared type "
                                        f"{t!r}")
                objects.setdefault(t, []).append(str(obj))
        elif key == ":init":
            for fact in sec[1:]:
                if not isinstance(fact, SList) or not fact:
                    raise PDDLSyntaxError("malformed init fact",
                                          *_where(fact))
                raw_init.append(fact)
        elif key in (":goal", ":requirements"):
            continue
        else:
            raise PDDLSyntaxError(f"unsupported section {sec[0]!r}",
                                  *_where(sec[0]))
    universe = Universe(objects)
    atoms = []
    for fact in raw_init:
        pname = str(_expect_symbol(fact[0], "predicate name"))
        args = tuple(str(_expect_symbol(a, "object name")) for a in fact[1:])
        text_atom = "(" + " ".join((pname, ) + args) + ")"
        pred = domain.predicates.get(pname)
        if pred is None:
            raise PDDLTypeError(f"unknown predicate in {text_atom}")
        if len(args) != pred.arity:
            raise PDDLTypeError(f"arity mismatch in {text_atom}: "
                                f"{pname} takes {pred.arity} arguments")
        for a, t in zip(args, pred.types):
            actual = universe.type_of(a)
            if actual is None:
                raise PDDLTypeError(f"unknown object {a!r} in {text_atom}")
            if actual != t:
                raise PDDLTypeError(f"{a} has type {actual}, expected {t} in "
                                    f"{text_atom}")
        atoms.append(Atom(pname, args))
    return ProblemInstance(name, domain_name, universe, frozenset(atoms))


def serialize_problem(problem: ProblemInstance) -> str:
    lines = [f"(define (problem {problem.name})",
             f"  (:domain {problem.domain_name})", "  (:objects"]
    for t, names in problem.objects.as_dict().items():
        if names:
            lines.append(f"    {' '.join(names)} - {t}")
    lines[-1] += ")"
    lines.append("  (:init")
    for atom in sorted(problem.init):
        lines.append(f"    {atom}")
    lines[-1] += "))"
    return "\n".join(lines) + "\n"


def serialize_domain(domain: DomainModel) -> str:
    lines = [f"(define (domain {domain.name})",
             "  (:requirements :strips :typing)",
             f"  (:types {' '.join(domain.types)})", "  (:predicates"]
    for pred in domain.predicates.values():
        params = " ".join(f"?a{i} - {t}" for i, t in enumerate(pred.types))
        lines.append(f"    ({pred.name} {params})")
    lines[-1] += ")"
    for schema in domain.schemas.values():
        params = " ".join(f"?a{i} - {t}"
                          for i, t in enumerate(schema.parameter_types))
        lines.append(f"  (:action {schema.name} :parameters ({params}))")
    lines[-1] += ")"
    return "\n".join(lines) + "\n"


# --- interaction log -------------------------------------------------------


def _atom_list(atoms: Iterable[Atom]) -> List[List[str]]:
    return [[a.predicate, *a.args] for a in sorted(atoms)]


def _atoms(rows: Iterable[Sequence[str]]) -> frozenset:
    return frozenset(Atom(r[0], tuple(r[1:])) for r in rows)


def write_interaction_log(history: Sequence, sink: IO[str]) -> int:
    """Write one JSON object per interaction; return the record count.

    The first record also carries the full prior state so the log can be
    replayed from diffs alone.
    """
    from llcexplore.relational import state_diff

    count = 0
    for step, inter in enumerate(history):
        adds, dels = state_diff(inter.prior, inter.post)
        record = {
            "step": step,
            "action": inter.action.schema,
            "args": list(inter.action.args),
            "label": "positive" if inter.positive else "negative",
            "adds": _atom_list(adds),
            "dels": _atom_list(dels),
        }
        if step == 0:
            record["prior"] = _atom_list(inter.prior)
        sink.write(json.dumps(record, separators=(",", ":")) + "\n")
        count += 1
    return count


def read_interaction_log(source: IO[str]) -> list:
    """Rebuild the interactions written by :func:`write_interaction_log`."""
    from llcexplore.environment import GroundAction
    from llcexplore.learner import Interaction

    history = []
    state: Optional[frozenset] = None
    for lineno, line in enumerate(source, 1):
        if not line.strip():
            continue
        record = json.loads(line)
        if state is None:
            if "prior" not in record:
                raise PDDLError(f"log line {lineno}: first record lacks the "
                                f"prior state")
            state = _atoms(record["prior"])
        post = (state - _atoms(record["dels"])) | _atoms(record["adds"])
        inter = Interaction(state,
                            GroundAction(record["action"],
                                         tuple(record["args"])), post)
        expected = record["label"] == "positive"
        if inter.positive != expected:
            raise PDDLError(f"log line {lineno}: label disagrees with diff")
        history.append(inter)
        state = post
    return history
