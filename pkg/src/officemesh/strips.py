"""Typed STRIPS planning models with non-negative action costs.

Covers the domain/problem representation, a PDDL-subset parser and printer
(requirements :strips :typing :negative-preconditions :action-costs), the
capability-composition algebra that merges per-agent action models into one
composite domain, and plan validation.

Atoms are plain tuples ``(predicate, arg, ...)``; an argument starting with
``?`` is a variable. Costs are exact rationals. A schema's cost may also be a
static function term such as ``(edge-cost ?from ?to)`` whose ground values
come from the problem's init section; a ground term with no declared value
evaluates to 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

Atom = tuple[str, ...]

ROOT_TYPE = "object"
TOTAL_COST = "total-cost"


class StripsError(Exception):
    pass


class PddlSyntaxError(StripsError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SemanticError(StripsError):
    pass


class CompositionConflict(StripsError):
    pass


class PreconditionViolation(StripsError):
    pass


@dataclass(frozen=True, order=True)
class Literal:
    positive: bool
    atom: Atom

    def negated(self) -> "Literal":
        return Literal(not self.positive, self.atom)


def lit(*parts: str) -> Literal:
    return Literal(True, tuple(parts))


def neg(*parts: str) -> Literal:
    return Literal(False, tuple(parts))


def is_variable(term: str) -> bool:
    return term.startswith("?")


def atom_variables(atom: Atom) -> set[str]:
    return {t for t in atom[1:] if is_variable(t)}


# A cost is either a constant Fraction or a static function term (an Atom
# whose head is the function name), resolved per binding at grounding time.
CostExpr = Fraction | Atom


@dataclass(frozen=True)
class ActionSchema:
    name: str
    owner: str
    params: tuple[tuple[str, str], ...]  # (?var, type)
    precond: tuple[Literal, ...]
    add_effects: frozenset[Atom]
    del_effects: frozenset[Atom]
    cost: CostExpr = Fraction(1)

    def __post_init__(self):
        declared = {v for v, _ in self.params}
        if len(declared) != len(self.params):
            raise SemanticError(f"schema {self.name}: duplicate parameter")
        used: set[str] = set()
        for l in self.precond:
            used |= atom_variables(l.atom)
        for a in self.add_effects | self.del_effects:
            used |= atom_variables(a)
        if isinstance(self.cost, tuple):
            used |= atom_variables(self.cost)
        if not used <= declared:
            raise SemanticError(
                f"schema {self.name}: free variables {sorted(used - declared)}"
            )
        if self.add_effects & self.del_effects:
            raise SemanticError(f"schema {self.name}: add and delete effects overlap")
        if isinstance(self.cost, Fraction) and self.cost < 0:
            raise SemanticError(f"schema {self.name}: negative cost")


@dataclass(frozen=True)
class Vocabulary:
    """Type forest, predicate/function signatures, and typed constants."""

    types: dict[str, str] = field(default_factory=dict)  # type -> parent
    predicates: dict[str, tuple[str, ...]] = field(default_factory=dict)
    functions: dict[str, tuple[str, ...]] = field(default_factory=dict)
    constants: dict[str, str] = field(default_factory=dict)  # name -> type

    def is_subtype(self, t: str, ancestor: str) -> bool:
        if ancestor == ROOT_TYPE:
            return True
        while t != ROOT_TYPE:
            if t == ancestor:
                return True
            t = self.types.get(t, ROOT_TYPE)
        return False

    def known_type(self, t: str) -> bool:
        return t == ROOT_TYPE or t in self.types


@dataclass(frozen=True)
class DomainModel:
    name: str
    vocabulary: Vocabulary
    schemas: tuple[ActionSchema, ...]

    def __post_init__(self):
        seen = set()
        for s in self.schemas:
            if s.name in seen:
                raise SemanticError(f"duplicate schema name {s.name}")
            seen.add(s.name)
        for s in self.schemas:
            _check_schema_vocabulary(s, self.vocabulary)

    def schema(self, name: str) -> ActionSchema:
        for s in self.schemas:
            if s.name == name:
                return s
        raise KeyError(name)


def _check_schema_vocabulary(s: ActionSchema, vocab: Vocabulary) -> None:
    for _, t in s.params:
        if not vocab.known_type(t):
            raise SemanticError(f"schema {s.name}: undeclared type {t}")
    param_types = dict(s.params)
    atoms = [l.atom for l in s.precond] + sorted(s.add_effects | s.del_effects)
    for atom in atoms:
        sig = vocab.predicates.get(atom[0])
        if sig is None:
            raise SemanticError(f"schema {s.name}: undeclared predicate {atom[0]}")
        if len(sig) != len(atom) - 1:
            raise SemanticError(
                f"schema {s.name}: predicate {atom[0]} expects {len(sig)} args"
            )
        for term, want in zip(atom[1:], sig):
            if is_variable(term):
                have = param_types.get(term)
                if have is not None and not vocab.is_subtype(have, want):
                    raise SemanticError(
                        f"schema {s.name}: {term} is {have}, {atom[0]} wants {want}"
                    )
            elif term not in vocab.constants:
                raise SemanticError(
                    f"schema {s.name}: undeclared constant {term} in {atom[0]}"
                )
    if isinstance(s.cost, tuple):
        fsig = vocab.functions.get(s.cost[0])
        if fsig is None:
            raise SemanticError(f"schema {s.name}: undeclared function {s.cost[0]}")
        if len(fsig) != len(s.cost) - 1:
            raise SemanticError(f"schema {s.name}: function {s.cost[0]} arity mismatch")


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain_name: str
    objects: dict[str, str]  # name -> type
    init: frozenset[Atom]
    static_values: dict[Atom, Fraction]  # ground function term -> value
    goal: tuple[Literal, ...]
    metric_min_cost: bool = True


def check_problem(problem: ProblemSpec, domain: DomainModel) -> None:
    vocab = domain.vocabulary
    universe = dict(vocab.constants)
    for name, t in problem.objects.items():
        if not vocab.known_type(t):
            raise SemanticError(f"object {name} has undeclared type {t}")
        if name in universe and universe[name] != t:
            raise SemanticError(f"object {name} conflicts with constant of type {universe[name]}")
        universe[name] = t
    def check_ground_atom(atom: Atom, where: str) -> None:
        sig = vocab.predicates.get(atom[0])
        if sig is None:
            raise SemanticError(f"{where}: undeclared predicate {atom[0]}")
        if len(sig) != len(atom) - 1:
            raise SemanticError(f"{where}: predicate {atom[0]} expects {len(sig)} args")
        for term, want in zip(atom[1:], sig):
            if is_variable(term):
                raise SemanticError(f"{where}: atom {atom} is not ground")
            if term not in universe:
                raise SemanticError(f"{where}: undeclared object {term}")
            if not vocab.is_subtype(universe[term], want):
                raise SemanticError(f"{where}: {term} is {universe[term]}, {atom[0]} wants {want}")
    for atom in sorted(problem.init):
        check_ground_atom(atom, "init")
    for l in problem.goal:
        check_ground_atom(l.atom, "goal")
    for term, value in problem.static_values.items():
        if term[0] not in vocab.functions:
            raise SemanticError(f"init: undeclared function {term[0]}")
        if value < 0:
            raise SemanticError(f"init: negative value for {term}")


@dataclass(frozen=True)
class GroundAction:
    schema_name: str
    owner: str
    args: tuple[str, ...]
    pos_pre: frozenset[Atom]
    neg_pre: frozenset[Atom]
    adds: frozenset[Atom]
    dels: frozenset[Atom]
    cost: Fraction

    @property
    def name(self) -> str:
        return f"({' '.join((self.schema_name,) + self.args)})" if self.args else f"({self.schema_name})"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundAction, ...]
    total_cost: Fraction

    def __post_init__(self):
        if self.total_cost != sum((s.cost for s in self.steps), Fraction(0)):
            raise ValueError("plan total_cost does not match step costs")

    @classmethod
    def of(cls, steps: Sequence[GroundAction]) -> "Plan":
        steps = tuple(steps)
        return cls(steps, sum((s.cost for s in steps), Fraction(0)))


def substitute(atom: Atom, binding: dict[str, str]) -> Atom:
    return (atom[0],) + tuple(binding.get(t, t) for t in atom[1:])


def ground_schema(
    schema: ActionSchema,
    binding: dict[str, str],
    static_values: dict[Atom, Fraction] | None = None,
) -> GroundAction:
    """Instantiate a schema under a total binding.

    When an atom lands in both adds and dels under this binding, the delete is
    dropped (adds win, matching delete-before-add application order).
    """
    missing = [v for v, _ in schema.params if v not in binding]
    if missing:
        raise SemanticError(f"binding for {schema.name} missing {missing}")
    pos = frozenset(substitute(l.atom, binding) for l in schema.precond if l.positive)
    negs = frozenset(substitute(l.atom, binding) for l in schema.precond if not l.positive)
    adds = frozenset(substitute(a, binding) for a in schema.add_effects)
    dels = frozenset(substitute(a, binding) for a in schema.del_effects) - adds
    if isinstance(schema.cost, Fraction):
        cost = schema.cost
    else:
        term = substitute(schema.cost, binding)
        cost = (static_values or {}).get(term, Fraction(0))
    return GroundAction(
        schema_name=schema.name,
        owner=schema.owner,
        args=tuple(binding[v] for v, _ in schema.params),
        pos_pre=pos,
        neg_pre=negs,
        adds=adds,
        dels=dels,
        cost=cost,
    )


def applicable(state: frozenset[Atom] | set[Atom], a: GroundAction) -> bool:
    return a.pos_pre <= state and not (a.neg_pre & state)


def apply(state: frozenset[Atom], a: GroundAction) -> frozenset[Atom]:
    if not applicable(state, a):
        raise PreconditionViolation(f"{a.name} not applicable")
    return (state - a.dels) | a.adds


def goal_satisfied(state: frozenset[Atom] | set[Atom], goal: Iterable[Literal]) -> bool:
    return all((l.atom in state) == l.positive for l in goal)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_plan(domain: DomainModel, problem: ProblemSpec, plan: Plan) -> ValidationResult:
    """Replay the plan from init; every step must be applicable and the final
    state must satisfy the goal."""
    state = frozenset(problem.init)
    for i, step in enumerate(plan.steps, start=1):
        if not applicable(state, step):
            return ValidationResult(False, f"step {i} ({step.name}) not applicable")
        state = (state - step.dels) | step.adds
    for l in problem.goal:
        if (l.atom in state) != l.positive:
            want = "" if l.positive else "not "
            return ValidationResult(False, f"goal literal ({want}{' '.join(l.atom)}) unsatisfied")
    return ValidationResult(True)


# -- capability composition ---------------------------------------------------

def merge_vocabularies(vocabs: Iterable[Vocabulary]) -> Vocabulary:
    types: dict[str, str] = {}
    predicates: dict[str, tuple[str, ...]] = {}
    functions: dict[str, tuple[str, ...]] = {}
    constants: dict[str, str] = {}
    for v in vocabs:
        for t, parent in v.types.items():
            if types.get(t, parent) != parent:
                raise CompositionConflict(f"type {t}: parent {types[t]} vs {parent}")
            types[t] = parent
        for p, sig in v.predicates.items():
            if predicates.get(p, sig) != sig:
                raise CompositionConflict(f"predicate {p}: arity {predicates[p]} vs {sig}")
            predicates[p] = sig
        for f, sig in v.functions.items():
            if functions.get(f, sig) != sig:
                raise CompositionConflict(f"function {f}: arity {functions[f]} vs {sig}")
            functions[f] = sig
        for c, t in v.constants.items():
            if constants.get(c, t) != t:
                raise CompositionConflict(f"constant {c}: type {constants[c]} vs {t}")
            constants[c] = t
    return Vocabulary(types, predicates, functions, constants)


def compose_domain(adverts: Iterable[Any], name: str = "composite") -> DomainModel:
    """Union the capability adverts into one domain.

    Each advert contributes its vocabulary and its schemas; schema names are
    qualified as ``<owner>.<name>`` so identically named capabilities from
    different agents coexist. Output order is deterministic (owner, name).
    """
    adverts = sorted(adverts, key=lambda a: a.agent_id)
    vocab = merge_vocabularies(a.vocabulary for a in adverts)
    schemas: list[ActionSchema] = []
    for advert in adverts:
        for s in sorted(advert.schemas, key=lambda s: s.name):
            qualified = f"{advert.agent_id}.{s.name}"
            schemas.append(
                ActionSchema(
                    name=qualified,
                    owner=s.owner,
                    params=s.params,
                    precond=s.precond,
                    add_effects=s.add_effects,
                    del_effects=s.del_effects,
                    cost=s.cost,
                )
            )
    return DomainModel(name=name, vocabulary=vocab, schemas=tuple(schemas))


def unqualified_name(schema_name: str) -> str:
    return schema_name.split(".", 1)[1] if "." in schema_name else schema_name


# -- PDDL subset parser -------------------------------------------------------

_TOKEN_RE = re.compile(r"\(|\)|;[^\n]*|[^\s();]+|\n")
_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_.\-]*$")
_NUMBER_RE = re.compile(r"^\d+(\.\d+)?(/\d+)?$")

SUPPORTED_REQUIREMENTS = {":strips", ":typing", ":negative-preconditions", ":action-costs"}


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, int, int]] = []
        for m in _TOKEN_RE.finditer(text):
            tok = m.group(0)
            if tok == "\n" or tok.startswith(";"):
                continue
            line = text.count("\n", 0, m.start()) + 1
            col = m.start() - text.rfind("\n", 0, m.start())
            self.items.append((tok, line, col))
        self.pos = 0

    def peek(self) -> tuple[str, int, int]:
        if self.pos >= len(self.items):
            raise PddlSyntaxError("unexpected end of input", 0, 0)
        return self.items[self.pos]

    def next(self) -> str:
        tok, _, _ = self.peek()
        self.pos += 1
        return tok

    def expect(self, want: str) -> None:
        tok, line, col = self.peek()
        if tok != want:
            raise PddlSyntaxError(f"expected {want!r}, got {tok!r}", line, col)
        self.pos += 1

    def done(self) -> bool:
        return self.pos >= len(self.items)


def _read_sexpr(tokens: _Tokens):
    tok, line, col = tokens.peek()
    if tok == "(":
        tokens.next()
        items = []
        while True:
            t, l, c = tokens.peek()
            if t == ")":
                tokens.next()
                return items
            items.append(_read_sexpr(tokens))
    if tok == ")":
        raise PddlSyntaxError("unexpected ')'", line, col)
    tokens.next()
    return tok


def _parse_text(text: str):
    tokens = _Tokens(text)
    expr = _read_sexpr(tokens)
    if not tokens.done():
        tok, line, col = tokens.peek()
        raise PddlSyntaxError(f"trailing input {tok!r}", line, col)
    return expr


def _typed_list(items: list) -> list[tuple[str, str]]:
    """Parse ``a b - t c - u`` into [(a,t),(b,t),(c,u)]; untyped means object."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        item = items[i]
        if item == "-":
            if i + 1 >= len(items) or not pending:
                raise SemanticError("dangling '-' in typed list")
            t = items[i + 1]
            if not isinstance(t, str):
                raise SemanticError("type name expected after '-'")
            out.extend((p, t) for p in pending)
            pending = []
            i += 2
        else:
            if not isinstance(item, str):
                raise SemanticError("name expected in typed list")
            pending.append(item)
            i += 1
    out.extend((p, ROOT_TYPE) for p in pending)
    return out


def _parse_literal(expr, where: str) -> Literal:
    if not isinstance(expr, list) or not expr:
        raise SemanticError(f"{where}: expected a literal, got {expr!r}")
    if expr[0] == "not":
        if len(expr) != 2:
            raise SemanticError(f"{where}: malformed (not ...)")
        inner = _parse_literal(expr[1], where)
        return Literal(False, inner.atom)
    if not all(isinstance(t, str) for t in expr):
        raise SemanticError(f"{where}: malformed atom {expr!r}")
    return Literal(True, tuple(expr))


def _parse_condition(expr, where: str) -> list[Literal]:
    if isinstance(expr, list) and expr and expr[0] == "and":
        return [_parse_literal(e, where) for e in expr[1:]]
    if isinstance(expr, list) and not expr:
        return []
    return [_parse_literal(expr, where)]


def _parse_number(tok: str, where: str) -> Fraction:
    if not isinstance(tok, str) or not _NUMBER_RE.match(tok):
        raise SemanticError(f"{where}: expected a number, got {tok!r}")
    return Fraction(tok)


def _parse_cost_term(expr, where: str) -> CostExpr:
    if isinstance(expr, str):
        return _parse_number(expr, where)
    if isinstance(expr, list) and expr and all(isinstance(t, str) for t in expr):
        return tuple(expr)
    raise SemanticError(f"{where}: malformed cost term {expr!r}")


def _parse_action(expr: list, owner: str) -> ActionSchema:
    if len(expr) < 2 or expr[0] != ":action" or not isinstance(expr[1], str):
        raise SemanticError(f"malformed action {expr!r}")
    name = expr[1]
    if "." in name and not owner:
        owner = name.split(".", 1)[0]  # owner-qualified names carry their agent
    sections: dict[str, Any] = {}
    i = 2
    while i < len(expr):
        key = expr[i]
        if not isinstance(key, str) or not key.startswith(":") or i + 1 >= len(expr):
            raise SemanticError(f"action {name}: malformed section at {expr[i]!r}")
        sections[key] = expr[i + 1]
        i += 2
    params = _typed_list(sections.get(":parameters", []))
    precond = _parse_condition(sections.get(":precondition", []), f"action {name}")
    adds: set[Atom] = set()
    dels: set[Atom] = set()
    cost: CostExpr = Fraction(1)
    for eff in _parse_condition_effects(sections.get(":effect", []), name):
        if eff[0] == "add":
            adds.add(eff[1])
        elif eff[0] == "del":
            dels.add(eff[1])
        else:
            cost = eff[1]
    return ActionSchema(
        name=name,
        owner=owner,
        params=tuple(params),
        precond=tuple(precond),
        add_effects=frozenset(adds),
        del_effects=frozenset(dels),
        cost=cost,
    )


def _parse_condition_effects(expr, action: str):
    exprs = expr[1:] if isinstance(expr, list) and expr and expr[0] == "and" else (
        [] if expr == [] else [expr])
    out = []
    for e in exprs:
        if isinstance(e, list) and e and e[0] == "increase":
            if len(e) != 3 or e[1] != [TOTAL_COST]:
                raise SemanticError(f"action {action}: only (increase (total-cost) _) supported")
            out.append(("cost", _parse_cost_term(e[2], f"action {action}")))
        else:
            l = _parse_literal(e, f"action {action} effect")
            out.append(("add" if l.positive else "del", l.atom))
    return out


def parse_domain(text: str) -> DomainModel:
    expr = _parse_text(text)
    if not (isinstance(expr, list) and len(expr) >= 2 and expr[0] == "define"
            and isinstance(expr[1], list) and expr[1][:1] == ["domain"] and len(expr[1]) == 2):
        raise SemanticError("expected (define (domain NAME) ...)")
    name = expr[1][1]
    types: dict[str, str] = {}
    predicates: dict[str, tuple[str, ...]] = {}
    functions: dict[str, tuple[str, ...]] = {}
    constants: dict[str, str] = {}
    schemas: list[ActionSchema] = []
    for section in expr[2:]:
        if not isinstance(section, list) or not section:
            raise SemanticError(f"malformed domain section {section!r}")
        head = section[0]
        if head == ":requirements":
            unsupported = set(section[1:]) - SUPPORTED_REQUIREMENTS
            if unsupported:
                raise SemanticError(f"unsupported requirements {sorted(unsupported)}")
        elif head == ":types":
            for t, parent in _typed_list(section[1:]):
                if types.get(t, parent) != parent:
                    raise SemanticError(f"type {t} declared twice with different parents")
                types[t] = parent
        elif head == ":constants":
            for c, t in _typed_list(section[1:]):
                constants[c] = t
        elif head == ":predicates":
            for p in section[1:]:
                if not isinstance(p, list) or not p or not isinstance(p[0], str):
                    raise SemanticError(f"malformed predicate {p!r}")
                predicates[p[0]] = tuple(t for _, t in _typed_list(p[1:]))
        elif head == ":functions":
            for f in section[1:]:
                if not isinstance(f, list) or not f or not isinstance(f[0], str):
                    raise SemanticError(f"malformed function {f!r}")
                functions[f[0]] = tuple(t for _, t in _typed_list(f[1:]))
        elif head == ":action":
            schemas.append(_parse_action(section, owner=""))
        else:
            raise SemanticError(f"unsupported domain section {head!r}")
    functions.pop(TOTAL_COST, None)  # implicit; the printer always re-emits it
    for t, parent in types.items():
        if parent != ROOT_TYPE and parent not in types:
            raise SemanticError(f"type {t} has undeclared parent {parent}")
    for c, t in constants.items():
        if t != ROOT_TYPE and t not in types:
            raise SemanticError(f"constant {c} has undeclared type {t}")
    vocab = Vocabulary(types, predicates, functions, constants)
    return DomainModel(name=name, vocabulary=vocab, schemas=tuple(schemas))


def parse_problem(text: str, domain: DomainModel) -> ProblemSpec:
    expr = _parse_text(text)
    if not (isinstance(expr, list) and len(expr) >= 2 and expr[0] == "define"
            and isinstance(expr[1], list) and expr[1][:1] == ["problem"] and len(expr[1]) == 2):
        raise SemanticError("expected (define (problem NAME) ...)")
    name = expr[1][1]
    domain_name = ""
    objects: dict[str, str] = {}
    init: set[Atom] = set()
    static_values: dict[Atom, Fraction] = {}
    goal: tuple[Literal, ...] = ()
    metric = False
    for section in expr[2:]:
        if not isinstance(section, list) or not section:
            raise SemanticError(f"malformed problem section {section!r}")
        head = section[0]
        if head == ":domain":
            domain_name = section[1]
        elif head == ":objects":
            for o, t in _typed_list(section[1:]):
                objects[o] = t
        elif head == ":init":
            for e in section[1:]:
                if isinstance(e, list) and e and e[0] == "=":
                    if len(e) != 3 or not isinstance(e[1], list):
                        raise SemanticError(f"malformed init assignment {e!r}")
                    term = tuple(e[1])
                    if term == (TOTAL_COST,):
                        continue  # conventional (= (total-cost) 0)
                    static_values[term] = _parse_number(e[2], "init")
                else:
                    l = _parse_literal(e, "init")
                    if not l.positive:
                        raise SemanticError("init atoms must be positive")
                    init.add(l.atom)
        elif head == ":goal":
            if len(section) != 2:
                raise SemanticError("malformed :goal")
            goal = tuple(_parse_condition(section[1], "goal"))
        elif head == ":metric":
            if section[1:] != ["minimize", [TOTAL_COST]]:
                raise SemanticError("only (:metric minimize (total-cost)) supported")
            metric = True
        else:
            raise SemanticError(f"unsupported problem section {head!r}")
    if domain_name and domain_name != domain.name:
        raise SemanticError(f"problem names domain {domain_name}, given {domain.name}")
    problem = ProblemSpec(
        name=name,
        domain_name=domain.name,
        objects=objects,
        init=frozenset(init),
        static_values=static_values,
        goal=goal,
        metric_min_cost=metric,
    )
    check_problem(problem, domain)
    return problem


def parse_schema(text: str, owner: str) -> ActionSchema:
    """Parse a single ``(:action ...)`` fragment, as carried in adverts."""
    expr = _parse_text(text)
    if not isinstance(expr, list):
        raise SemanticError(f"expected (:action ...), got {expr!r}")
    return _parse_action(expr, owner=owner)


# -- PDDL printer -------------------------------------------------------------

def _fmt_cost(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _fmt_typed(pairs: Iterable[tuple[str, str]]) -> str:
    return " ".join(f"{n} - {t}" for n, t in pairs)


def _fmt_literal(l: Literal) -> str:
    inner = f"({' '.join(l.atom)})"
    return inner if l.positive else f"(not {inner})"


def print_schema(s: ActionSchema) -> str:
    lines = [f"(:action {s.name}"]
    lines.append(f"  :parameters ({_fmt_typed(s.params)})")
    pre = " ".join(_fmt_literal(l) for l in s.precond)
    lines.append(f"  :precondition (and {pre})" if pre else "  :precondition (and )")
    effects = [_fmt_literal(Literal(True, a)) for a in sorted(s.add_effects)]
    effects += [_fmt_literal(Literal(False, a)) for a in sorted(s.del_effects)]
    if isinstance(s.cost, Fraction):
        effects.append(f"(increase ({TOTAL_COST}) {_fmt_cost(s.cost)})")
    else:
        effects.append(f"(increase ({TOTAL_COST}) ({' '.join(s.cost)}))")
    lines.append(f"  :effect (and {' '.join(effects)}))")
    return "\n".join(lines)


def print_domain(m: DomainModel) -> str:
    v = m.vocabulary
    lines = [f"(define (domain {m.name})"]
    lines.append("  (:requirements :strips :typing :negative-preconditions :action-costs)")
    if v.types:
        decls = " ".join(f"{t} - {parent}" for t, parent in sorted(v.types.items()))
        lines.append(f"  (:types {decls})")
    if v.constants:
        lines.append(f"  (:constants {_fmt_typed(sorted(v.constants.items()))})")
    preds = []
    for p, sig in sorted(v.predicates.items()):
        args = " ".join(f"?x{i} - {t}" for i, t in enumerate(sig))
        preds.append(f"({p} {args})" if args else f"({p})")
    if preds:
        lines.append(f"  (:predicates {' '.join(preds)})")
    funcs = [f"({TOTAL_COST})"]
    for f, sig in sorted(v.functions.items()):
        if f == TOTAL_COST:
            continue
        args = " ".join(f"?x{i} - {t}" for i, t in enumerate(sig))
        funcs.append(f"({f} {args})" if args else f"({f})")
    lines.append(f"  (:functions {' '.join(funcs)})")
    for s in m.schemas:
        lines.append("  " + print_schema(s).replace("\n", "\n  "))
    lines.append(")")
    return "\n".join(lines) + "\n"


def print_problem(p: ProblemSpec) -> str:
    lines = [f"(define (problem {p.name})", f"  (:domain {p.domain_name})"]
    if p.objects:
        lines.append(f"  (:objects {_fmt_typed(sorted(p.objects.items()))})")
    init_parts = [f"({' '.join(a)})" for a in sorted(p.init)]
    init_parts.append(f"(= ({TOTAL_COST}) 0)")
    for term, value in sorted(p.static_values.items()):
        init_parts.append(f"(= ({' '.join(term)}) {_fmt_cost(value)})")
    lines.append(f"  (:init {' '.join(init_parts)})")
    goal = " ".join(_fmt_literal(l) for l in p.goal)
    lines.append(f"  (:goal (and {goal}))")
    if p.metric_min_cost:
        lines.append(f"  (:metric minimize ({TOTAL_COST}))")
    lines.append(")")
    return "\n".join(lines) + "\n"
