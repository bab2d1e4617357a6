import logging
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import lark
from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from ..exceptions import ProgramSyntaxError
from ..schemas.program import (
    LIST_CONS,
    LIST_NIL,
    Atom,
    Call,
    Constraint,
    Function,
    Literal,
    PredicateKey,
    Program,
    Rule,
    RuleId,
    Term,
    Variable,
)

logger = logging.getLogger(__name__)

PROGRAM_GRAMMAR = r"""
    start: clause*

    clause: term "." -> fact
          | term ":-" body "." -> rule

    body: goal ("," goal)*

    goal: term "=" term -> unify
        | term COMPARE term -> comparison
        | term -> call

    ?term: VAR -> var
         | NAME "(" term ("," term)* ")" -> compound
         | NAME -> constant
         | NUMBER -> constant
         | "[" "]" -> nil
         | "[" term ("," term)* ["|" term] "]" -> list

    COMPARE: "=<" | ">=" | "=:=" | "=\\=" | "\\=" | "==" | "<" | ">"
    VAR: /[A-Z_][A-Za-z0-9_]*/
    NAME: /[a-z][A-Za-z0-9_]*/
    NUMBER: /[0-9]+/
    COMMENT: /%[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

ANONYMOUS = "_"
HEAD_NAMES = ("X", "Y", "Z")
BODY_BASE = "G"

RawGoal = Tuple[str, Term, Optional[Term]]


class _RawClause:
    def __init__(self, head: Term, goals: List[RawGoal], line: Optional[int]):
        self.head = head
        self.goals = goals
        self.line = line


class _ClauseBuilder(Transformer):
    """Turns the parse tree into terms and raw clauses"""

    def start(self, children):
        return list(children)

    @v_args(meta=True)
    def fact(self, meta, children):
        return _RawClause(children[0], [], getattr(meta, "line", None))

    @v_args(meta=True)
    def rule(self, meta, children):
        return _RawClause(children[0], children[1], getattr(meta, "line", None))

    def body(self, children):
        return [goal for goal in children if goal is not None]

    def unify(self, children):
        return ("unify", children[0], children[1])

    def call(self, children):
        term = children[0]
        if isinstance(term, Function) and term.name == "true" and not term.args:
            return None
        return ("call", term, None)

    def comparison(self, children):
        operator = children[1]
        raise ProgramSyntaxError(
            f"unsupported constraint operator {operator!s}; only unification '=' is allowed",
            operator.line,
            operator.column,
        )

    def var(self, children):
        return Variable(name=str(children[0]))

    def compound(self, children):
        return Function(name=str(children[0]), args=tuple(children[1:]))

    def constant(self, children):
        return Function(name=str(children[0]))

    def nil(self, children):
        return Function(name=LIST_NIL)

    def list(self, children):
        *items, tail = children
        result = tail if tail is not None else Function(name=LIST_NIL)
        for item in reversed(items):
            result = Function(name=LIST_CONS, args=(item, result))
        return result


_PARSER = Lark(PROGRAM_GRAMMAR, parser="lalr", propagate_positions=True, maybe_placeholders=True)


class _FreshNames:
    """Fresh variable names: base name plus a per-rule numeric suffix"""

    def __init__(self, used: Iterable[str]):
        self.used: Set[str] = set(used)
        self.counter = 0

    def head(self) -> str:
        for name in HEAD_NAMES:
            if name not in self.used:
                self.used.add(name)
                return name
        return self.suffixed(HEAD_NAMES[0])

    def body(self) -> str:
        return self.suffixed(BODY_BASE)

    def suffixed(self, base: str) -> str:
        while True:
            self.counter += 1
            name = f"{base}{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return name


class ProgramParser:
    """Parses, normalizes and renames constraint logic programs"""

    def parse_program(self, text: str) -> Program:
        """
        Parse program text and return it in normalized form.

        Args:
            text: Prolog-like source; `%` starts a comment

        Returns:
            Normalized Program

        Raises:
            ProgramSyntaxError: with the line and column of the offending input
        """
        clauses = self._parse_clauses(text)
        rules = [self._normalize_clause(clause, ordinal=1) for clause in clauses]
        program = self.normalize_rules(rules)
        logger.debug("parsed %d rules for %d predicates", len(program.rules), len(program.index))
        return program

    def parse_rule(self, text: str) -> Rule:
        """Parse exactly one clause"""
        clauses = self._parse_clauses(text)
        if len(clauses) != 1:
            raise ProgramSyntaxError(f"expected one clause, found {len(clauses)}")
        return self._normalize_clause(clauses[0], ordinal=1)

    def normalize(self, program: Program) -> Program:
        """Give every predicate one head variable sequence and renumber rules"""
        return self.normalize_rules(program.rules)

    def normalize_rules(self, rules: Sequence[Rule]) -> Program:
        heads: Dict[PredicateKey, Atom] = {}
        counts: Dict[PredicateKey, int] = {}
        normalized: List[Rule] = []
        for rule in rules:
            key = rule.head.key
            if key not in heads:
                heads[key] = rule.head
            else:
                rule = self.align_head(rule, heads[key])
            counts[key] = counts.get(key, 0) + 1
            normalized.append(rule.with_ordinal(counts[key]))
        return Program(rules=tuple(normalized))

    def align_head(self, rule: Rule, head: Atom) -> Rule:
        """Rename `rule` so that its head is exactly `head`"""
        if rule.head == head:
            return rule
        mapping = dict(zip(rule.head.variables, head.variables))
        taken = set(head.variables)
        fresh = _FreshNames(set(rule.variables) | taken)
        for name in rule.variables:
            if name in mapping:
                continue
            if name in taken:
                mapping[name] = fresh.suffixed(name)
            else:
                mapping[name] = name
            taken.add(mapping[name])
        return rule.rename(mapping)

    def renaming(self, rule: Rule, avoid: Iterable[str]) -> Dict[str, str]:
        """Bijective renaming of the rule's variables away from `avoid`"""
        names = rule.variables
        blocked = set(avoid) | set(names)
        mapping: Dict[str, str] = {}
        for name in names:
            suffix = 1
            while f"{name}{suffix}" in blocked:
                suffix += 1
            mapping[name] = f"{name}{suffix}"
            blocked.add(mapping[name])
        return mapping

    def rename_rule(self, rule: Rule, avoid: Iterable[str]) -> Rule:
        return rule.rename(self.renaming(rule, avoid))

    def _parse_clauses(self, text: str) -> List[_RawClause]:
        try:
            tree = _PARSER.parse(text)
        except UnexpectedInput as error:
            line = getattr(error, "line", None)
            column = getattr(error, "column", None)
            if line is not None and line < 0:
                line, column = None, None
            raise ProgramSyntaxError(_describe(error), line, column) from None
        try:
            return _ClauseBuilder().transform(tree)
        except VisitError as error:
            if isinstance(error.orig_exc, ProgramSyntaxError):
                raise error.orig_exc from None
            raise

    def _normalize_clause(self, clause: _RawClause, ordinal: int) -> Rule:
        head = clause.head
        if not isinstance(head, Function) or head.name in (LIST_CONS, LIST_NIL):
            raise ProgramSyntaxError(f"clause head must be an atom, found {head}", clause.line)
        used = set(head.variables())
        for kind, first, second in clause.goals:
            used.update(first.variables())
            if second is not None:
                used.update(second.variables())
        used.discard(ANONYMOUS)
        fresh = _FreshNames(used)

        head_args = [self._name_anonymous(arg, fresh) for arg in head.args]
        goals = [
            (kind, self._name_anonymous(first, fresh), None if second is None else self._name_anonymous(second, fresh))
            for kind, first, second in clause.goals
        ]

        head_vars: List[Variable] = []
        literals: List[Literal] = []
        for arg in head_args:
            if isinstance(arg, Variable) and arg not in head_vars:
                head_vars.append(arg)
                continue
            var = Variable(name=fresh.head())
            head_vars.append(var)
            if isinstance(arg, Variable):
                literals.append(Constraint(lhs=arg, rhs=var))
            else:
                literals.append(Constraint(lhs=var, rhs=arg))

        for kind, first, second in goals:
            if kind == "unify":
                literals.extend(self._flatten_equation(first, second, fresh))
                continue
            if not isinstance(first, Function):
                raise ProgramSyntaxError(f"body goal must be an atom, found {first}", clause.line)
            literals.extend(self._flatten_call(first, fresh))

        atom = Atom(predicate=head.name, arity=len(head_vars), args=tuple(head_vars))
        return Rule(
            id=RuleId(predicate=atom.predicate, arity=atom.arity, ordinal=ordinal),
            head=atom,
            body=tuple(literals),
        )

    def _flatten_equation(self, lhs: Term, rhs: Term, fresh: _FreshNames) -> List[Literal]:
        if isinstance(lhs, Variable):
            return [Constraint(lhs=lhs, rhs=rhs)]
        if isinstance(rhs, Variable):
            return [Constraint(lhs=rhs, rhs=lhs)]
        if lhs.name == rhs.name and lhs.arity == rhs.arity:
            literals: List[Literal] = []
            for a, b in zip(lhs.args, rhs.args):
                literals.extend(self._flatten_equation(a, b, fresh))
            return literals
        var = Variable(name=fresh.body())
        return [Constraint(lhs=var, rhs=lhs), Constraint(lhs=var, rhs=rhs)]

    def _flatten_call(self, goal: Function, fresh: _FreshNames) -> List[Literal]:
        args: List[Variable] = []
        literals: List[Literal] = []
        for arg in goal.args:
            if isinstance(arg, Variable) and arg not in args:
                args.append(arg)
                continue
            var = Variable(name=fresh.body())
            args.append(var)
            if isinstance(arg, Variable):
                literals.append(Constraint(lhs=arg, rhs=var))
            else:
                literals.append(Constraint(lhs=var, rhs=arg))
        literals.append(Call(atom=Atom(predicate=goal.name, arity=len(args), args=tuple(args))))
        return literals

    def _name_anonymous(self, term: Term, fresh: _FreshNames) -> Term:
        if isinstance(term, Variable):
            return Variable(name=fresh.body()) if term.name == ANONYMOUS else term
        if not term.args:
            return term
        return Function(name=term.name, args=tuple(self._name_anonymous(arg, fresh) for arg in term.args))


def _describe(error: UnexpectedInput) -> str:
    if isinstance(error, lark.exceptions.UnexpectedCharacters):
        return f"unexpected character {error.char!r}"
    if isinstance(error, lark.exceptions.UnexpectedToken):
        if error.token.type == "$END":
            return "unexpected end of input"
        return f"unexpected token {str(error.token)!r}"
    return "unexpected end of input"


_DEFAULT = ProgramParser()


def parse_program(text: str) -> Program:
    return _DEFAULT.parse_program(text)


def normalize(program: Program) -> Program:
    return _DEFAULT.normalize(program)


def rename_rule(rule: Rule, avoid: Iterable[str]) -> Rule:
    return _DEFAULT.rename_rule(rule, avoid)


def format_program(program: Program) -> str:
    return program.text()
