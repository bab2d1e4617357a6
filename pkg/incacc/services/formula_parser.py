import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from lark import Lark, Transformer
from lark.exceptions import UnexpectedInput, VisitError
from pydantic import ValidationError

from ..exceptions import DomainError, ProgramSyntaxError
from ..schemas.certificate import AnswerEntry, CallPattern, DependencyArc
from ..schemas.def_value import DefValue
from ..schemas.program import Atom, RuleId, Variable
from .def_domain import close_under_intersection

logger = logging.getLogger(__name__)

FORMULA_GRAMMAR = r"""
    value: formula
    entry: atom ":" formula "=>" formula
    query: atom ":" formula
    arc: atom ":" formula "=>" rule_ref atom ":" formula

    atom: NAME ["(" VAR ("," VAR)* ")"]
    rule_ref: NAME "/" INT "/" INT "#" INT

    ?formula: implication ("<->" implication)* -> iff
    ?implication: conjunction ("->" implication)? -> imp
    ?conjunction: primary ("&" primary)* -> conj
    ?primary: VAR -> var
            | "true" -> true
            | "bot" -> bot
            | "models" "(" [model (";" model)*] ")" -> models
            | "(" formula ")"

    model: "[" [VAR ("," VAR)*] "]"

    VAR: /[A-Z_][A-Za-z0-9_]*/
    NAME: /[a-z][A-Za-z0-9_]*/
    INT: /[0-9]+/

    %import common.WS
    %ignore WS
"""

# A formula evaluates to a predicate over models (bit sets over the scope)
Formula = Callable[[Dict[str, int], int], bool]


class _FormulaBuilder(Transformer):
    """Builds evaluators for formulas and plain tuples for table lines"""

    def value(self, children):
        return children[0]

    def entry(self, children):
        return tuple(children)

    def query(self, children):
        return tuple(children)

    def arc(self, children):
        return tuple(children)

    def atom(self, children):
        name, *args = children
        names = [str(arg) for arg in args if arg is not None]
        return Atom.of(str(name), *names)

    def rule_ref(self, children):
        name, arity, ordinal, index = children
        return (str(name), int(arity), int(ordinal), int(index))

    def iff(self, children):
        if len(children) == 1:
            return children[0]
        parts = list(children)

        def evaluate(position, model):
            first = parts[0](position, model)
            return all(part(position, model) == first for part in parts[1:])
        return evaluate

    def imp(self, children):
        if len(children) == 1:
            return children[0]
        premise, conclusion = children
        return lambda position, model: (not premise(position, model)) or conclusion(position, model)

    def conj(self, children):
        if len(children) == 1:
            return children[0]
        parts = list(children)
        return lambda position, model: all(part(position, model) for part in parts)

    def var(self, children):
        name = str(children[0])

        def evaluate(position, model):
            if name not in position:
                raise DomainError(f"variable {name} is not in scope {tuple(position)}")
            return bool(model >> position[name] & 1)
        return evaluate

    def true(self, children):
        return lambda position, model: True

    def bot(self, children):
        return lambda position, model: False

    def models(self, children):
        listed = [names for names in children if names is not None]

        def evaluate(position, model):
            masks = set()
            for names in listed:
                mask = 0
                for name in names:
                    if name not in position:
                        raise DomainError(f"variable {name} is not in scope {tuple(position)}")
                    mask |= 1 << position[name]
                masks.add(mask)
            return model in masks
        return evaluate

    def model(self, children):
        return [str(name) for name in children if name is not None]


_PARSER = Lark(
    FORMULA_GRAMMAR,
    parser="lalr",
    start=["value", "entry", "query", "arc"],
    maybe_placeholders=True,
)


class FormulaParser:
    """
    Reads Def descriptions written as formulas or model lists, and the
    single-line table syntax built on them (certificate entries, queries,
    dependency arcs).
    """

    def parse_value(self, text: str, scope: Sequence[str]) -> DefValue:
        formula = self._parse(text, "value")
        return self.to_value(formula, scope)

    def parse_entry(self, text: str) -> AnswerEntry:
        atom, call, answer = self._parse(text, "entry")
        return AnswerEntry(
            atom=atom,
            call=self.to_value(call, atom.variables),
            answer=self.to_value(answer, atom.variables),
        )

    def parse_query(self, text: str) -> CallPattern:
        atom, call = self._parse(text, "query")
        return CallPattern(atom=atom, cp=self.to_value(call, atom.variables))

    def parse_arc(self, text: str) -> DependencyArc:
        head, head_cp, (name, arity, ordinal, index), body, body_cp = self._parse(text, "arc")
        try:
            return DependencyArc(
                head=CallPattern(atom=head, cp=self.to_value(head_cp, head.variables)),
                rule_id=RuleId(predicate=name, arity=arity, ordinal=ordinal),
                literal_index=index,
                body=CallPattern(atom=body, cp=self.to_value(body_cp, body.variables)),
            )
        except ValidationError as error:
            raise ProgramSyntaxError(_first_error(error)) from None

    def to_value(self, formula: Formula, scope: Sequence[str]) -> DefValue:
        """
        Convert a parsed formula into a canonical DefValue.

        Raises:
            DomainError: if the formula mentions variables outside `scope`
                or is not a definite Boolean function
        """
        scope = tuple(scope)
        position = {name: i for i, name in enumerate(scope)}
        models = frozenset(m for m in range(1 << len(scope)) if formula(position, m))
        if not models:
            return DefValue.bottom(scope)
        full = (1 << len(scope)) - 1
        if full not in models or close_under_intersection(models) != models:
            raise DomainError(f"formula over {scope} is not a definite Boolean function")
        return DefValue(scope=scope, models=models)

    def _parse(self, text: str, start: str):
        try:
            tree = _PARSER.parse(text, start=start)
        except UnexpectedInput as error:
            column = getattr(error, "column", None)
            if column is not None and column < 0:
                column = None
            raise ProgramSyntaxError(f"cannot parse {text.strip()!r}", None, column) from None
        try:
            return _FormulaBuilder().transform(tree)
        except VisitError as error:
            if isinstance(error.orig_exc, ValidationError):
                raise ProgramSyntaxError(_first_error(error.orig_exc)) from None
            raise


def _first_error(error: ValidationError) -> str:
    details = error.errors()
    return details[0]["msg"] if details else str(error)


_DEFAULT = FormulaParser()


def parse_value(text: str, scope: Sequence[str]) -> DefValue:
    return _DEFAULT.parse_value(text, scope)


def parse_entry(text: str) -> AnswerEntry:
    return _DEFAULT.parse_entry(text)


def parse_query(text: str) -> CallPattern:
    return _DEFAULT.parse_query(text)


def parse_arc(text: str) -> DependencyArc:
    return _DEFAULT.parse_arc(text)
