"""
Text formats shared by producer and consumer.

Table files hold one item per line; blank lines and lines starting with
`%` are ignored. Serialization is canonical so that equal values always
produce identical bytes.
"""
import re
from typing import Callable, Dict, Iterable, List, Optional, Tuple, TypeVar

from pydantic import ValidationError

from ..exceptions import DomainError, ProgramSyntaxError
from ..schemas.certificate import (
    AnswerEntry,
    CallPattern,
    Certificate,
    DependencyArc,
    IncrementalCertificate,
    SafetyPolicy,
    key_sort_key,
    sort_arcs,
)
from ..schemas.program import Atom, PredicateKey, Program, Rule
from ..schemas.update import Update, UpdateTuple
from ..services.formula_parser import FormulaParser
from ..services.program_parser import ProgramParser

T = TypeVar("T")

UPDATE_HEADER = re.compile(r"^@\s*([a-z][A-Za-z0-9_]*)\s*/\s*([0-9]+)\s*$")

_formulas = FormulaParser()
_programs = ProgramParser()


def _lines(text: str) -> Iterable[Tuple[int, str]]:
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("%"):
            yield number, stripped


def _parse_lines(text: str, parse_line: Callable[[str], T]) -> List[T]:
    items: List[T] = []
    for number, line in _lines(text):
        try:
            items.append(parse_line(line))
        except ProgramSyntaxError as error:
            raise error.at_line(number) from None
        except (DomainError, ValidationError) as error:
            raise ProgramSyntaxError(_message(error), number) from None
    return items


def _message(error: Exception) -> str:
    if isinstance(error, ValidationError):
        details = error.errors()
        if details:
            return details[0]["msg"]
    return str(error)


def _build(factory: Callable[[], T]) -> T:
    try:
        return factory()
    except ValidationError as error:
        raise ProgramSyntaxError(_message(error)) from None


# Programs

def format_program(program: Program) -> str:
    return program.text()


def parse_program(text: str) -> Program:
    return _programs.parse_program(text)


# Answer tables

def format_certificate(certificate: Certificate) -> str:
    return certificate.text()


def parse_certificate(text: str) -> Certificate:
    entries = _parse_lines(text, _formulas.parse_entry)
    return _build(lambda: Certificate.of(entries))


def parse_inc_certificate(text: str) -> IncrementalCertificate:
    entries = _parse_lines(text, _formulas.parse_entry)
    return _build(lambda: IncrementalCertificate.of(entries))


def parse_policy(text: str) -> SafetyPolicy:
    """Policy lines `atom : formula => formula`, one required entry each"""
    return SafetyPolicy(required=tuple(_parse_lines(text, _formulas.parse_entry)))


# Dependency arcs

def format_arcs(arcs: Iterable[DependencyArc]) -> str:
    return "".join(f"{arc}\n" for arc in sort_arcs(arcs))


def parse_arcs(text: str) -> Tuple[DependencyArc, ...]:
    return sort_arcs(_parse_lines(text, _formulas.parse_arc))


# Queries

def format_query(query: CallPattern) -> str:
    return f"{query.atom} : {query.cp}"


def format_queries(queries: Iterable[CallPattern]) -> str:
    unique: Dict = {query.key: query for query in queries}
    return "".join(f"{format_query(unique[key])}\n" for key in sorted(unique, key=key_sort_key))


def parse_query(text: str) -> CallPattern:
    try:
        return _formulas.parse_query(text)
    except DomainError as error:
        raise ProgramSyntaxError(str(error)) from None


def parse_queries(text: str) -> Tuple[CallPattern, ...]:
    return tuple(_parse_lines(text, _formulas.parse_query))


# Updates

def format_update(update: Update) -> str:
    blocks: List[str] = []
    for item in update.tuples:
        lines = [f"@ {item.atom.predicate}/{item.atom.arity}"]
        lines.extend(f"+ {rule.text()}" for rule in item.additions)
        lines.extend(f"- {rule.text()}" for rule in item.deletions)
        blocks.append("\n".join(lines) + "\n")
    return "".join(blocks)


def parse_update(text: str) -> Update:
    """
    Update blocks: a header `@ name/arity` followed by `+ rule.` lines for
    added rules and `- rule.` lines for deleted ones.
    """
    order: List[PredicateKey] = []
    additions: Dict[PredicateKey, List[Rule]] = {}
    deletions: Dict[PredicateKey, List[Rule]] = {}
    current: Optional[PredicateKey] = None
    for number, line in _lines(text):
        header = UPDATE_HEADER.match(line)
        if header:
            current = (header.group(1), int(header.group(2)))
            if current in additions:
                raise ProgramSyntaxError(f"second block for {current[0]}/{current[1]}", number)
            order.append(current)
            additions[current] = []
            deletions[current] = []
            continue
        if line[0] not in "+-":
            raise ProgramSyntaxError("expected '@ name/arity', '+ rule.' or '- rule.'", number, 1)
        if current is None:
            raise ProgramSyntaxError("rule before the first '@ name/arity' header", number, 1)
        try:
            rule = _programs.parse_rule(line[1:])
        except ProgramSyntaxError as error:
            raise error.at_line(number) from None
        if rule.head.key != current:
            raise ProgramSyntaxError(f"rule for {rule.head.predicate}/{rule.head.arity} in the block of {current[0]}/{current[1]}", number)
        (additions if line[0] == "+" else deletions)[current].append(rule)

    tuples = []
    for key in order:
        rules = additions[key] + deletions[key]
        atom = rules[0].head if rules else Atom.of(key[0], *[f"X{i}" for i in range(1, key[1] + 1)])
        tuples.append(
            _build(lambda: UpdateTuple(atom=atom, additions=tuple(additions[key]), deletions=tuple(deletions[key])))
        )
    return _build(lambda: Update(tuples=tuple(tuples)))
