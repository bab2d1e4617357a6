import logging
from collections import deque
from typing import Callable, Deque, Dict, Iterable, List, NamedTuple, Optional, Set, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict

from ..exceptions import MissingEntry
from ..schemas.certificate import (
    AnswerEntry,
    CallKey,
    CallPattern,
    Certificate,
    DependencyArc,
    sort_arcs,
)
from ..schemas.def_value import DefValue
from ..schemas.program import Atom, Call, Program, Rule, RuleId
from .def_domain import AbstractDomain, DefDomain

logger = logging.getLogger(__name__)

# Answers a body call pattern with a description over the call's own atom
Lookup = Callable[[CallPattern], DefValue]

Slot = Tuple[CallKey, RuleId, int]


class Traversal(NamedTuple):
    """Outcome of processing one rule body for one entry"""
    exit: DefValue
    arcs: List[DependencyArc]
    calls: List[CallPattern]
    snapshots: Dict[int, DefValue]


class AnalysisResult(BaseModel):
    """Answer table and dependency arcs of a fixpoint, plus the traversal count"""
    model_config = ConfigDict(frozen=True)

    answers: Certificate
    arcs: Tuple[DependencyArc, ...] = ()
    traversals: int = 0


def entry_atom(program: Program, key: CallKey, hint: Optional[Atom] = None) -> Atom:
    """Base-form atom an entry is printed with"""
    head = program.head_of((key.predicate, key.arity))
    if head is not None:
        return head
    if hint is not None and hint.key == (key.predicate, key.arity):
        return hint
    return Atom.of(key.predicate, *[f"X{i}" for i in range(1, key.arity + 1)])


def entry_pattern(program: Program, key: CallKey, hint: Optional[Atom] = None) -> CallPattern:
    atom = entry_atom(program, key, hint)
    return CallPattern(atom=atom, cp=DefValue(scope=atom.variables, models=key.models))


def traverse_body(
    domain: AbstractDomain,
    entry: CallPattern,
    rule: Rule,
    lookup: Lookup,
    start: int = 1,
    resume: Optional[DefValue] = None,
) -> Traversal:
    """
    Process the body of `rule` for `entry` from literal `start` onwards.

    Args:
        domain: Abstract domain operations
        entry: Call pattern whose predicate `rule` defines
        rule: Rule to traverse
        lookup: Source of answers for body calls
        start: 1-based literal index to resume from
        resume: Description over the rule scope saved before literal `start`

    Returns:
        Traversal with the exit over the entry's variables, the arcs and call
        patterns met, and the description in force before each call
    """
    scope = rule.variables
    if start == 1:
        d = domain.extend(domain.relabel(entry.cp, rule.head.variables), scope)
    elif resume is None:
        raise ValueError(f"resuming {rule.id} at literal {start} needs a saved description")
    else:
        d = resume

    arcs: List[DependencyArc] = []
    calls: List[CallPattern] = []
    snapshots: Dict[int, DefValue] = {}
    for index in range(start, len(rule.body) + 1):
        if d.is_bottom:
            break
        literal = rule.body[index - 1]
        if not isinstance(literal, Call):
            d = domain.meet(d, domain.abstract_constraint(literal, scope))
            continue
        snapshots[index] = d
        call = CallPattern(atom=literal.atom, cp=domain.project(d, literal.atom.variables))
        arcs.append(DependencyArc(head=entry, rule_id=rule.id, literal_index=index, body=call))
        calls.append(call)
        answer = lookup(call)
        d = domain.meet(d, domain.extend(answer, scope))

    exit_value = domain.relabel(domain.project(d, rule.head.variables), entry.atom.variables)
    return Traversal(exit=exit_value, arcs=arcs, calls=calls, snapshots=snapshots)


def arc_graph(arcs: Iterable[DependencyArc]) -> nx.DiGraph:
    """Dependency graph with an edge from each arc's head key to its body key"""
    graph = nx.DiGraph()
    graph.add_edges_from((arc.head.key, arc.body.key) for arc in arcs)
    return graph


def reachable_keys(roots: Iterable[CallKey], arcs: Iterable[DependencyArc]) -> Set[CallKey]:
    """Keys reachable from `roots` following arcs from head to body"""
    graph = arc_graph(arcs)
    seen: Set[CallKey] = set()
    for root in roots:
        seen.add(root)
        # roots without outgoing arcs are not graph nodes
        if root in graph:
            seen |= nx.descendants(graph, root)
    return seen


class Analyzer:
    """Goal-dependent fixpoint analysis over the Def domain"""

    def __init__(self, domain: Optional[AbstractDomain] = None):
        self.domain = domain or DefDomain()

    def analyze(self, program: Program, roots: Iterable[CallPattern]) -> AnalysisResult:
        """
        Compute the least fixpoint answer table and dependency arcs for `roots`.

        Args:
            program: Normalized program
            roots: Entry call patterns

        Returns:
            AnalysisResult restricted to the entries reachable from the roots
        """
        run = _FixpointRun(self.domain, program)
        root_keys = [run.register(root, root=True) for root in roots]
        run.solve()
        keep = reachable_keys(root_keys, run.arcs.values())
        entries = [
            AnswerEntry(atom=run.patterns[key].atom, call=run.patterns[key].cp, answer=run.answers[key])
            for key in keep
        ]
        arcs = [arc for arc in run.arcs.values() if arc.head.key in keep]
        logger.info(
            "analysis reached a fixpoint: %d entries, %d arcs, %d traversals (%d entries discarded)",
            len(entries), len(arcs), run.traversals, len(run.answers) - len(keep),
        )
        return AnalysisResult(
            answers=Certificate.of(entries),
            arcs=sort_arcs(arcs),
            traversals=run.traversals,
        )

    def traverse_body(
        self,
        entry: CallPattern,
        rule: Rule,
        lookup: Lookup,
        start: int = 1,
        resume: Optional[DefValue] = None,
    ) -> Traversal:
        return traverse_body(self.domain, entry, rule, lookup, start, resume)

    def one_step(self, program: Program, certificate: Certificate) -> Dict[CallKey, DefValue]:
        """Recompute every entry's answer once, answering calls from `certificate` only"""
        table = certificate.table

        def lookup(call: CallPattern) -> DefValue:
            entry = table.get(call.key)
            if entry is None:
                raise MissingEntry(call)
            return self.domain.relabel(entry.answer, call.atom.variables)

        recomputed: Dict[CallKey, DefValue] = {}
        for entry in certificate.entries:
            pattern = entry.call_pattern
            answer = self.domain.bottom(entry.atom.variables)
            for rule in program.rules_for(entry.atom.key):
                answer = self.domain.alub(answer, self.traverse_body(pattern, rule, lookup).exit)
            recomputed[entry.key] = answer
        return recomputed


class _FixpointRun:
    """Mutable tables of one analysis"""

    def __init__(self, domain: AbstractDomain, program: Program):
        self.domain = domain
        self.program = program
        self.index = program.index
        self.patterns: Dict[CallKey, CallPattern] = {}
        self.answers: Dict[CallKey, DefValue] = {}
        self.arcs: Dict[Slot, DependencyArc] = {}
        self.saved: Dict[Slot, DefValue] = {}
        self.queue: Deque[Tuple[CallKey, int, int]] = deque()
        self.pending: Set[Tuple[CallKey, int, int]] = set()
        self.traversals = 0

    def register(self, pattern: CallPattern, root: bool = False) -> CallKey:
        """Add an entry at bottom and schedule all of its rules; roots keep their own atom"""
        key = pattern.key
        if key in self.answers:
            return key
        self.patterns[key] = entry_pattern(self.program, key, pattern.atom if root else None)
        self.answers[key] = self.domain.bottom(self.patterns[key].atom.variables)
        for rule in self.index.get((key.predicate, key.arity), ()):
            self.schedule((key, rule.id.ordinal, 1))
        logger.debug("new entry %s", self.patterns[key])
        return key

    def schedule(self, task: Tuple[CallKey, int, int]) -> None:
        if task not in self.pending:
            self.pending.add(task)
            self.queue.append(task)

    def lookup(self, call: CallPattern) -> DefValue:
        key = self.register(call)
        return self.domain.relabel(self.answers[key], call.atom.variables)

    def solve(self) -> None:
        while self.queue:
            task = self.queue.popleft()
            self.pending.discard(task)
            self.process(*task)

    def process(self, key: CallKey, ordinal: int, start: int) -> None:
        rule = self.index[(key.predicate, key.arity)][ordinal - 1]
        resume = self.saved.get((key, rule.id, start)) if start > 1 else None
        result = traverse_body(self.domain, self.patterns[key], rule, self.lookup, start, resume)
        self.traversals += 1
        # Descriptions before each call, to resume there when its answer grows
        for index, description in result.snapshots.items():
            self.saved[(key, rule.id, index)] = description
        for arc in result.arcs:
            self.arcs[arc.slot] = arc

        old = self.answers[key]
        new = self.domain.alub(old, result.exit)
        if new == old:
            return
        assert self.domain.leq(old, new), f"answer of {self.patterns[key]} moved down"
        self.answers[key] = new
        logger.debug("answer of %s grew to %s", self.patterns[key], new)
        # Reprocess every call position that consumed the old answer
        for arc in list(self.arcs.values()):
            if arc.body.key == key:
                self.schedule((arc.head.key, arc.rule_id.ordinal, arc.literal_index))


_DEFAULT = Analyzer()


def analyze(program: Program, roots: Iterable[CallPattern]) -> AnalysisResult:
    return _DEFAULT.analyze(program, roots)


def one_step(program: Program, certificate: Certificate) -> Dict[CallKey, DefValue]:
    return _DEFAULT.one_step(program, certificate)
