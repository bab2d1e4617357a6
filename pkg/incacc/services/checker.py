import logging
from collections import deque
from typing import Deque, Dict, List, Mapping, NamedTuple, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict

from ..config import get_settings
from ..exceptions import InvalidAnswer, MissingEntry, NotAFixpoint
from ..schemas.certificate import (
    AnswerEntry,
    CallKey,
    CallPattern,
    Certificate,
    DependencyArc,
    key_sort_key,
    sort_arcs,
)
from ..schemas.def_value import DefValue
from ..schemas.program import Program
from .analyzer import entry_pattern, traverse_body
from .def_domain import AbstractDomain, DefDomain

logger = logging.getLogger(__name__)


class LayeredAnswers:
    """
    Answer source made of stacked tables; earlier layers shadow later ones.

    Every key answered is remembered in `consumed`.
    """

    def __init__(self, domain: AbstractDomain, program: Program, *layers: Mapping[CallKey, AnswerEntry]):
        self.domain = domain
        self.program = program
        self.layers = layers
        self.consumed: Set[CallKey] = set()

    def get(self, key: CallKey) -> Optional[AnswerEntry]:
        for layer in self.layers:
            entry = layer.get(key)
            if entry is not None:
                return entry
        return None

    def layer_of(self, key: CallKey) -> Optional[int]:
        for position, layer in enumerate(self.layers):
            if key in layer:
                return position
        return None

    def lookup(self, call: CallPattern) -> DefValue:
        position = self.layer_of(call.key)
        if position is None:
            raise MissingEntry(entry_pattern(self.program, call.key))
        self.consumed.add(call.key)
        entry = self.layers[position][call.key]
        return self.domain.relabel(entry.answer, call.atom.variables)


class EntryCheck(NamedTuple):
    """Recomputed answer of one entry together with what its rules consumed"""
    answer: DefValue
    arcs: List[DependencyArc]
    calls: List[CallPattern]
    traversals: int


class CheckResult(BaseModel):
    """Tables built while checking a certificate"""
    model_config = ConfigDict(frozen=True)

    answers: Certificate
    arcs: Tuple[DependencyArc, ...] = ()
    traversals: int = 0
    unused: int = 0


class Checker:
    """Single-pass certificate checker that records dependency arcs"""

    def __init__(self, domain: Optional[AbstractDomain] = None):
        self.domain = domain or DefDomain()

    def check(
        self,
        program: Program,
        roots: List[CallPattern],
        certificate: Certificate,
        strict: Optional[bool] = None,
    ) -> CheckResult:
        """
        Validate `certificate` as a fixpoint for `roots`.

        Each reachable entry is traversed once, resolving every body call
        from the certificate. Unsafe answers and missing entries reject at
        once; in strict mode answers that are safe but not equal reject
        after the traversal.

        Args:
            program: Normalized program
            roots: Entry call patterns
            certificate: Claimed answer table
            strict: Require equality; defaults to the ACC_STRICT setting

        Returns:
            CheckResult holding the accepted entries and the recorded arcs

        Raises:
            MissingEntry: a reachable call pattern has no entry
            InvalidAnswer: a recomputed answer is not below the claim
            NotAFixpoint: strict mode, a recomputed answer differs from the claim
        """
        if strict is None:
            strict = get_settings().strict_check
        table = certificate.table
        answers = LayeredAnswers(self.domain, program, table)
        accepted: Dict[CallKey, AnswerEntry] = {}
        arcs: List[DependencyArc] = []
        mismatches: List[Tuple[AnswerEntry, DefValue]] = []
        traversals = 0

        queue: Deque[CallKey] = deque()
        seen: Set[CallKey] = set()
        for root in roots:
            if root.key not in table:
                raise MissingEntry(entry_pattern(program, root.key, root.atom))
            if root.key not in seen:
                seen.add(root.key)
                queue.append(root.key)

        # One pass over the reachable entries, calls answered by the certificate
        while queue:
            key = queue.popleft()
            claimed = table[key]
            result = self.check_entry(program, claimed.call_pattern, answers)
            traversals += result.traversals
            if not self.domain.leq(result.answer, claimed.answer):
                raise InvalidAnswer(claimed.call_pattern, result.answer, claimed.answer)
            if result.answer != claimed.answer:
                mismatches.append((claimed, result.answer))
            accepted[key] = claimed
            arcs.extend(result.arcs)
            for call in result.calls:
                if call.key not in seen:
                    seen.add(call.key)
                    queue.append(call.key)

        if strict and mismatches:
            claimed, computed = min(mismatches, key=lambda item: key_sort_key(item[0].key))
            raise NotAFixpoint(claimed.call_pattern, computed, claimed.answer)
        if mismatches:
            logger.info("accepting %d entries that are above their recomputed answers", len(mismatches))

        unused = [entry for entry in certificate.entries if entry.key not in accepted]
        for entry in unused:
            logger.warning("UnusedEntry: %s is not reachable from the queries", entry.call_pattern)

        logger.info("certificate accepted: %d entries, %d traversals", len(accepted), traversals)
        return CheckResult(
            answers=Certificate.of(accepted.values()),
            arcs=sort_arcs(arcs),
            traversals=traversals,
            unused=len(unused),
        )

    def check_entry(self, program: Program, entry: CallPattern, answers: LayeredAnswers) -> EntryCheck:
        """Recompute one entry's answer over all current rules of its predicate"""
        answer = self.domain.bottom(entry.atom.variables)
        arcs: List[DependencyArc] = []
        calls: List[CallPattern] = []
        rules = program.rules_for(entry.atom.key)
        for rule in rules:
            result = traverse_body(self.domain, entry, rule, answers.lookup)
            answer = self.domain.alub(answer, result.exit)
            arcs.extend(result.arcs)
            calls.extend(result.calls)
        logger.debug("checked %s over %d rules: %s", entry, len(rules), answer)
        return EntryCheck(answer=answer, arcs=arcs, calls=calls, traversals=len(rules))


_DEFAULT = Checker()


def check(
    program: Program,
    roots: List[CallPattern],
    certificate: Certificate,
    strict: Optional[bool] = None,
) -> CheckResult:
    return _DEFAULT.check(program, roots, certificate, strict)
