import logging
from collections import deque
from typing import Deque, Dict, Iterable, List, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict

from ..config import get_settings
from ..exceptions import InvalidAnswer, NotAFixpoint
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
from ..schemas.program import RuleId
from ..schemas.state import ConsumerState
from ..schemas.update import Update, UpdateClass
from .analyzer import entry_pattern, reachable_keys
from .checker import Checker, LayeredAnswers
from .def_domain import DefDomain
from .update_manager import UpdateManager

logger = logging.getLogger(__name__)

Slot = Tuple[CallKey, RuleId, int]


class IncCheckResult(BaseModel):
    """New consumer state plus the counters of one incremental check"""
    model_config = ConfigDict(frozen=True)

    state: ConsumerState
    update_class: UpdateClass
    traversals: int = 0
    rechecked: int = 0
    changed: int = 0
    removed: int = 0


def remove_unreachable(
    answers: Certificate,
    arcs: Iterable[DependencyArc],
    roots: Iterable[CallPattern],
) -> Tuple[Certificate, Tuple[DependencyArc, ...]]:
    """
    Drop entries no longer reachable from the roots through the arcs,
    together with the arcs they head.
    """
    arcs = list(arcs)
    present = set(answers.keys())
    keep = reachable_keys([root.key for root in roots if root.key in present], arcs)
    kept_entries = [entry for entry in answers.entries if entry.key in keep]
    kept_arcs = [arc for arc in arcs if arc.head.key in keep]
    for entry in answers.entries:
        if entry.key not in keep:
            logger.info("removing unreachable entry %s", entry.call_pattern)
    return Certificate.of(kept_entries), sort_arcs(kept_arcs)


class IncrementalChecker:
    """Consumer side validation of an update against persisted analysis state"""

    def __init__(self, domain: Optional[DefDomain] = None, updates: Optional[UpdateManager] = None):
        self.domain = domain or DefDomain()
        self.checker = Checker(self.domain)
        self.updates = updates or UpdateManager()

    def inc_check(
        self,
        state: ConsumerState,
        update: Update,
        inc: Certificate,
        strict: Optional[bool] = None,
    ) -> IncCheckResult:
        """
        Check `update` incrementally and return the state to persist.

        The program is patched; entries held for updated predicates are
        rechecked over the new rules, answering calls from `inc` first and
        the held table second; changes then propagate to the entries whose
        arcs point at a changed answer. Entries no longer reachable from the
        queries are dropped.

        A deletion shipped with an empty incremental certificate keeps the
        held answers; its affected entries only have to stay below them.

        Args:
            state: Persisted program, answer table, arcs and queries
            update: Update to apply
            inc: Incremental certificate shipped with the update
            strict: Require recomputed answers to equal the claims

        Returns:
            IncCheckResult; `state` is untouched

        Raises:
            PatchConflict, MissingEntry, InvalidAnswer, NotAFixpoint
        """
        if strict is None:
            strict = get_settings().strict_check
        update_class = self.updates.classify(update)
        reuse = update_class == UpdateClass.DELETION and len(inc) == 0
        if reuse:
            logger.info("deletion with an empty incremental certificate: keeping held answers")
        strict = strict and not reuse

        # Step 1: patch the program, rejecting updates that do not apply
        program = self.updates.patch(state.program, update)
        held: Dict[CallKey, AnswerEntry] = dict(state.answers.table)
        held_before = frozenset(held)
        claims: Dict[CallKey, AnswerEntry] = dict(inc.table)
        arcs: Dict[Slot, DependencyArc] = {arc.slot: arc for arc in state.arcs}
        answers = LayeredAnswers(self.domain, program, claims, held)
        updated = set(update.predicates())

        checked: Set[CallKey] = set()
        queue: Deque[CallKey] = deque()
        queued: Set[CallKey] = set()
        mismatches: List[Tuple[CallPattern, DefValue, DefValue]] = []
        traversals = 0

        def enqueue(key: CallKey) -> None:
            if key not in checked and key not in queued:
                queued.add(key)
                queue.append(key)

        def recheck(key: CallKey) -> None:
            nonlocal traversals
            claimed = answers.get(key)
            pattern = entry_pattern(program, key, claimed.atom)
            claim = self.domain.relabel(claimed.answer, pattern.atom.variables)
            result = self.checker.check_entry(program, pattern, answers)
            traversals += result.traversals
            checked.add(key)
            if not self.domain.leq(result.answer, claim):
                raise InvalidAnswer(pattern, result.answer, claim)
            if result.answer != claim:
                mismatches.append((pattern, result.answer, claim))
            held[key] = AnswerEntry(atom=pattern.atom, call=pattern.cp, answer=claim)
            for slot in [slot for slot in arcs if slot[0] == key]:
                del arcs[slot]
            for arc in result.arcs:
                arcs[arc.slot] = arc
            for call in result.calls:
                if call.key not in held_before:
                    enqueue(call.key)

        # Step 2: entries of updated predicates
        for entry in state.answers.entries:
            if entry.atom.key in updated:
                enqueue(entry.key)

        while True:
            while queue:
                key = queue.popleft()
                queued.discard(key)
                recheck(key)
            # Step 3: consumers of changed answers
            for arc in sort_arcs(arcs.values()):
                if arc.body.key in checked and arc.body.key in claims and arc.head.key not in checked:
                    enqueue(arc.head.key)
            if queue:
                continue
            unchecked_claims = sorted(
                (key for key in claims if key not in checked and (key in answers.consumed or key in held_before)),
                key=key_sort_key,
            )
            for key in unchecked_claims:
                logger.warning("rechecking %s: its claim was shipped but never rechecked", claims[key].call_pattern)
                enqueue(key)
            if not queue:
                break

        if strict and mismatches:
            pattern, computed, claim = min(mismatches, key=lambda item: key_sort_key(item[0].key))
            raise NotAFixpoint(pattern, computed, claim)

        # Step 4: drop entries the queries no longer reach
        table, kept_arcs = remove_unreachable(Certificate.of(held.values()), arcs.values(), state.queries)
        changed = sum(1 for key in checked if key in claims)
        new_state = ConsumerState(program=program, answers=table, arcs=kept_arcs, queries=state.queries)
        removed = len(held) - len(table)
        logger.info(
            "incremental check accepted: %d rechecked, %d changed, %d removed, %d traversals",
            len(checked), changed, removed, traversals,
        )
        return IncCheckResult(
            state=new_state,
            update_class=update_class,
            traversals=traversals,
            rechecked=len(checked),
            changed=changed,
            removed=removed,
        )


_DEFAULT = IncrementalChecker()


def inc_check(
    state: ConsumerState,
    update: Update,
    inc: Certificate,
    strict: Optional[bool] = None,
) -> IncCheckResult:
    return _DEFAULT.inc_check(state, update, inc, strict)
