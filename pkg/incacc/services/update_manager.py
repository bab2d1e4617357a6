import logging
from collections import Counter
from typing import Dict, List, Optional, Set

from ..exceptions import PatchConflict
from ..schemas.program import PredicateKey, Program, Rule
from ..schemas.update import Update, UpdateClass, UpdateTuple
from .program_parser import ProgramParser

logger = logging.getLogger(__name__)


def _multiset_difference(rules: List[Rule], other: List[Rule]) -> List[Rule]:
    """Rules of `rules` left over after matching each rule of `other` once"""
    remaining = Counter(rule.signature() for rule in other)
    left: List[Rule] = []
    for rule in rules:
        signature = rule.signature()
        if remaining[signature]:
            remaining[signature] -= 1
        else:
            left.append(rule)
    return left


class UpdateManager:
    """Computes, applies and classifies program updates"""

    def __init__(self, parser: Optional[ProgramParser] = None):
        self.parser = parser or ProgramParser()

    def diff(self, new: Program, old: Program) -> Update:
        """
        Per-predicate rule differences turning `old` into `new`.

        Rules are compared as multisets modulo variable renaming.
        """
        new_index = new.index
        old_index = old.index
        keys: List[PredicateKey] = list(old_index)
        keys.extend(key for key in new_index if key not in old_index)

        tuples: List[UpdateTuple] = []
        for key in keys:
            new_rules = list(new_index.get(key, ()))
            old_rules = list(old_index.get(key, ()))
            additions = _multiset_difference(new_rules, old_rules)
            deletions = _multiset_difference(old_rules, new_rules)
            if not additions and not deletions:
                continue
            atom = new.head_of(key) or old.head_of(key)
            tuples.append(UpdateTuple(atom=atom, additions=tuple(additions), deletions=tuple(deletions)))
        logger.info("diff touches %d predicates", len(tuples))
        return Update(tuples=tuple(tuples))

    def patch(self, old: Program, update: Update) -> Program:
        """
        Apply `update` to `old`: deletions first, then additions.

        Added rules go after the last surviving rule of their predicate, at
        the place of its first deleted rule when none survives, or at the
        end of the program for a new predicate.

        Raises:
            PatchConflict: a deleted rule does not occur in `old`
        """
        rules = list(old.rules)
        # Mark one matching occurrence per deleted rule
        deleted: Set[int] = set()
        for item in update.tuples:
            for rule in item.deletions:
                signature = rule.signature()
                match = next(
                    (
                        i for i, candidate in enumerate(rules)
                        if i not in deleted
                        and candidate.head.key == item.predicate
                        and candidate.signature() == signature
                    ),
                    None,
                )
                if match is None:
                    raise PatchConflict(rule)
                deleted.add(match)

        # Place additions relative to the old positions
        inserted: Dict[int, List[Rule]] = {}
        appended: List[Rule] = []
        for item in update.tuples:
            if not item.additions:
                continue
            positions = [i for i, rule in enumerate(rules) if rule.head.key == item.predicate]
            surviving = [i for i in positions if i not in deleted]
            if surviving:
                inserted.setdefault(surviving[-1], []).extend(item.additions)
            elif positions:
                inserted.setdefault(positions[0], []).extend(item.additions)
            else:
                appended.extend(item.additions)

        # Rebuild in order; normalization renumbers the ordinals
        result: List[Rule] = []
        for i, rule in enumerate(rules):
            if i not in deleted:
                result.append(rule)
            result.extend(inserted.get(i, ()))
        result.extend(appended)
        logger.debug("patched program: %d rules deleted, %d rules now", len(deleted), len(result))
        return self.parser.normalize_rules(result)

    def classify(self, update: Update) -> UpdateClass:
        """Addition or deletion when only one kind of change occurs, arbitrary when both do"""
        any_added = any(item.additions for item in update.tuples)
        any_deleted = any(item.deletions for item in update.tuples)
        if any_added and not any_deleted:
            return UpdateClass.ADDITION
        if any_deleted and not any_added:
            return UpdateClass.DELETION
        if not any_added and not any_deleted:
            return UpdateClass.EMPTY
        return UpdateClass.ARBITRARY


_DEFAULT = UpdateManager()


def diff(new: Program, old: Program) -> Update:
    return _DEFAULT.diff(new, old)


def patch(old: Program, update: Update) -> Program:
    return _DEFAULT.patch(old, update)


def classify(update: Update) -> UpdateClass:
    return _DEFAULT.classify(update)
