import logging
from typing import Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from ..schemas.certificate import (
    CallPattern,
    Certificate,
    DependencyArc,
    IncrementalCertificate,
)
from ..schemas.program import Program
from ..schemas.state import ConsumerState
from ..schemas.update import Update, UpdateClass
from .analyzer import Analyzer
from .def_domain import DefDomain
from .incremental_checker import IncrementalChecker, remove_unreachable
from .update_manager import UpdateManager

logger = logging.getLogger(__name__)


class ExtCertResult(BaseModel):
    """Certificates for an updated program and the producer state that follows"""
    model_config = ConfigDict(frozen=True)

    program: Program
    update_class: UpdateClass
    ext: Certificate
    inc: IncrementalCertificate
    arcs: Tuple[DependencyArc, ...] = ()
    state: ConsumerState
    traversals: int = 0


def cert_diff(ext: Certificate, base: Certificate) -> IncrementalCertificate:
    """Entries of `ext` that are new or whose answer differs from `base`"""
    table = base.table
    entries = []
    for entry in ext.entries:
        previous = table.get(entry.key)
        if previous is None or previous.answer.models != entry.answer.models:
            entries.append(entry)
    return IncrementalCertificate.of(entries)


class IncrementalCertifier:
    """Producer side: extended and incremental certificates for an update"""

    def __init__(self, domain: Optional[DefDomain] = None, updates: Optional[UpdateManager] = None):
        self.domain = domain or DefDomain()
        self.analyzer = Analyzer(self.domain)
        self.updates = updates or UpdateManager()
        self.inc_checker = IncrementalChecker(self.domain, self.updates)

    def ext_certify(
        self,
        p_old: Program,
        update: Update,
        roots: Iterable[CallPattern],
        base: Optional[ConsumerState] = None,
        reuse: bool = False,
    ) -> ExtCertResult:
        """
        Certify the patched program and extract what changed.

        The patched program is analyzed from the queries together with every
        call pattern the base certificate holds, so the consumer finds a claim
        for each entry it rechecks. With `reuse` a pure deletion ships an
        empty incremental certificate and keeps the base answers.

        Args:
            p_old: Program the base certificate was computed for
            update: Update to apply to `p_old`
            roots: Query call patterns
            base: Persisted producer state; analyzed from scratch when absent
            reuse: Reuse the base certificate for pure deletions

        Returns:
            ExtCertResult

        Raises:
            PatchConflict: the update does not apply to `p_old`
        """
        roots = list(roots)
        if base is None:
            initial = self.analyzer.analyze(p_old, roots)
            base = ConsumerState(program=p_old, answers=initial.answers, arcs=initial.arcs, queries=tuple(roots))
        update_class = self.updates.classify(update)

        if reuse and update_class == UpdateClass.DELETION:
            empty = IncrementalCertificate()
            checked = self.inc_checker.inc_check(base, update, empty, strict=False)
            logger.info("pure deletion: reusing %d base entries", len(base.answers))
            return ExtCertResult(
                program=checked.state.program,
                update_class=update_class,
                ext=base.answers,
                inc=empty,
                arcs=checked.state.arcs,
                state=checked.state,
                traversals=checked.traversals,
            )

        program = self.updates.patch(p_old, update)
        extended_roots: List[CallPattern] = list(roots)
        extended_roots.extend(entry.call_pattern for entry in base.answers.entries)
        result = self.analyzer.analyze(program, extended_roots)
        inc = cert_diff(result.answers, base.answers)
        answers, arcs = remove_unreachable(result.answers, result.arcs, roots)
        state = ConsumerState(program=program, answers=answers, arcs=arcs, queries=tuple(roots))
        logger.info(
            "%s update: %d entries in the extended certificate, %d in the incremental one",
            update_class.value, len(result.answers), len(inc),
        )
        return ExtCertResult(
            program=program,
            update_class=update_class,
            ext=result.answers,
            inc=inc,
            arcs=result.arcs,
            state=state,
            traversals=result.traversals,
        )

    def cert_diff(self, ext: Certificate, base: Certificate) -> IncrementalCertificate:
        return cert_diff(ext, base)


_DEFAULT = IncrementalCertifier()


def ext_certify(
    p_old: Program,
    update: Update,
    roots: Iterable[CallPattern],
    base: Optional[ConsumerState] = None,
    reuse: bool = False,
) -> ExtCertResult:
    return _DEFAULT.ext_certify(p_old, update, roots, base, reuse)
