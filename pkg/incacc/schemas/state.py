from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, field_validator

from .certificate import CallPattern, Certificate, DependencyArc, key_sort_key, sort_arcs
from .program import Program


class ConsumerState(BaseModel):
    """Persisted analysis state: program, answer table, arcs and root call patterns"""
    model_config = ConfigDict(frozen=True)

    program: Program
    answers: Certificate
    arcs: Tuple[DependencyArc, ...] = ()
    queries: Tuple[CallPattern, ...] = ()

    @field_validator("arcs")
    @classmethod
    def _canonical_arcs(cls, value: Tuple[DependencyArc, ...]) -> Tuple[DependencyArc, ...]:
        return sort_arcs(value)

    @field_validator("queries")
    @classmethod
    def _canonical_queries(cls, value: Tuple[CallPattern, ...]) -> Tuple[CallPattern, ...]:
        unique = {query.key: query for query in value}
        return tuple(unique[key] for key in sorted(unique, key=key_sort_key))

    def consistency_error(self) -> Optional[str]:
        """First violated cross-file invariant, or None"""
        table = self.answers.table
        for query in self.queries:
            if query.key not in table:
                return f"query {query} has no answer entry"
        for arc in self.arcs:
            if arc.head.key not in table:
                return f"arc {arc} starts at an entry that is not in the answer table"
            if arc.body.key not in table:
                return f"arc {arc} targets an entry that is not in the answer table"
            rules = self.program.rules_for(arc.head.atom.key)
            if arc.rule_id.ordinal > len(rules):
                return f"arc {arc} refers to a rule that is not in the program"
            literal_index = arc.literal_index
            body = rules[arc.rule_id.ordinal - 1].body
            if literal_index > len(body) or getattr(body[literal_index - 1], "atom", None) != arc.body.atom:
                return f"arc {arc} does not match the call at that position"
        return None
