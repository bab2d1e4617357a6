from enum import Enum
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from .program import Atom, PredicateKey, Rule


class UpdateClass(str, Enum):
    ADDITION = "addition"
    DELETION = "deletion"
    ARBITRARY = "arbitrary"
    EMPTY = "empty"


class UpdateTuple(BaseModel):
    """Rules added to and deleted from one predicate"""
    model_config = ConfigDict(frozen=True)

    atom: Atom
    additions: Tuple[Rule, ...] = ()
    deletions: Tuple[Rule, ...] = ()

    @model_validator(mode="after")
    def _check_rules(self) -> "UpdateTuple":
        for rule in self.additions + self.deletions:
            if rule.head.key != self.atom.key:
                raise ValueError(f"rule {rule} does not define {self.atom.predicate}/{self.atom.arity}")
        added = {rule.signature() for rule in self.additions}
        if any(rule.signature() in added for rule in self.deletions):
            raise ValueError(f"a rule of {self.atom.predicate}/{self.atom.arity} is both added and deleted")
        return self

    @property
    def predicate(self) -> PredicateKey:
        return self.atom.key


class Update(BaseModel):
    """A program update: at most one tuple per predicate"""
    model_config = ConfigDict(frozen=True)

    tuples: Tuple[UpdateTuple, ...] = ()

    @model_validator(mode="after")
    def _check_unique(self) -> "Update":
        keys = [t.predicate for t in self.tuples]
        if len(set(keys)) != len(keys):
            raise ValueError("update has two tuples for the same predicate")
        return self

    def predicates(self) -> List[PredicateKey]:
        return [t.predicate for t in self.tuples]

    @property
    def is_empty(self) -> bool:
        return all(not t.additions and not t.deletions for t in self.tuples)
