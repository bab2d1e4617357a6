from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .def_value import DefValue
from .program import Atom, RuleId


class CallKey(NamedTuple):
    """Identity of a call pattern: predicate indicator plus the positional model set"""
    predicate: str
    arity: int
    models: Optional[FrozenSet[int]]


def key_sort_key(key: CallKey) -> Tuple:
    if key.models is None:
        return (key.predicate, key.arity, 0, ())
    members = sorted(tuple(i for i in range(key.arity) if m >> i & 1) for m in key.models)
    return (key.predicate, key.arity, 1, tuple(members))


class CallPattern(BaseModel):
    """A base-form atom together with a description of its call"""
    model_config = ConfigDict(frozen=True)

    atom: Atom
    cp: DefValue

    @model_validator(mode="after")
    def _check_scope(self) -> "CallPattern":
        if self.cp.scope != self.atom.variables:
            raise ValueError(f"call description over {self.cp.scope} does not match {self.atom}")
        return self

    @property
    def key(self) -> CallKey:
        return CallKey(self.atom.predicate, self.atom.arity, self.cp.models)

    def __str__(self) -> str:
        return f"{self.atom}:{self.cp}"


class AnswerEntry(BaseModel):
    """Answer table entry `A:CP |-> AP`"""
    model_config = ConfigDict(frozen=True)

    atom: Atom
    call: DefValue
    answer: DefValue

    @model_validator(mode="after")
    def _check_scopes(self) -> "AnswerEntry":
        names = self.atom.variables
        if self.call.scope != names or self.answer.scope != names:
            raise ValueError(f"descriptions of {self.atom} must range over its arguments")
        return self

    @property
    def key(self) -> CallKey:
        return CallKey(self.atom.predicate, self.atom.arity, self.call.models)

    @property
    def call_pattern(self) -> CallPattern:
        return CallPattern(atom=self.atom, cp=self.call)

    def __str__(self) -> str:
        return f"{self.atom} : {self.call} => {self.answer}"


class DependencyArc(BaseModel):
    """`A:CP => B:CP'` recorded at a call position of one of A's rules"""
    model_config = ConfigDict(frozen=True)

    head: CallPattern
    rule_id: RuleId
    literal_index: int = Field(..., ge=1)
    body: CallPattern

    @model_validator(mode="after")
    def _check_rule(self) -> "DependencyArc":
        if (self.rule_id.predicate, self.rule_id.arity) != self.head.atom.key:
            raise ValueError(f"arc rule {self.rule_id} does not define {self.head.atom}")
        return self

    @property
    def slot(self) -> Tuple[CallKey, RuleId, int]:
        return (self.head.key, self.rule_id, self.literal_index)

    @property
    def sort_key(self) -> Tuple:
        return (key_sort_key(self.head.key), self.rule_id.sort_key, self.literal_index)

    def __str__(self) -> str:
        return f"{self.head} => {self.rule_id}#{self.literal_index} {self.body}"


def sort_arcs(arcs: Iterable[DependencyArc]) -> Tuple[DependencyArc, ...]:
    return tuple(sorted(arcs, key=lambda arc: arc.sort_key))


class Certificate(BaseModel):
    """A set of answer table entries, kept in canonical order"""
    model_config = ConfigDict(frozen=True)

    entries: Tuple[AnswerEntry, ...] = ()

    @field_validator("entries")
    @classmethod
    def _canonical(cls, value: Tuple[AnswerEntry, ...]) -> Tuple[AnswerEntry, ...]:
        keys = [entry.key for entry in value]
        if len(set(keys)) != len(keys):
            raise ValueError("certificate has two entries for the same call pattern")
        return tuple(sorted(value, key=lambda entry: key_sort_key(entry.key)))

    @classmethod
    def of(cls, entries: Iterable[AnswerEntry]) -> "Certificate":
        return cls(entries=tuple(entries))

    @property
    def table(self) -> Dict[CallKey, AnswerEntry]:
        return {entry.key: entry for entry in self.entries}

    def keys(self) -> List[CallKey]:
        return [entry.key for entry in self.entries]

    def get(self, key: CallKey) -> Optional[AnswerEntry]:
        for entry in self.entries:
            if entry.key == key:
                return entry
        return None

    def __contains__(self, key: object) -> bool:
        return any(entry.key == key for entry in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def text(self) -> str:
        return "".join(f"{entry}\n" for entry in self.entries)


class IncrementalCertificate(Certificate):
    """Entries of an extended certificate that do not occur in the base certificate"""


class SafetyPolicy(BaseModel):
    """Required entries `A:CP |-> AP_req` of an abstract safety policy"""
    model_config = ConfigDict(frozen=True)

    required: Tuple[AnswerEntry, ...] = ()
