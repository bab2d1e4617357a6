import re
from collections import defaultdict
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator

VARIABLE_NAME = re.compile(r"^[A-Z_][A-Za-z0-9_]*$")

# Lists are built from the binary functor "." and the constant "[]"
LIST_CONS = "."
LIST_NIL = "[]"

PredicateKey = Tuple[str, int]


class Variable(BaseModel):
    """A logic variable"""
    model_config = ConfigDict(frozen=True)

    name: str

    @field_validator("name")
    @classmethod
    def _check_name(cls, value: str) -> str:
        if not VARIABLE_NAME.match(value):
            raise ValueError(f"invalid variable name {value!r}")
        return value

    def variables(self) -> List[str]:
        return [self.name]

    def rename(self, mapping: Mapping[str, str]) -> "Variable":
        return Variable(name=mapping.get(self.name, self.name))

    def __str__(self) -> str:
        return self.name


class Function(BaseModel):
    """A compound term; constants are functions without arguments"""
    model_config = ConfigDict(frozen=True)

    name: str
    args: Tuple["Term", ...] = ()

    @field_validator("name")
    @classmethod
    def _check_name(cls, value: str) -> str:
        if not value:
            raise ValueError("functor names must be non-empty")
        return value

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> List[str]:
        seen: List[str] = []
        for arg in self.args:
            for name in arg.variables():
                if name not in seen:
                    seen.append(name)
        return seen

    def rename(self, mapping: Mapping[str, str]) -> "Function":
        return Function(name=self.name, args=tuple(arg.rename(mapping) for arg in self.args))

    def __str__(self) -> str:
        if self.name == LIST_CONS and self.arity == 2:
            items = [str(self.args[0])]
            tail = self.args[1]
            while isinstance(tail, Function) and tail.name == LIST_CONS and tail.arity == 2:
                items.append(str(tail.args[0]))
                tail = tail.args[1]
            if isinstance(tail, Function) and tail.name == LIST_NIL and not tail.args:
                return "[" + ",".join(items) + "]"
            return "[" + ",".join(items) + "|" + str(tail) + "]"
        if not self.args:
            return self.name
        return f"{self.name}({','.join(str(arg) for arg in self.args)})"


Term = Union[Variable, Function]
Function.model_rebuild()


class Atom(BaseModel):
    """A predicate applied to pairwise distinct variables"""
    model_config = ConfigDict(frozen=True)

    predicate: str
    arity: int
    args: Tuple[Variable, ...] = ()

    @model_validator(mode="after")
    def _check_base_form(self) -> "Atom":
        if len(self.args) != self.arity:
            raise ValueError(f"{self.predicate}/{self.arity} applied to {len(self.args)} arguments")
        names = [arg.name for arg in self.args]
        if len(set(names)) != len(names):
            raise ValueError(f"atom arguments must be distinct variables: {names}")
        return self

    @classmethod
    def of(cls, predicate: str, *names: str) -> "Atom":
        return cls(predicate=predicate, arity=len(names), args=tuple(Variable(name=n) for n in names))

    @property
    def key(self) -> PredicateKey:
        return (self.predicate, self.arity)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(arg.name for arg in self.args)

    def rename(self, mapping: Mapping[str, str]) -> "Atom":
        return Atom(predicate=self.predicate, arity=self.arity, args=tuple(a.rename(mapping) for a in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(self.variables)})"


class Constraint(BaseModel):
    """A unification equation `Var = term`"""
    model_config = ConfigDict(frozen=True)

    lhs: Variable
    rhs: Term

    def variables(self) -> List[str]:
        names = [self.lhs.name]
        for name in self.rhs.variables():
            if name not in names:
                names.append(name)
        return names

    def rename(self, mapping: Mapping[str, str]) -> "Constraint":
        return Constraint(lhs=self.lhs.rename(mapping), rhs=self.rhs.rename(mapping))

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"


class Call(BaseModel):
    """A body call to a predicate"""
    model_config = ConfigDict(frozen=True)

    atom: Atom

    def variables(self) -> List[str]:
        return list(self.atom.variables)

    def rename(self, mapping: Mapping[str, str]) -> "Call":
        return Call(atom=self.atom.rename(mapping))

    def __str__(self) -> str:
        return str(self.atom)


Literal = Union[Constraint, Call]


class RuleId(BaseModel):
    """Predicate indicator plus 1-based position among the predicate's rules"""
    model_config = ConfigDict(frozen=True)

    predicate: str
    arity: int
    ordinal: int

    @field_validator("ordinal")
    @classmethod
    def _check_ordinal(cls, value: int) -> int:
        if value < 1:
            raise ValueError("rule ordinals start at 1")
        return value

    @property
    def sort_key(self) -> Tuple[str, int, int]:
        return (self.predicate, self.arity, self.ordinal)

    def __str__(self) -> str:
        return f"{self.predicate}/{self.arity}/{self.ordinal}"


class Rule(BaseModel):
    """A normalized rule `H :- B1, ..., Bn`"""
    model_config = ConfigDict(frozen=True)

    id: RuleId
    head: Atom
    body: Tuple[Literal, ...] = ()

    @model_validator(mode="after")
    def _check_id(self) -> "Rule":
        if (self.id.predicate, self.id.arity) != self.head.key:
            raise ValueError(f"rule id {self.id} does not match head {self.head}")
        return self

    @property
    def variables(self) -> Tuple[str, ...]:
        """Rule scope: head variables first, then body variables by first occurrence"""
        names: List[str] = list(self.head.variables)
        for literal in self.body:
            for name in literal.variables():
                if name not in names:
                    names.append(name)
        return tuple(names)

    def rename(self, mapping: Mapping[str, str]) -> "Rule":
        return Rule(
            id=self.id,
            head=self.head.rename(mapping),
            body=tuple(literal.rename(mapping) for literal in self.body),
        )

    def with_ordinal(self, ordinal: int) -> "Rule":
        if ordinal == self.id.ordinal:
            return self
        return Rule(
            id=RuleId(predicate=self.id.predicate, arity=self.id.arity, ordinal=ordinal),
            head=self.head,
            body=self.body,
        )

    def signature(self) -> str:
        """Text of the rule with variables renamed by first occurrence; equal iff variants"""
        mapping = {name: f"_{i}" for i, name in enumerate(self.variables)}
        renamed = self.rename(mapping)
        return renamed.text()

    def text(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(literal) for literal in self.body)}."

    def __str__(self) -> str:
        return self.text()


class Program(BaseModel):
    """An ordered set of normalized rules"""
    model_config = ConfigDict(frozen=True)

    rules: Tuple[Rule, ...] = ()

    _index: Dict[PredicateKey, Tuple[Rule, ...]] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_rules(self) -> "Program":
        seen = set()
        heads: Dict[PredicateKey, Atom] = {}
        counts: Dict[PredicateKey, int] = defaultdict(int)
        for rule in self.rules:
            if rule.id in seen:
                raise ValueError(f"duplicate rule id {rule.id}")
            seen.add(rule.id)
            key = rule.head.key
            counts[key] += 1
            if rule.id.ordinal != counts[key]:
                raise ValueError(f"rule ordinals of {key[0]}/{key[1]} are not dense in program order")
            if key in heads and heads[key] != rule.head:
                raise ValueError(f"rules of {key[0]}/{key[1]} disagree on the head {heads[key]} vs {rule.head}")
            heads.setdefault(key, rule.head)
        return self

    def model_post_init(self, __context: Any) -> None:
        grouped: Dict[PredicateKey, List[Rule]] = {}
        for rule in self.rules:
            grouped.setdefault(rule.head.key, []).append(rule)
        self._index = {key: tuple(rules) for key, rules in grouped.items()}

    @property
    def index(self) -> Dict[PredicateKey, Tuple[Rule, ...]]:
        """Rules grouped by predicate, in program order; built once per program"""
        return self._index

    def predicates(self) -> List[PredicateKey]:
        """Defined predicates in order of first definition"""
        return list(self._index)

    def rules_for(self, key: PredicateKey) -> Tuple[Rule, ...]:
        """Rules of one predicate; empty for an undefined predicate"""
        return self._index.get(key, ())

    def head_of(self, key: PredicateKey) -> Optional[Atom]:
        """Base-form head shared by the rules of `key`"""
        rules = self.rules_for(key)
        return rules[0].head if rules else None

    def text(self) -> str:
        return "".join(f"{rule}\n" for rule in self.rules)

    def __str__(self) -> str:
        return self.text()
