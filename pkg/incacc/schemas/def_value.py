from typing import FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from ..config import get_settings
from ..exceptions import ScopeLimitExceeded
from .program import VARIABLE_NAME


def validate_scope(value: Tuple[str, ...]) -> Tuple[str, ...]:
    """Distinct, well-formed variable names within the configured cap"""
    cap = get_settings().scope_cap
    if len(value) > cap:
        raise ScopeLimitExceeded(f"scope of {len(value)} variables exceeds the cap of {cap}")
    if len(set(value)) != len(value):
        raise ValueError(f"scope has duplicate variables: {value}")
    for name in value:
        if not VARIABLE_NAME.match(name):
            raise ValueError(f"invalid variable name {name!r}")
    return value


class DefValue(BaseModel):
    """
    An element of the Def domain over an ordered variable scope.

    Each model is a bit set over `scope` (bit i set means scope[i] is ground).
    `models is None` marks bottom; every other value contains the all-true
    model and is closed under pairwise intersection.
    """
    model_config = ConfigDict(frozen=True)

    scope: Tuple[str, ...] = ()
    models: Optional[FrozenSet[int]] = None

    @field_validator("scope")
    @classmethod
    def _check_scope(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        return validate_scope(value)

    @classmethod
    def closed(cls, scope: Tuple[str, ...], models: FrozenSet[int]) -> "DefValue":
        """
        Build a value from a model set already known to be closed under
        intersection and to contain the all-true model.

        Only the scope is validated. Domain operations use this for results
        whose closure follows from their inputs.
        """
        return cls.model_construct(scope=validate_scope(tuple(scope)), models=frozenset(models))

    @model_validator(mode="after")
    def _check_definite(self) -> "DefValue":
        if self.models is None:
            return self
        full = (1 << len(self.scope)) - 1
        if not self.models:
            raise ValueError("empty model set; use bottom")
        if full not in self.models:
            raise ValueError("the all-true model is missing")
        if any(m < 0 or m > full for m in self.models):
            raise ValueError("model outside of the scope")
        if len(self.models) == full + 1:
            return self
        ordered = sorted(self.models)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1:]:
                if a & b not in self.models:
                    raise ValueError("model set is not closed under intersection")
        return self

    @classmethod
    def top(cls, scope: Tuple[str, ...]) -> "DefValue":
        return cls.closed(tuple(scope), frozenset(range(1 << len(scope))))

    @classmethod
    def bottom(cls, scope: Tuple[str, ...]) -> "DefValue":
        return cls(scope=tuple(scope), models=None)

    @property
    def is_bottom(self) -> bool:
        return self.models is None

    @property
    def is_top(self) -> bool:
        return self.models is not None and len(self.models) == 1 << len(self.scope)

    def model_members(self) -> List[Tuple[int, ...]]:
        """Models as sorted tuples of scope positions, in canonical order"""
        if self.models is None:
            return []
        return sorted(
            tuple(i for i in range(len(self.scope)) if m >> i & 1) for m in self.models
        )

    @property
    def sort_key(self) -> Tuple:
        if self.models is None:
            return (0, ())
        return (1, tuple(self.model_members()))

    def __str__(self) -> str:
        if self.models is None:
            return "bot"
        if self.is_top:
            return "true"
        rendered = ";".join(
            "[" + ",".join(self.scope[i] for i in members) + "]" for members in self.model_members()
        )
        return f"models({rendered})"
