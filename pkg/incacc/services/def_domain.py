from typing import Dict, FrozenSet, Iterable, List, Mapping, Protocol, Sequence, Set, Tuple

from ..exceptions import DomainError
from ..schemas.def_value import DefValue, validate_scope
from ..schemas.program import Constraint, Function, Term, Variable


class AbstractDomain(Protocol):
    """Operations the analyzer and checker need from an abstract domain"""

    def top(self, scope: Sequence[str]) -> DefValue: ...

    def bottom(self, scope: Sequence[str]) -> DefValue: ...

    def abstract_constraint(self, constraint: Constraint, scope: Sequence[str]) -> DefValue: ...

    def meet(self, a: DefValue, b: DefValue) -> DefValue: ...

    def alub(self, a: DefValue, b: DefValue) -> DefValue: ...

    def leq(self, a: DefValue, b: DefValue) -> bool: ...

    def project(self, a: DefValue, sub: Sequence[str]) -> DefValue: ...

    def rename(self, a: DefValue, mapping: Mapping[str, str]) -> DefValue: ...

    def relabel(self, a: DefValue, names: Sequence[str]) -> DefValue: ...

    def extend(self, a: DefValue, superscope: Sequence[str]) -> DefValue: ...


def close_under_intersection(models: Iterable[int]) -> FrozenSet[int]:
    closed: Set[int] = set(models)
    frontier = list(closed)
    while frontier:
        x = frontier.pop()
        for y in list(closed):
            z = x & y
            if z not in closed:
                closed.add(z)
                frontier.append(z)
    return frozenset(closed)


def _submasks(mask: int) -> Iterable[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


class DefDomain:
    """Definite Boolean functions represented by explicit model sets"""

    def top(self, scope: Sequence[str]) -> DefValue:
        return DefValue.top(tuple(scope))

    def bottom(self, scope: Sequence[str]) -> DefValue:
        return DefValue.bottom(tuple(scope))

    def abstract_constraint(self, constraint: Constraint, scope: Sequence[str]) -> DefValue:
        """Groundness dependencies of `X = t`: X <-> (conjunction of the variables of t)"""
        return self.abstract_equation(constraint.lhs, constraint.rhs, scope)

    def abstract_equation(self, lhs: Term, rhs: Term, scope: Sequence[str]) -> DefValue:
        """
        Description of an arbitrary term equation.

        Compound terms with the same functor are matched argument-wise; a
        functor clash cannot succeed and yields bottom.

        Args:
            lhs: Left-hand term
            rhs: Right-hand term
            scope: Variables of the resulting description

        Returns:
            DefValue over scope
        """
        scope = tuple(scope)
        position = {name: i for i, name in enumerate(scope)}
        pairs: List[Tuple[Term, Term]] = []
        if not self._decompose(lhs, rhs, pairs):
            return self.bottom(scope)

        def mask_of(term: Term) -> int:
            mask = 0
            for name in term.variables():
                if name not in position:
                    raise DomainError(f"variable {name} is not in scope {scope}")
                mask |= 1 << position[name]
            return mask

        equations = [(mask_of(a), mask_of(b)) for a, b in pairs]
        models = frozenset(
            m for m in range(1 << len(scope))
            if all(((m & left) == left) == ((m & right) == right) for left, right in equations)
        )
        return DefValue.closed(scope, models)

    def _decompose(self, lhs: Term, rhs: Term, pairs: List[Tuple[Term, Term]]) -> bool:
        if isinstance(lhs, Function) and isinstance(rhs, Function):
            if lhs.name != rhs.name or lhs.arity != rhs.arity:
                return False
            return all(self._decompose(a, b, pairs) for a, b in zip(lhs.args, rhs.args))
        pairs.append((lhs, rhs))
        return True

    def meet(self, a: DefValue, b: DefValue) -> DefValue:
        """Conjunction: the models both values share"""
        self._same_scope(a, b)
        if a.is_bottom or b.is_bottom:
            return self.bottom(a.scope)
        common = a.models & b.models
        if not common:
            return self.bottom(a.scope)
        return DefValue.closed(a.scope, common)

    def alub(self, a: DefValue, b: DefValue) -> DefValue:
        """
        Least upper bound in Def: the union of both model sets closed under
        intersection.

        Both inputs are closed already, so the pairwise meets of their
        models complete the closure.
        """
        self._same_scope(a, b)
        if a.is_bottom:
            return b
        if b.is_bottom:
            return a
        if a.models <= b.models:
            return b
        if b.models <= a.models:
            return a
        models = set(a.models | b.models)
        models.update(x & y for x in a.models for y in b.models)
        return DefValue.closed(a.scope, models)

    def leq(self, a: DefValue, b: DefValue) -> bool:
        """Entailment order: `a` is below `b` when every model of `a` is one of `b`"""
        self._same_scope(a, b)
        if a.is_bottom:
            return True
        if b.is_bottom:
            return False
        return a.models <= b.models

    def project(self, a: DefValue, sub: Sequence[str]) -> DefValue:
        """Existential quantification of the variables outside `sub`, reordered as `sub`"""
        sub = tuple(sub)
        index = {name: i for i, name in enumerate(a.scope)}
        missing = [name for name in sub if name not in index]
        if missing:
            raise DomainError(f"cannot project {a.scope} onto {sub}: {missing} not in scope")
        if a.is_bottom:
            return self.bottom(sub)
        sources = [index[name] for name in sub]
        # restriction commutes with bitwise and, so the image stays closed
        restricted = set()
        for m in a.models:
            r = 0
            for target, source in enumerate(sources):
                if m >> source & 1:
                    r |= 1 << target
            restricted.add(r)
        return DefValue.closed(sub, restricted)

    def rename(self, a: DefValue, mapping: Mapping[str, str]) -> DefValue:
        """Rename the scope through an injective `mapping`; the models are unchanged"""
        missing = [name for name in a.scope if name not in mapping]
        if missing:
            raise DomainError(f"renaming does not cover {missing}")
        scope = tuple(mapping[name] for name in a.scope)
        if len(set(scope)) != len(scope):
            raise DomainError(f"renaming of {a.scope} is not injective")
        if a.is_bottom:
            return self.bottom(scope)
        return DefValue.closed(scope, a.models)

    def relabel(self, a: DefValue, names: Sequence[str]) -> DefValue:
        """Positional renaming onto `names`"""
        names = tuple(names)
        if len(names) != len(a.scope):
            raise DomainError(f"cannot relabel {a.scope} as {names}")
        return self.rename(a, dict(zip(a.scope, names)))

    def extend(self, a: DefValue, superscope: Sequence[str]) -> DefValue:
        """Cylindrification onto `superscope`: the new variables are unconstrained"""
        superscope = validate_scope(tuple(superscope))
        index = {name: i for i, name in enumerate(superscope)}
        missing = [name for name in a.scope if name not in index]
        if missing:
            raise DomainError(f"cannot extend {a.scope} to {superscope}: {missing} not contained")
        if a.is_bottom:
            return self.bottom(superscope)
        targets = [index[name] for name in a.scope]
        used = 0
        for target in targets:
            used |= 1 << target
        free = ((1 << len(superscope)) - 1) & ~used
        models = set()
        for m in a.models:
            base = 0
            for source, target in enumerate(targets):
                if m >> source & 1:
                    base |= 1 << target
            # every assignment of the free variables
            for extra in _submasks(free):
                models.add(base | extra)
        return DefValue.closed(superscope, models)

    def _same_scope(self, a: DefValue, b: DefValue) -> None:
        if a.scope != b.scope:
            raise DomainError(f"scope mismatch: {a.scope} vs {b.scope}")


def all_values(scope: Sequence[str]) -> List[DefValue]:
    """Every element of Def over `scope` (bottom first); exponential, for small scopes"""
    scope = tuple(scope)
    full = (1 << len(scope)) - 1
    others = [m for m in range(full + 1) if m != full]
    values: Dict[FrozenSet[int], DefValue] = {}
    for selection in range(1 << len(others)):
        models = {full} | {others[i] for i in range(len(others)) if selection >> i & 1}
        if close_under_intersection(models) == frozenset(models):
            frozen = frozenset(models)
            values[frozen] = DefValue(scope=scope, models=frozen)
    return [DefValue.bottom(scope)] + [values[k] for k in sorted(values, key=lambda s: sorted(s))]
