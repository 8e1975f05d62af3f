"""Core constraint model: vocabularies, constraints, biases, assignments.

Variables live in named integer tensors; a constraint applies a binary
relation to an ordered pair of variables (optionally carrying an integer
parameter, e.g. the divisor of the same-bucket relation used in exam
timetabling). Scopes are stored canonically: variables in tensor
declaration order, then row-major index order, with asymmetric relations
flipped to match. This way each unordered variable pair contributes
exactly one candidate per relation kind.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence


class RelKind(Enum):
    GEQ = ">="
    LEQ = "<="
    LT = "<"
    GT = ">"
    NEQ = "!="
    EQ = "=="
    FLOORDIV_NEQ = "div!="

    @property
    def needs_param(self) -> bool:
        return self is RelKind.FLOORDIV_NEQ


#: The six comparison relations, in a fixed order.
COMPARISONS = (RelKind.GEQ, RelKind.LEQ, RelKind.LT, RelKind.GT, RelKind.NEQ, RelKind.EQ)

_FLIP = {
    RelKind.GEQ: RelKind.LEQ,
    RelKind.LEQ: RelKind.GEQ,
    RelKind.LT: RelKind.GT,
    RelKind.GT: RelKind.LT,
    RelKind.NEQ: RelKind.NEQ,
    RelKind.EQ: RelKind.EQ,
    RelKind.FLOORDIV_NEQ: RelKind.FLOORDIV_NEQ,
}


def rel_holds(kind: RelKind, param: Optional[int], a: int, b: int) -> bool:
    """Whether the relation holds for scope values (a, b)."""
    if kind is RelKind.EQ:
        return a == b
    if kind is RelKind.NEQ:
        return a != b
    if kind is RelKind.LT:
        return a < b
    if kind is RelKind.GT:
        return a > b
    if kind is RelKind.LEQ:
        return a <= b
    if kind is RelKind.GEQ:
        return a >= b
    if kind is RelKind.FLOORDIV_NEQ:
        return a // param != b // param
    raise ValueError(f"unknown relation kind {kind!r}")


@dataclass(frozen=True)
class Relation:
    kind: RelKind
    param: Optional[int] = None

    def __post_init__(self):
        if self.kind.needs_param:
            if self.param is None or self.param < 1:
                raise ValueError(f"{self.kind.name} requires an integer parameter >= 1")
        elif self.param is not None:
            raise ValueError(f"{self.kind.name} carries no parameter")

    @property
    def arity(self) -> int:
        return 2


class Var(NamedTuple):
    """A variable reference: (tensor name, index vector)."""

    tensor: str
    index: tuple[int, ...]

    def __repr__(self) -> str:
        return f"{self.tensor}[{','.join(map(str, self.index))}]"


class Outcome(Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class TensorDecl:
    name: str
    shape: tuple[int, ...]
    lower: int
    upper: int
    holes: frozenset[int] = frozenset()

    def __post_init__(self):
        if not self.shape or any(s < 1 for s in self.shape):
            raise ValueError(f"tensor {self.name!r}: shape extents must be positive")
        if not self.domain_values():
            raise ValueError(f"tensor {self.name!r}: empty domain")

    def domain_values(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.lower, self.upper + 1) if v not in self.holes)


class Vocabulary:
    """The pair (X, D): variable tensors plus per-variable finite domains."""

    def __init__(self, tensors: Sequence[TensorDecl]):
        names = [t.name for t in tensors]
        if len(set(names)) != len(names):
            raise ValueError("tensor names must be unique")
        self.tensors = tuple(tensors)
        self._by_name = {t.name: t for t in tensors}
        self.variables: tuple[Var, ...] = tuple(
            Var(t.name, idx)
            for t in tensors
            for idx in itertools.product(*(range(s) for s in t.shape))
        )
        self.ordinal: dict[Var, int] = {v: i for i, v in enumerate(self.variables)}

    def __len__(self) -> int:
        return len(self.variables)

    def __contains__(self, var: Var) -> bool:
        return var in self.ordinal

    def tensor(self, name: str) -> TensorDecl:
        return self._by_name[name]

    def domain(self, var: Var) -> tuple[int, ...]:
        return self._by_name[var.tensor].domain_values()

    def check_var(self, var: Var) -> Var:
        decl = self._by_name.get(var.tensor)
        if decl is None:
            raise ValidationError(f"unknown tensor {var.tensor!r}")
        if len(var.index) != len(decl.shape) or any(
            not (0 <= i < s) for i, s in zip(var.index, decl.shape)
        ):
            raise ValidationError(f"index {var.index} out of range for tensor {var.tensor!r} of shape {decl.shape}")
        return var

    def constraint(
        self, kind: RelKind, scope: Sequence[Var], param: Optional[int] = None
    ) -> "Constraint":
        """Build a constraint with its scope in canonical variable order."""
        for v in scope:
            self.check_var(v)
        return make_canonical(kind, tuple(scope), param, self.ordinal)


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    """A relation applied to an ordered scope of variables."""

    kind: RelKind
    scope: tuple[Var, ...]
    param: Optional[int] = None

    def __post_init__(self):
        Relation(self.kind, self.param)  # parameter validity
        if len(self.scope) != 2:
            raise ValueError("only binary constraints are supported")
        if len(set(self.scope)) != len(self.scope):
            raise ValueError("scope contains a repeated variable")

    @property
    def variables(self) -> frozenset[Var]:
        return frozenset(self.scope)

    def __repr__(self) -> str:
        a, b = self.scope
        if self.kind is RelKind.FLOORDIV_NEQ:
            return f"({a!r}//{self.param}) != ({b!r}//{self.param})"
        return f"{a!r} {self.kind.value} {b!r}"


def make_canonical(
    kind: RelKind,
    scope: tuple[Var, ...],
    param: Optional[int],
    ordinal: Mapping[Var, int],
) -> Constraint:
    a, b = scope
    if ordinal[a] > ordinal[b]:
        return Constraint(_FLIP[kind], (b, a), param)
    return Constraint(kind, scope, param)


class Assignment:
    """A partial or complete mapping from variables to domain values."""

    __slots__ = ("bindings",)

    def __init__(self, bindings: Mapping[Var, int]):
        self.bindings = dict(bindings)

    @property
    def support(self) -> frozenset[Var]:
        return frozenset(self.bindings)

    def __len__(self) -> int:
        return len(self.bindings)

    def __contains__(self, var: Var) -> bool:
        return var in self.bindings

    def __getitem__(self, var: Var) -> int:
        return self.bindings[var]

    def __eq__(self, other) -> bool:
        return isinstance(other, Assignment) and self.bindings == other.bindings

    def __hash__(self) -> int:
        return hash(frozenset(self.bindings.items()))

    def project(self, variables: Iterable[Var]) -> "Assignment":
        b = self.bindings
        return Assignment({v: b[v] for v in variables if v in b})

    def __repr__(self) -> str:
        items = ", ".join(f"{v!r}={x}" for v, x in sorted(self.bindings.items()))
        return f"{{{items}}}"


def check_assignment(e: Assignment, voc: Vocabulary) -> None:
    """Raise ValidationError unless every bound value lies in its domain."""
    for v, x in e.bindings.items():
        voc.check_var(v)
        if x not in voc.domain(v):
            raise ValidationError(f"value {x} outside domain of {v!r}")


def evaluate_constraint(c: Constraint, e: Assignment) -> Outcome:
    """SATISFIED/VIOLATED per the relation, UNDECIDED if a scope var is unbound."""
    b = e.bindings
    va, vb = c.scope
    if va not in b or vb not in b:
        return Outcome.UNDECIDED
    return Outcome.SATISFIED if rel_holds(c.kind, c.param, b[va], b[vb]) else Outcome.VIOLATED


class ConstraintSet:
    """An ordered, duplicate-free collection of constraints."""

    __slots__ = ("_items",)

    def __init__(self, items: Iterable[Constraint] = ()):
        self._items: dict[Constraint, None] = dict.fromkeys(items)

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, c: Constraint) -> bool:
        return c in self._items

    def __eq__(self, other) -> bool:
        return isinstance(other, ConstraintSet) and set(self._items) == set(other._items)

    def __repr__(self) -> str:
        return f"ConstraintSet({list(self._items)!r})"

    def add(self, c: Constraint) -> None:
        self._items[c] = None

    def discard(self, c: Constraint) -> None:
        self._items.pop(c, None)

    def remove_all(self, cs: Iterable[Constraint]) -> None:
        for c in cs:
            self._items.pop(c, None)

    def copy(self) -> "ConstraintSet":
        return ConstraintSet(self._items)

    def union(self, other: Iterable[Constraint]) -> "ConstraintSet":
        out = self.copy()
        for c in other:
            out.add(c)
        return out

    def restrict(self, variables: Iterable[Var]) -> "ConstraintSet":
        """C[Y]: the constraints whose scope is a subset of Y."""
        ys = variables if isinstance(variables, (set, frozenset)) else set(variables)
        return ConstraintSet(c for c in self._items if ys.issuperset(c.scope))


def kappa(C: Iterable[Constraint], e: Assignment) -> ConstraintSet:
    """The subset of C rejected by e (scope fully bound and relation false)."""
    b = e.bindings
    out = []
    for c in C:
        va, vb = c.scope
        xa = b.get(va)
        if xa is None:
            continue
        xb = b.get(vb)
        if xb is None:
            continue
        if not rel_holds(c.kind, c.param, xa, xb):
            out.append(c)
    return ConstraintSet(out)


def build_bias(
    voc: Vocabulary,
    language: Sequence[Relation],
    restrict_to: Optional[Iterable[Var]] = None,
    must_include: Optional[Var] = None,
) -> ConstraintSet:
    """All candidate constraints over unordered variable pairs of voc.

    Each unordered pair yields one candidate per relation in the language,
    canonically oriented. With restrict_to given, only pairs inside that
    set are kept; with must_include given, only pairs containing that
    variable.
    """
    if not language:
        raise ValueError("language must be non-empty")
    if restrict_to is not None:
        allowed = set(restrict_to)
        if must_include is not None and must_include not in allowed:
            raise ValueError("must_include variable is not in restrict_to")
        pool = [v for v in voc.variables if v in allowed]
    else:
        pool = list(voc.variables)

    if must_include is not None:
        voc.check_var(must_include)
        pairs = (
            tuple(sorted((must_include, v), key=voc.ordinal.__getitem__))
            for v in pool
            if v != must_include
        )
    else:
        pairs = itertools.combinations(pool, 2)

    out = ConstraintSet()
    for a, b in pairs:
        for rel in language:
            out.add(Constraint(rel.kind, (a, b), rel.param))
    return out
