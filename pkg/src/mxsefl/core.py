"""Goods, bundles, valuations and instances.

Bundles are plain ``int`` bitmasks: bit ``g`` is set when good ``g`` is in the
bundle. Union, intersection and difference are single integer operations and
the canonical member order is ascending good index.

Every value is an exact :class:`fractions.Fraction`. For the hot loops each
agent also gets an :class:`AgentTable` holding its valuation of every subset of
``M`` scaled by a positive constant to plain integers; all comparisons the
algorithm makes are between values of a single agent, so scaling is exact.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    DimensionMismatch,
    EmptyBundle,
    EmptyCollection,
    InstanceTooLarge,
    InvalidValuation,
    MissingTableEntry,
)

Bundle = int
Number = Union[int, Fraction, str]

#: Largest good count for which per-agent lookup tables (2^m entries) are built.
MAX_TABLE_GOODS = 20


def bundle(goods: Iterable[int] = ()) -> Bundle:
    mask = 0
    for g in goods:
        if g < 0:
            raise ValueError(f"negative good index {g}")
        mask |= 1 << g
    return mask


def goods_of(s: Bundle) -> list[int]:
    """Members of ``s`` in ascending order."""
    out = []
    g = 0
    while s:
        if s & 1:
            out.append(g)
        s >>= 1
        g += 1
    return out


def size(s: Bundle) -> int:
    return s.bit_count()


def full_bundle(m: int) -> Bundle:
    return (1 << m) - 1


def fmt_bundle(s: Bundle) -> str:
    return "{" + ",".join(str(g) for g in goods_of(s)) + "}"


def to_fraction(x: Number) -> Fraction:
    """Parse an exact rational. Floats are refused on purpose."""
    if isinstance(x, bool):
        raise InvalidValuation(f"boolean is not a value: {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidValuation(f"not a rational: {x!r}") from exc
    raise InvalidValuation(f"values must be int, Fraction or 'p/q' strings, got {type(x).__name__}")


class ValuationKind(str, enum.Enum):
    ADDITIVE = "additive"
    BUDGET_ADDITIVE = "budget-additive"
    UNIT_DEMAND = "unit-demand"
    MULTIPLICATIVE = "multiplicative"
    TABLE = "table"


@dataclass(frozen=True)
class Valuation:
    """A monotone set function over goods ``0..m-1``.

    Use the named constructors; ``__post_init__`` enforces the invariants of
    each kind (nonnegative per-good values, per-good values >= 1 for the
    multiplicative kind, monotone tables).
    """

    kind: ValuationKind
    m: int
    values: tuple[Fraction, ...] = ()
    budget: Fraction | None = None
    table: tuple[tuple[Bundle, Fraction], ...] = ()
    _lookup: Mapping[Bundle, Fraction] = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        kind = ValuationKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.m < 0:
            raise InvalidValuation("m must be nonnegative")
        if kind is ValuationKind.TABLE:
            lookup = {}
            for s, v in self.table:
                if s < 0 or s >> self.m:
                    raise InvalidValuation(f"table bundle {fmt_bundle(s)} outside [0, {self.m})")
                if v < 0:
                    raise InvalidValuation(f"negative table value at {fmt_bundle(s)}")
                lookup[s] = v
            _check_table_monotone(lookup, self.m)
            object.__setattr__(self, "_lookup", lookup)
            return
        if len(self.values) != self.m:
            raise DimensionMismatch(f"{len(self.values)} per-good values for m={self.m}")
        floor = 1 if kind is ValuationKind.MULTIPLICATIVE else 0
        for g, v in enumerate(self.values):
            if v < floor:
                raise InvalidValuation(f"{kind.value} value of good {g} must be >= {floor}, got {v}")
        if kind is ValuationKind.BUDGET_ADDITIVE:
            if self.budget is None or self.budget <= 0:
                raise InvalidValuation("budget-additive valuations need a positive budget")
        elif self.budget is not None:
            raise InvalidValuation(f"{kind.value} valuations take no budget")

    @classmethod
    def additive(cls, values: Sequence[Number]) -> Valuation:
        vals = tuple(to_fraction(v) for v in values)
        return cls(ValuationKind.ADDITIVE, len(vals), vals)

    @classmethod
    def budget_additive(cls, values: Sequence[Number], budget: Number) -> Valuation:
        vals = tuple(to_fraction(v) for v in values)
        return cls(ValuationKind.BUDGET_ADDITIVE, len(vals), vals, to_fraction(budget))

    @classmethod
    def unit_demand(cls, values: Sequence[Number]) -> Valuation:
        vals = tuple(to_fraction(v) for v in values)
        return cls(ValuationKind.UNIT_DEMAND, len(vals), vals)

    @classmethod
    def multiplicative(cls, values: Sequence[Number]) -> Valuation:
        vals = tuple(to_fraction(v) for v in values)
        return cls(ValuationKind.MULTIPLICATIVE, len(vals), vals)

    @classmethod
    def from_table(cls, m: int, table: Mapping[Bundle, Number]) -> Valuation:
        items = tuple(sorted((int(s), to_fraction(v)) for s, v in table.items()))
        return cls(ValuationKind.TABLE, m, table=items)

    def value(self, s: Bundle) -> Fraction:
        if s < 0 or s >> self.m:
            raise DimensionMismatch(f"bundle {fmt_bundle(s)} is not a subset of [0, {self.m})")
        kind = self.kind
        if kind is ValuationKind.TABLE:
            try:
                return self._lookup[s]
            except KeyError:
                raise MissingTableEntry(f"no table entry for {fmt_bundle(s)}") from None
        members = goods_of(s)
        if kind is ValuationKind.ADDITIVE:
            return sum((self.values[g] for g in members), Fraction(0))
        if kind is ValuationKind.BUDGET_ADDITIVE:
            return min(sum((self.values[g] for g in members), Fraction(0)), self.budget)
        if kind is ValuationKind.UNIT_DEMAND:
            return max((self.values[g] for g in members), default=Fraction(0))
        prod = Fraction(1)
        for g in members:
            prod *= self.values[g]
        return prod


def _check_table_monotone(lookup: Mapping[Bundle, Fraction], m: int) -> None:
    if len(lookup) == 1 << m:
        # complete table: checking covering pairs S -> S+g is enough
        for s, v in lookup.items():
            rest = full_bundle(m) & ~s
            while rest:
                low = rest & -rest
                if lookup[s | low] < v:
                    raise InvalidValuation(f"table not monotone at {fmt_bundle(s)} -> {fmt_bundle(s | low)}")
                rest ^= low
        return
    items = list(lookup.items())
    for s, vs in items:
        for t, vt in items:
            if s != t and s & t == s and vs > vt:
                raise InvalidValuation(f"table not monotone at {fmt_bundle(s)} -> {fmt_bundle(t)}")


def value(v: Valuation, s: Bundle) -> Fraction:
    return v.value(s)


@dataclass(frozen=True)
class AgentTable:
    """One agent's valuation of every subset, scaled to integers.

    ``val[s] == scale * v(s)``. ``drop[s]`` is ``max_g val[s - g]`` and
    ``drop_good[s]`` the lowest-index good attaining it (the good of smallest
    marginal value); both are -1 for the empty bundle.
    """

    scale: int
    val: tuple[int, ...]
    drop: tuple[int, ...]
    drop_good: tuple[int, ...]

    @classmethod
    def build(cls, v: Valuation) -> AgentTable:
        m = v.m
        if m > MAX_TABLE_GOODS:
            raise InstanceTooLarge(1 << m, 1 << MAX_TABLE_GOODS, "value table")
        exact = [v.value(s) for s in range(1 << m)]
        scale = 1
        for x in exact:
            scale = math.lcm(scale, x.denominator)
        val = [int(x * scale) for x in exact]
        drop = [-1] * (1 << m)
        drop_good = [-1] * (1 << m)
        for s in range(1, 1 << m):
            best, arg = -1, -1
            rest, g = s, 0
            while rest:
                if rest & 1:
                    w = val[s ^ (1 << g)]
                    if w > best:
                        best, arg = w, g
                rest >>= 1
                g += 1
            drop[s] = best
            drop_good[s] = arg
        return cls(scale, tuple(val), tuple(drop), tuple(drop_good))

    def exact(self, s: Bundle) -> Fraction:
        return Fraction(self.val[s], self.scale)


@dataclass(frozen=True)
class Instance:
    n: int
    m: int
    valuations: tuple[Valuation, ...]

    def __post_init__(self):
        object.__setattr__(self, "valuations", tuple(self.valuations))
        if self.n < 1:
            raise DimensionMismatch("need at least one agent")
        if self.m < 0:
            raise DimensionMismatch("m must be nonnegative")
        if len(self.valuations) != self.n:
            raise DimensionMismatch(f"{len(self.valuations)} valuations for n={self.n}")
        for i, v in enumerate(self.valuations):
            if v.m != self.m:
                raise DimensionMismatch(f"valuation of agent {i} covers {v.m} goods, instance has {self.m}")

    @classmethod
    def of(cls, valuations: Sequence[Valuation]) -> Instance:
        valuations = tuple(valuations)
        if not valuations:
            raise DimensionMismatch("need at least one agent")
        return cls(len(valuations), valuations[0].m, valuations)

    @property
    def goods(self) -> Bundle:
        return full_bundle(self.m)

    @cached_property
    def tables(self) -> tuple[AgentTable, ...]:
        return tuple(AgentTable.build(v) for v in self.valuations)

    def value(self, i: int, s: Bundle) -> Fraction:
        return self.valuations[i].value(s)


def _rank(tab: AgentTable, ys: Sequence[Bundle]) -> list[int]:
    """Indices of ``ys`` sorted best-first by (value, cardinality, -index)."""
    return sorted(range(len(ys)), key=lambda z: (-tab.val[ys[z]], -ys[z].bit_count(), z))


def best_bundle(inst: Instance, i: int, ys: Sequence[Bundle]) -> tuple[int, Bundle]:
    """Most valuable bundle for agent ``i``; ties go to more goods, then the lower index."""
    if not ys:
        raise EmptyCollection("best_bundle of an empty list")
    z = _rank(inst.tables[i], ys)[0]
    return z, ys[z]


def next_best_bundle(inst: Instance, i: int, ys: Sequence[Bundle]) -> tuple[int, Bundle]:
    if len(ys) < 2:
        raise EmptyCollection("next_best_bundle needs at least two bundles")
    z = _rank(inst.tables[i], ys)[1]
    return z, ys[z]


def worst_bundle(inst: Instance, i: int, ys: Sequence[Bundle]) -> tuple[int, Bundle]:
    """Last bundle in the best-first order, so it never coincides with ``best_bundle`` for two or more bundles."""
    if not ys:
        raise EmptyCollection("worst_bundle of an empty list")
    z = _rank(inst.tables[i], ys)[-1]
    return z, ys[z]


def min_marginal_good(inst: Instance, i: int, p: Bundle) -> int:
    if not p:
        raise EmptyBundle("min_marginal_good of the empty bundle")
    return inst.tables[i].drop_good[p]
