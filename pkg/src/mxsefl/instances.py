"""Seeded instance generation and a fixed corpus of hand-built edge cases.

Random draws use :class:`random.Random` (Mersenne Twister) seeded with the
:class:`GeneratorSpec` seed, consumed in a fixed order: agent by agent, good by good,
then the budget (budget-additive) or one draw per subset in increasing bitmask
order (table).
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

from .core import Instance, Valuation, ValuationKind
from .errors import InvalidSpec

KIND_ALIASES = {
    "additive": ValuationKind.ADDITIVE,
    "budget": ValuationKind.BUDGET_ADDITIVE,
    "budget-additive": ValuationKind.BUDGET_ADDITIVE,
    "unit": ValuationKind.UNIT_DEMAND,
    "unit-demand": ValuationKind.UNIT_DEMAND,
    "mult": ValuationKind.MULTIPLICATIVE,
    "multiplicative": ValuationKind.MULTIPLICATIVE,
    "table": ValuationKind.TABLE,
}


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    m: int
    kind: ValuationKind = ValuationKind.ADDITIVE
    lo: int = 0
    hi: int = 8
    budget_lo: Optional[int] = None
    budget_hi: Optional[int] = None
    seed: int = 0
    rational: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", KIND_ALIASES.get(self.kind, None) or ValuationKind(self.kind))
        except ValueError:
            raise InvalidSpec(f"unknown valuation kind {self.kind!r}") from None
        if self.n < 1 or self.m < 0:
            raise InvalidSpec("need n >= 1 and m >= 0")
        if self.lo < 0 or self.hi < self.lo:
            raise InvalidSpec(f"bad value range [{self.lo}, {self.hi}]")
        if self.kind is ValuationKind.MULTIPLICATIVE and self.lo < 1:
            raise InvalidSpec("multiplicative values must have lower bound >= 1")
        if not 0 <= self.seed < 1 << 64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        if self.kind is ValuationKind.BUDGET_ADDITIVE:
            lo, hi = self.budget_range()
            if lo < 1 or hi < lo:
                raise InvalidSpec(f"bad budget range [{lo}, {hi}]")

    def budget_range(self) -> tuple[int, int]:
        lo = 1 if self.budget_lo is None else self.budget_lo
        hi = max(lo, self.hi * max(self.m, 1) // 2) if self.budget_hi is None else self.budget_hi
        return lo, hi


def _draw(rng: random.Random, spec: GeneratorSpec) -> Fraction:
    if not spec.rational:
        return Fraction(rng.randint(spec.lo, spec.hi))
    den = rng.randint(1, 4)
    # rational draws stay inside [lo, hi]
    return Fraction(rng.randint(spec.lo * den, spec.hi * den), den)


def generate(spec: GeneratorSpec) -> Instance:
    rng = random.Random(spec.seed)
    vals = []
    for _ in range(spec.n):
        if spec.kind is ValuationKind.TABLE:
            raw = [_draw(rng, spec) for _ in range(1 << spec.m)]
            table = [Fraction(0)] * (1 << spec.m)
            for s in range(1, 1 << spec.m):
                below = max(table[s & ~(1 << g)] for g in range(spec.m) if s >> g & 1)
                table[s] = max(raw[s], below)
            vals.append(Valuation.from_table(spec.m, dict(enumerate(table))))
            continue
        goods = [_draw(rng, spec) for _ in range(spec.m)]
        if spec.kind is ValuationKind.ADDITIVE:
            vals.append(Valuation.additive(goods))
        elif spec.kind is ValuationKind.BUDGET_ADDITIVE:
            vals.append(Valuation.budget_additive(goods, rng.randint(*spec.budget_range())))
        elif spec.kind is ValuationKind.UNIT_DEMAND:
            vals.append(Valuation.unit_demand(goods))
        else:
            vals.append(Valuation.multiplicative(goods))
    return Instance(spec.n, spec.m, tuple(vals))


CORPUS_VERSION = 1


class CorpusEntry(NamedTuple):
    name: str
    note: str
    instance: Instance


def _add(rows) -> Instance:
    return Instance.of([Valuation.additive(r) for r in rows])


def table_violator() -> Valuation:
    """Monotone 4-good table that is not restricted-MMS-feasible.

    Pairs {0,1} and {2,3} are worth 2, every other pair 1, singletons 0, and
    every larger bundle 2.
    """
    table = {}
    for s in range(16):
        c = s.bit_count()
        if c <= 1:
            table[s] = 0
        elif c == 2:
            table[s] = 2 if s in (0b0011, 0b1100) else 1
        else:
            table[s] = 2
    return Valuation.from_table(4, table)


def adversarial_corpus() -> list[CorpusEntry]:
    """Fixed hand-built instances (version :data:`CORPUS_VERSION`)."""
    add = Valuation.additive
    return [
        CorpusEntry("single-agent", "n=1 takes everything", _add([[3, 1, 2]])),
        CorpusEntry("no-goods", "m=0, every bundle empty", _add([[], [], []])),
        CorpusEntry("all-zero", "every good worthless to every agent", _add([[0] * 4] * 3)),
        CorpusEntry("zero-goods", "goods worthless to some agents only", _add([[0, 0, 5, 1], [0, 3, 0, 0]])),
        CorpusEntry("identical-3", "three identical additive agents", _add([[5, 4, 3, 3, 2, 1]] * 3)),
        CorpusEntry("identical-unit", "four agents, four unit goods, all ties", _add([[1] * 4] * 4)),
        CorpusEntry("ties-5", "all-ones values with more goods than agents", _add([[1] * 5] * 3)),
        CorpusEntry("findmins-shared", "two agents share their minimum-marginal good",
                    _add([[1, 5, 6], [1, 9, 2]])),
        CorpusEntry("findmins-distinct", "minimum-marginal goods differ per agent",
                    _add([[2, 5, 7], [6, 1, 7]])),
        CorpusEntry("findmins-tied", "every good ties for minimum marginal value",
                    _add([[2, 2, 2], [3, 3, 3]])),
        CorpusEntry("more-agents", "four agents, two goods: empty bundles are forced",
                    _add([[2, 1], [1, 2], [3, 3], [0, 1]])),
        CorpusEntry("dominant-good", "one good outweighs all others", _add([[100, 1, 1, 1]] * 3)),
        CorpusEntry("example-2", "two agents with opposite tastes", _add([[4, 3, 1], [1, 2, 5]])),
        CorpusEntry("phase2-entry", "3 agents, m=4; reaches the second phase",
                    _add([[6, 3, 6, 3], [0, 2, 4, 3], [3, 6, 6, 2]])),
        CorpusEntry("phase2-entry-b", "3 agents, m=4; second instance reaching the second phase",
                    _add([[5, 5, 6, 6], [1, 2, 5, 5], [6, 0, 6, 2]])),
        CorpusEntry("phase2-one-iter", "completes one second-phase iteration",
                    _add([[0, 23, 16, 8, 2], [8, 25, 10, 2, 9], [1, 27, 12, 1, 23]])),
        CorpusEntry("phase2-two-iter", "completes two second-phase iterations",
                    _add([[41, 48, 55, 15, 47, 8, 3], [44, 44, 48, 1, 40, 41, 5], [46, 6, 40, 13, 19, 4, 8]])),
        CorpusEntry("phase2-six-iter", "completes six second-phase iterations",
                    _add([[48, 54, 49, 0, 46, 19, 11, 9], [44, 44, 48, 2, 39, 39, 6, 0],
                          [50, 9, 28, 17, 13, 2, 5, 1]])),
        CorpusEntry("rational", "non-integer values exercise table scaling",
                    _add([["1/2", "1/3", "1/6", "1/6"], ["1/7", "2/7", "3/7", "1/7"]])),
        CorpusEntry("budget-tight", "budget caps bind for every agent",
                    Instance.of([Valuation.budget_additive([4, 3, 1, 2, 2], 4),
                                 Valuation.budget_additive([1, 1, 5, 3, 0], 5),
                                 Valuation.budget_additive([2, 2, 2, 2, 2], 3)])),
        CorpusEntry("unit-demand", "unit-demand agents with shared favourite",
                    Instance.of([Valuation.unit_demand([1, 2, 3, 4])] * 2
                                + [Valuation.unit_demand([4, 0, 0, 1])])),
        CorpusEntry("multiplicative", "multiplicative agents, ones are neutral goods",
                    Instance.of([Valuation.multiplicative([1, 2, 3, 1]),
                                 Valuation.multiplicative([2, 2, 1, 5])])),
        CorpusEntry("mixed-classes", "one agent of each closed-form class",
                    Instance.of([add([3, 1, 4, 1, 5]),
                                 Valuation.budget_additive([2, 7, 1, 8, 2], 9),
                                 Valuation.unit_demand([1, 4, 1, 4, 2]),
                                 Valuation.multiplicative([1, 2, 1, 3, 2])])),
        CorpusEntry("additive-table", "additive values given as a full table",
                    Instance.of([Valuation.from_table(3, {s: sum((1, 2, 4)[g] for g in range(3) if s >> g & 1)
                                                          for s in range(8)}),
                                 add([2, 2, 1])])),
    ]
