import itertools
from fractions import Fraction

import pytest

from mxsefl.core import (AgentTable, Instance, Valuation, ValuationKind, best_bundle, bundle,
                         fmt_bundle, goods_of, min_marginal_good, next_best_bundle, to_fraction,
                         worst_bundle)
from mxsefl.errors import (DimensionMismatch, EmptyBundle, EmptyCollection, InvalidValuation,
                           MissingTableEntry)

from conftest import additive


def test_bundle_helpers_roundtrip():
    s = bundle([3, 0, 5])
    assert goods_of(s) == [0, 3, 5]
    assert fmt_bundle(s) == "{0,3,5}"
    assert bundle([]) == 0


def test_to_fraction_rejects_floats_and_bools():
    assert to_fraction("3/6") == Fraction(1, 2)
    with pytest.raises(InvalidValuation):
        to_fraction(0.5)
    with pytest.raises(InvalidValuation):
        to_fraction(True)


def test_additive_value():
    assert Valuation.additive([4, 3, 1]).value(bundle([0, 2])) == 5


@pytest.mark.parametrize("v, empty", [
    (Valuation.additive([1, 2]), 0),
    (Valuation.budget_additive([1, 2], 2), 0),
    (Valuation.unit_demand([1, 2]), 0),
    (Valuation.multiplicative([1, 2]), 1),
])
def test_empty_bundle_value(v, empty):
    assert v.value(0) == empty


def test_budget_additive_caps():
    assert Valuation.budget_additive([4, 3, 1], 6).value(bundle([0, 1])) == 6
    assert Valuation.budget_additive([4, 3, 1], 6).value(bundle([1, 2])) == 4


def test_unit_demand_and_multiplicative():
    assert Valuation.unit_demand([1, 7, 3]).value(0b111) == 7
    assert Valuation.multiplicative([2, 3, 1]).value(0b011) == 6


def test_constructor_invariants():
    with pytest.raises(InvalidValuation):
        Valuation.additive([1, -1])
    with pytest.raises(InvalidValuation):
        Valuation.multiplicative([1, Fraction(1, 2)])
    with pytest.raises(InvalidValuation):
        Valuation.budget_additive([1, 2], 0)
    with pytest.raises(InvalidValuation):
        Valuation.from_table(2, {0: 0, 1: 3, 2: 1, 3: 2})


def test_table_lookup_and_missing_entry():
    v = Valuation.from_table(2, {0: 0, 1: 1, 3: 2})
    assert v.value(3) == 2
    with pytest.raises(MissingTableEntry):
        v.value(2)


@pytest.mark.parametrize("v", [
    Valuation.additive([3, 0, 2, 5]),
    Valuation.budget_additive([3, 0, 2, 5], 6),
    Valuation.unit_demand([3, 0, 2, 5]),
    Valuation.multiplicative([3, 1, 2, 5]),
])
def test_monotone(v):
    for s in range(16):
        for t in range(16):
            if s & t == s:
                assert v.value(s) <= v.value(t)


def test_agent_table_is_exact():
    v = Valuation.additive(["1/2", "1/3", "1/6"])
    tab = AgentTable.build(v)
    for s in range(8):
        assert tab.exact(s) == v.value(s)


def test_instance_dimension_checks():
    with pytest.raises(DimensionMismatch):
        Instance(2, 2, (Valuation.additive([1, 1]),))
    with pytest.raises(DimensionMismatch):
        Instance.of([Valuation.additive([1]), Valuation.additive([1, 2])])


def _naive_order(inst, i, ys):
    return sorted(range(len(ys)), key=lambda z: (-inst.value(i, ys[z]), -len(goods_of(ys[z])), z))


def test_best_bundle_examples():
    inst = additive([1, 1])
    assert best_bundle(inst, 0, [0b01, 0b10]) == (0, 0b01)
    inst = Instance.of([Valuation.unit_demand([2, 1])])
    assert best_bundle(inst, 0, [0b01, 0b11]) == (1, 0b11)
    inst = additive([4, 3, 1])
    assert best_bundle(inst, 0, [0b001, 0b110]) == (1, 0b110)
    with pytest.raises(EmptyCollection):
        best_bundle(inst, 0, [])


def test_next_best_bundle_examples():
    inst = additive([4, 3, 1])
    assert next_best_bundle(inst, 0, [0b001, 0b010, 0b100]) == (1, 0b010)
    inst = additive([1, 1, 1])
    assert next_best_bundle(inst, 0, [0b001, 0b010, 0b100])[0] == 1
    inst = additive([3, 4, 1])
    assert next_best_bundle(inst, 0, [0b011, 0b100]) == (1, 0b100)
    with pytest.raises(EmptyCollection):
        next_best_bundle(inst, 0, [0b1])


def test_worst_bundle_examples():
    inst = additive([4, 3, 1])
    assert worst_bundle(inst, 0, [0b001, 0b110]) == (0, 0b001)
    assert worst_bundle(inst, 0, [0b110]) == (0, 0b110)
    assert worst_bundle(inst, 0, [0, 0b001]) == (0, 0)


def test_rank_helpers_match_naive_sort():
    inst = additive([2, 1, 1, 0])
    ys_all = list(range(16))
    for ys in itertools.combinations(ys_all, 3):
        order = _naive_order(inst, 0, ys)
        assert best_bundle(inst, 0, ys)[0] == order[0]
        assert next_best_bundle(inst, 0, ys)[0] == order[1]
        assert worst_bundle(inst, 0, ys)[0] == order[-1]


def test_min_marginal_good_examples():
    assert min_marginal_good(additive([2, 5]), 0, 0b11) == 0
    assert min_marginal_good(additive([1, 1, 1, 1]), 0, 0b1000) == 3
    assert min_marginal_good(additive([1, 1, 7]), 0, 0b111) == 0
    with pytest.raises(EmptyBundle):
        min_marginal_good(additive([1]), 0, 0)


def test_min_marginal_good_maximises_remainder():
    inst = Instance.of([Valuation.budget_additive([3, 1, 4, 1, 5], 7)])
    for p in range(1, 32):
        g = min_marginal_good(inst, 0, p)
        assert all(inst.value(0, p & ~(1 << g)) >= inst.value(0, p & ~(1 << h)) for h in goods_of(p))


def test_valuation_kind_values():
    assert {k.value for k in ValuationKind} == {"additive", "budget-additive", "unit-demand",
                                                 "multiplicative", "table"}
