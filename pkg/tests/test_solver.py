import itertools
import random

import pytest

import mxsefl.solver as solver
from mxsefl.core import Instance, Valuation
from mxsefl.envygraph import FREE, support
from mxsefl.errors import InvariantViolation, NoFairAssociation, NotRestrictedMmsFeasible
from mxsefl.fairness import is_mxs_efl, mxs_efl_feasible, mxs_share
from mxsefl.instances import GeneratorSpec, adversarial_corpus, generate, table_violator
from mxsefl.oracle import audit_allocation, brute_force_fair_association_exists
from mxsefl.solver import (Allocation, SolverConfig, SolverTrace, fair_association,
                           find_mins, has_fair_association, mxs_efl_allocate, rebalance, replay,
                           replay_states)
from mxsefl.errors import EmptyBundle

from conftest import additive, all_partitions


def corpus(name):
    return next(e.instance for e in adversarial_corpus() if e.name == name)


def test_find_mins_examples():
    assert find_mins(additive([2, 5], [3, 1]), 0b11, 0, 1) == (0, 1)
    assert find_mins(additive([1, 5], [2, 9]), 0b11, 0, 1) == (0, 0)
    assert find_mins(additive([1, 1, 1], [1, 1, 1]), 0b100, 0, 1) == (2, 2)
    with pytest.raises(EmptyBundle):
        find_mins(additive([1], [1]), 0, 0, 1)


def test_find_mins_shared_corpus_case():
    inst = corpus("findmins-shared")
    assert find_mins(inst, inst.goods, 0, 1) == (0, 0)
    inst = corpus("findmins-distinct")
    a, b = find_mins(inst, inst.goods, 0, 1)
    assert a != b


def test_find_mins_prefers_common_over_lowest():
    # agent 0 ties goods 0 and 1, agent 1's only minimum is good 1
    inst = additive([1, 1, 5], [3, 1, 5])
    assert find_mins(inst, 0b111, 0, 1) == (1, 1)


def test_has_fair_association_examples():
    inst = additive([1, 2, 3], [3, 2, 1])
    assert has_fair_association(inst, (0b111,))
    assert fair_association(inst, (0b111,)) == (0,)
    same = additive([1, 1, 1, 1], [1, 1, 1, 1])
    assert has_fair_association(same, (0b0011, 0b1100))
    assert fair_association(same, (0b0011, 0b1100)) == (0, 1)
    assert not has_fair_association(same, (0b1111, 0))
    with pytest.raises(NoFairAssociation):
        fair_association(same, (0b1111, 0))


def test_fair_association_is_fair():
    rng = random.Random(1)
    for _ in range(150):
        n, m = rng.randint(1, 3), rng.randint(0, 5)
        inst = additive(*[[rng.randint(0, 4) for _ in range(m)] for _ in range(n)])
        k = rng.randint(1, n)
        x = rng.choice(list(all_partitions(m, k)))
        ok = has_fair_association(inst, x)
        assert ok == brute_force_fair_association_exists(inst, x)
        if ok:
            f = fair_association(inst, x)
            assert support(f) == frozenset(range(k))
            assert all(mxs_efl_feasible(inst, a, l, x) for l, a in enumerate(f))


def test_more_bundles_than_agents():
    inst = additive([1, 1])
    assert not has_fair_association(inst, (0b01, 0b10))


def test_rebalance_from_everything_in_one_bundle():
    for rows in itertools.product(itertools.product(range(3), repeat=3), repeat=2):
        inst = additive(*rows)
        x, f, trace = rebalance(inst, (inst.goods, 0), (0, FREE))
        assert sorted(f) == [0, 1]
        assert is_mxs_efl(inst, x, f)


def test_rebalance_returns_unchanged_when_already_fair():
    inst = additive([1, 1, 1, 1], [1, 1, 1, 1])
    x, f, trace = rebalance(inst, (0b0011, 0b1100), (0, FREE))
    assert x == (0b0011, 0b1100)
    assert trace.of("move") == []


def test_allocate_single_agent():
    inst = additive([3, 1, 2])
    alloc, _ = mxs_efl_allocate(inst)
    assert alloc == Allocation((0b111,), (0,))


def test_allocate_two_agent_example(example2):
    alloc, _ = mxs_efl_allocate(example2, SolverConfig(debug_assertions=True))
    assert audit_allocation(example2, alloc).verdict


def test_allocate_identical_three():
    inst = additive(*[[5, 4, 3, 3, 2, 1]] * 3)
    alloc, _ = mxs_efl_allocate(inst)
    for a in range(3):
        assert inst.value(a, alloc.bundle_of(a)) >= mxs_share(inst, a, 3)


def test_phase2_entry_corpus():
    for name, iters in [("phase2-entry", 0), ("phase2-one-iter", 1),
                        ("phase2-two-iter", 2), ("phase2-six-iter", 6)]:
        inst = corpus(name)
        alloc, trace = mxs_efl_allocate(inst, SolverConfig(debug_assertions=True))
        assert trace.of("phase2_enter")
        assert len(trace.of("phase2_iter")) == iters
        assert audit_allocation(inst, alloc).verdict


def test_outer_loop_order_from_trace():
    inst = corpus("phase2-two-iter")
    _, trace = mxs_efl_allocate(inst)
    kinds = [e["event"] for e in trace.events]
    for pos, kind in enumerate(kinds):
        if kind == "extend":
            assert trace.events[pos - 1]["event"] == "eliminate_cycles"
            assert trace.events[pos - 1]["where"] == "outer"
    states = list(replay_states(trace))
    for e, x, f in states:
        if e["event"] == "extend":
            assert x[-1] == 0 and f[-1] is FREE


def test_replay_reproduces_allocation():
    for entry in adversarial_corpus():
        alloc, trace = mxs_efl_allocate(entry.instance)
        assert replay(entry.instance, trace) == alloc
        again = SolverTrace.from_jsonl(trace.to_jsonl())
        assert replay(entry.instance, again) == alloc


def test_determinism_and_debug_neutrality():
    for seed in range(20):
        inst = generate(GeneratorSpec(n=3, m=6, seed=seed))
        a1, t1 = mxs_efl_allocate(inst)
        a2, t2 = mxs_efl_allocate(inst, SolverConfig(debug_assertions=True))
        assert a1 == a2
        assert t1.to_jsonl() == t2.to_jsonl()


def test_fault_injection_raises(monkeypatch):
    inst = corpus("phase2-one-iter")
    real = solver.eliminate_cycles

    def corrupt(inst, x, f, **kw):
        out = list(real(inst, x, f, **kw))
        # drop the agent of the first associated bundle
        held = [l for l, a in enumerate(out) if a is not None]
        out[held[0]] = None
        return tuple(out)

    monkeypatch.setattr(solver, "eliminate_cycles", corrupt)
    with pytest.raises(InvariantViolation) as info:
        mxs_efl_allocate(inst, SolverConfig(debug_assertions=True))
    assert info.value.trace is not None


def test_restricted_mms_precheck():
    inst = Instance.of([table_violator(), Valuation.additive([1, 1, 1, 1])])
    with pytest.raises(NotRestrictedMmsFeasible):
        mxs_efl_allocate(inst, SolverConfig(check_restricted_mms=True))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(phase1_cap=0)
