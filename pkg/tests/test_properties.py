from fractions import Fraction

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mxsefl.core import Instance, Valuation, goods_of
from mxsefl.envygraph import build_envy_graph, eliminate_cycles
from mxsefl.fairness import efl_feasible, efx_best, efx_feasible, mms_share, mxs_share
from mxsefl.oracle import audit_allocation, oracle_mxs_share
from mxsefl.solver import SolverConfig, mxs_efl_allocate, replay


@st.composite
def valuations(draw, m):
    kind = draw(st.sampled_from(["additive", "budget", "unit", "mult"]))
    if kind == "mult":
        return Valuation.multiplicative(draw(st.lists(st.integers(1, 4), min_size=m, max_size=m)))
    xs = draw(st.lists(st.integers(0, 6), min_size=m, max_size=m))
    if kind == "budget":
        return Valuation.budget_additive(xs, draw(st.integers(1, 12)))
    return Valuation.unit_demand(xs) if kind == "unit" else Valuation.additive(xs)


@st.composite
def instances(draw, n_max=3, m_max=5):
    n = draw(st.integers(1, n_max))
    m = draw(st.integers(0, m_max))
    return Instance(n, m, tuple(draw(valuations(m)) for _ in range(n)))


@st.composite
def instance_and_partition(draw):
    inst = draw(instances())
    k = draw(st.integers(1, 3))
    labels = draw(st.lists(st.integers(0, k - 1), min_size=inst.m, max_size=inst.m))
    x = [0] * k
    for g, lab in enumerate(labels):
        x[lab] |= 1 << g
    return inst, tuple(x)


SETTINGS = settings(max_examples=80, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SETTINGS
@given(instances())
def test_solver_output_is_certified(inst):
    alloc, trace = mxs_efl_allocate(inst, SolverConfig(debug_assertions=True))
    assert audit_allocation(inst, alloc).verdict
    assert replay(inst, trace) == alloc


@SETTINGS
@given(instance_and_partition())
def test_hierarchy(arg):
    inst, x = arg
    for i in range(inst.n):
        best = efx_best(inst, i, x)
        for l in range(len(x)):
            if l in best:
                assert efx_feasible(inst, i, l, x)
            if efx_feasible(inst, i, l, x):
                assert efl_feasible(inst, i, l, x)


@SETTINGS
@given(instances(n_max=1, m_max=5), st.integers(1, 3))
def test_mxs_share_matches_oracle(inst, k):
    assert mxs_share(inst, 0, k) == oracle_mxs_share(inst, 0, k)[0]


@SETTINGS
@given(instances(n_max=1, m_max=5), st.integers(2, 3))
def test_mms_removal_inequality(inst, k):
    s = inst.goods
    for h in goods_of(s):
        assert mms_share(inst, 0, k - 1, s & ~(1 << h)) >= mms_share(inst, 0, k, s)


@SETTINGS
@given(st.lists(st.integers(0, 6), min_size=0, max_size=6), st.integers(1, 4))
def test_mms_at_most_proportional_additive(vals, k):
    inst = Instance.of([Valuation.additive(vals)])
    assert mms_share(inst, 0, k) <= Fraction(sum(vals), k)


@SETTINGS
@given(instance_and_partition(), st.randoms(use_true_random=False))
def test_eliminate_cycles_acyclic(arg, rnd):
    inst, x = arg
    if len(x) > inst.n:
        return
    f = tuple(rnd.sample(range(inst.n), len(x)))
    assert not build_envy_graph(inst, x, eliminate_cycles(inst, x, f)).has_cycle()
