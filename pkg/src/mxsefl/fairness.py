"""Envy predicates, feasibility notions and share computations.

Predicates take an :class:`~mxsefl.core.Instance`, a 0-based agent and bundle
bitmasks. Shares are computed exactly by enumerating set partitions into at most
``k`` nonempty blocks; the remaining labelled positions are empty bundles, so
the result equals the minimum/maximum over all ``k**|S|`` labelled partitions.
Budgets are expressed in labelled assignments (``k**|S|``) either way.
"""
from __future__ import annotations

import weakref
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional, Sequence

from .core import AgentTable, Bundle, Instance, Valuation, goods_of
from .envygraph import FREE, Assoc, Partition, build_envy_graph, is_source, subchains_to, support
from .errors import InstanceTooLarge

DEFAULT_BUDGET = 1 << 22


def check_budget(k: int, n_goods: int, budget: int, what: str = "partition enumeration") -> None:
    needed = k ** n_goods
    if needed > budget:
        raise InstanceTooLarge(needed, budget, what)


def set_partitions(s: Bundle, k: int) -> Iterator[tuple[Bundle, ...]]:
    """Partitions of ``s`` into at most ``k`` nonempty blocks, each once.

    Blocks are generated in restricted-growth order (block of the lowest good
    first). ``s == 0`` yields the single empty tuple.
    """
    goods = goods_of(s)
    blocks: list[Bundle] = []
    last = len(goods)

    def rec(idx: int):
        if idx == last:
            yield tuple(blocks)
            return
        bit = 1 << goods[idx]
        for b in range(len(blocks)):
            blocks[b] |= bit
            yield from rec(idx + 1)
            blocks[b] ^= bit
        if len(blocks) < k:
            blocks.append(bit)
            yield from rec(idx + 1)
            blocks.pop()

    return rec(0)


# ---------------------------------------------------------------- predicates

def envies(inst: Instance, i: int, s: Bundle, t: Bundle) -> bool:
    val = inst.tables[i].val
    return val[s] < val[t]


def efx_envies(inst: Instance, i: int, s: Bundle, t: Bundle) -> bool:
    """Whether removing some good from ``t`` still leaves ``t`` better than ``s``."""
    if not t:
        return False
    tab = inst.tables[i]
    return tab.val[s] < tab.drop[t]


def _efl_envies(tab: AgentTable, s: Bundle, t: Bundle) -> bool:
    if t & (t - 1) == 0:  # |t| <= 1
        return False
    val = tab.val
    own = val[s]
    rest = t
    while rest:
        low = rest & -rest
        if not (own < val[t ^ low] or own < val[low]):
            return False
        rest ^= low
    return True


def efl_envies(inst: Instance, i: int, s: Bundle, t: Bundle) -> bool:
    return _efl_envies(inst.tables[i], s, t)


def efx_feasible(inst: Instance, i: int, l: int, x: Partition) -> bool:
    tab = inst.tables[i]
    own = tab.val[x[l]]
    drop = tab.drop
    return all(own >= drop[t] for z, t in enumerate(x) if z != l and t)


def efl_feasible_bundle(inst: Instance, i: int, s: Bundle, x: Partition) -> bool:
    tab = inst.tables[i]
    return not any(_efl_envies(tab, s, t) for t in x)


def efl_feasible(inst: Instance, i: int, l: int, x: Partition) -> bool:
    return efl_feasible_bundle(inst, i, x[l], x)


def efx_best(inst: Instance, i: int, x: Partition) -> list[int]:
    """Indices of the EFX-best bundles of agent ``i`` in ``x``.

    A bundle is EFX-best when, after dropping its good of smallest marginal
    value, it is worth at least as much as every other nonempty bundle after
    the same operation. An empty bundle is scored by ``v(empty)``.
    """
    tab = inst.tables[i]
    score = [tab.drop[b] if b else tab.val[0] for b in x]
    return [z for z in range(len(x))
            if all(not x[l] or score[z] >= score[l] for l in range(len(x)) if l != z)]


def eefx_feasible(inst: Instance, i: int, l: int, x: Partition, budget: int = DEFAULT_BUDGET) -> bool:
    """Whether ``x[l]`` is EFX-feasible for ``i`` in some partition of the same size that keeps ``x[l]``."""
    k = len(x)
    rest = inst.goods & ~x[l]
    if k == 1:
        return rest == 0
    check_budget(k - 1, rest.bit_count(), budget, "EEFX enumeration")
    tab = inst.tables[i]
    own = tab.val[x[l]]
    drop = tab.drop
    for blocks in set_partitions(rest, k - 1):
        if all(drop[b] <= own for b in blocks):
            return True
    return False


# ---------------------------------------------------------------- shares

class ShareCache:
    """Memoised MXS and MMS shares of one instance, stored in table units.

    Values are pure functions of the instance, so sharing a cache across runs
    on equal instances is safe.
    """

    def __init__(self, inst: Instance, budget: int = DEFAULT_BUDGET):
        self.inst = inst
        self.budget = budget
        self._mxs: dict[tuple[int, int], int] = {}
        self._mms: dict[tuple[int, int, Bundle], int] = {}

    def mxs_scaled(self, i: int, k: int) -> int:
        key = (i, k)
        hit = self._mxs.get(key)
        if hit is None:
            hit = self._mxs[key] = _mxs_share(self.inst.tables[i], self.inst.goods, k, self.budget)
        return hit

    def mms_scaled(self, i: int, k: int, s: Bundle) -> int:
        key = (i, k, s)
        hit = self._mms.get(key)
        if hit is None:
            hit = self._mms[key] = _mms_share(self.inst.tables[i], s, k, self.budget)
        return hit


_caches: "weakref.WeakKeyDictionary[Instance, ShareCache]" = weakref.WeakKeyDictionary()


def share_cache(inst: Instance, budget: int = DEFAULT_BUDGET) -> ShareCache:
    """The shared cache for ``inst`` (a fresh one when ``budget`` differs)."""
    cache = _caches.get(inst)
    if cache is None or cache.budget != budget:
        cache = ShareCache(inst, budget)
        _caches[inst] = cache
    return cache


def _mxs_share(tab: AgentTable, goods: Bundle, k: int, budget: int) -> int:
    if k < 1:
        raise ValueError("k must be at least 1")
    check_budget(k, goods.bit_count(), budget, "MXS share")
    val, drop = tab.val, tab.drop
    empty = val[0]
    best = None
    for blocks in set_partitions(goods, k):
        bar = max((drop[b] for b in blocks), default=-1)
        low = min(val[b] for b in blocks if val[b] >= bar) if blocks else empty
        if len(blocks) < k and empty >= bar and empty < low:
            low = empty
        if best is None or low < best:
            best = low
    return best


def _mms_share(tab: AgentTable, s: Bundle, k: int, budget: int) -> int:
    if k < 1:
        raise ValueError("k must be at least 1")
    check_budget(k, s.bit_count(), budget, "MMS share")
    val = tab.val
    best = None
    for blocks in set_partitions(s, k):
        low = val[0] if len(blocks) < k else min(val[b] for b in blocks)
        if best is None or low > best:
            best = low
    return best


def mxs_share(inst: Instance, i: int, k: int, cache: ShareCache | None = None) -> Fraction:
    """Smallest value of an EFX-feasible bundle of ``i`` over all ``k``-partitions of the goods."""
    cache = cache or share_cache(inst)
    return Fraction(cache.mxs_scaled(i, k), inst.tables[i].scale)


def mms_share(inst: Instance, i: int, k: int, s: Bundle | None = None, cache: ShareCache | None = None) -> Fraction:
    cache = cache or share_cache(inst)
    s = inst.goods if s is None else s
    return Fraction(cache.mms_scaled(i, k, s), inst.tables[i].scale)


def mxs_feasible(inst: Instance, i: int, l: int, x: Partition, cache: ShareCache | None = None) -> bool:
    cache = cache or share_cache(inst)
    return inst.tables[i].val[x[l]] >= cache.mxs_scaled(i, len(x))


def mxs_efl_feasible(inst: Instance, i: int, l: int, x: Partition, cache: ShareCache | None = None) -> bool:
    return mxs_feasible(inst, i, l, x, cache) and efl_feasible(inst, i, l, x)


def is_mxs_efl(inst: Instance, x: Partition, f: Assoc, cache: ShareCache | None = None) -> bool:
    """Whether every associated bundle is MXS+EFL-feasible for its agent."""
    return all(a is FREE or mxs_efl_feasible(inst, a, l, x, cache) for l, a in enumerate(f))


# ---------------------------------------------------------------- valuation classes

class CheckResult(NamedTuple):
    holds: bool
    counterexample: Optional[dict] = None


def restricted_mms_feasible_check(v: Valuation, k_max: int, m_budget: int,
                                  budget: int = DEFAULT_BUDGET) -> CheckResult:
    """Exhaustively test the restricted-MMS-feasibility condition.

    For every ``S`` with at most ``m_budget`` goods and every ``2 <= k <= k_max``
    the smallest possible largest bundle over ``k``-partitions of ``S`` must be
    at least the largest possible smallest bundle.
    """
    tab = AgentTable.build(v)
    m = v.m
    sizes = [s for s in range(1 << m) if s.bit_count() <= m_budget]
    total = sum(k ** s.bit_count() for s in sizes for k in range(2, k_max + 1))
    if total > budget:
        raise InstanceTooLarge(total, budget, "restricted-MMS check")
    val = tab.val
    for s in sizes:
        for k in range(2, k_max + 1):
            minmax, arg_x = None, None
            maximin, arg_z = None, None
            for blocks in set_partitions(s, k):
                top = max((val[b] for b in blocks), default=val[0])
                low = val[0] if len(blocks) < k else min(val[b] for b in blocks)
                if minmax is None or top < minmax:
                    minmax, arg_x = top, blocks
                if maximin is None or low > maximin:
                    maximin, arg_z = low, blocks
            if minmax < maximin:
                pad = lambda bl: [goods_of(b) for b in bl] + [[]] * (k - len(bl))
                return CheckResult(False, {
                    "S": goods_of(s),
                    "k": k,
                    "X": pad(arg_x),
                    "Z": pad(arg_z),
                    "max_X": str(Fraction(minmax, tab.scale)),
                    "min_Z": str(Fraction(maximin, tab.scale)),
                })
    return CheckResult(True)


def good_cancelable_check(v: Valuation, m_budget: int, budget: int = DEFAULT_BUDGET) -> CheckResult:
    """Search for ``Q, R, S, T`` with ``Q`` and ``S`` disjoint, ``R`` and ``T``
    disjoint, ``v(Q) >= v(R)`` and ``v(S) > v(T)`` but ``v(Q+S) <= v(R+T)``.

    Only pairs whose union has at most ``m_budget`` goods are searched.
    """
    tab = AgentTable.build(v)
    val = tab.val
    pairs = []
    for u in range(1 << v.m):
        if u.bit_count() > m_budget:
            continue
        q = u
        while True:
            pairs.append((val[q], val[u ^ q], val[u], q, u ^ q))
            if q == 0:
                break
            q = (q - 1) & u
    if len(pairs) ** 2 > budget:
        raise InstanceTooLarge(len(pairs) ** 2, budget, "good-cancelable check")
    for vq, vs, vqs, q, s in pairs:
        for vr, vt, vrt, r, t in pairs:
            if vq >= vr and vs > vt and vqs <= vrt:
                return CheckResult(False, {
                    "Q": goods_of(q), "R": goods_of(r), "S": goods_of(s), "T": goods_of(t),
                    "v(Q+S)": str(Fraction(vqs, tab.scale)), "v(R+T)": str(Fraction(vrt, tab.scale)),
                })
    return CheckResult(True)


# ---------------------------------------------------------------- solver invariants

def phase1_invariant_check(inst: Instance, x: Partition, f: Assoc,
                           cache: ShareCache | None = None) -> CheckResult:
    """Loop-head invariant of the first rebalancing phase.

    ``f`` must be MXS+EFL for ``x``, associate every bundle except the last,
    and every subchain ending at the last bundle must extend backwards to a
    chain starting at a source.
    """
    k = len(x)
    for l, a in enumerate(f):
        if a is not FREE and not mxs_efl_feasible(inst, a, l, x, cache):
            return CheckResult(False, {"clause": "mxs+efl", "bundle": l, "agent": a})
    if support(f) != frozenset(range(k - 1)):
        return CheckResult(False, {"clause": "support", "support": sorted(support(f))})
    g = build_envy_graph(inst, x, f)
    for c in subchains_to(inst, x, f, k - 1):
        if not _extends_to_source(g, c):
            return CheckResult(False, {"clause": "subchain", "subchain": list(c)})
    return CheckResult(True)


def _extends_to_source(g, c: Sequence[int]) -> bool:
    used = set(c)

    def back(v: int) -> bool:
        if is_source(g, v):
            return True
        for u in g.pred[v]:
            if u not in used:
                used.add(u)
                if back(u):
                    return True
                used.discard(u)
        return False

    return back(c[0])


def phase2_invariant_a_check(inst: Instance, x: Partition, e: Bundle, j: int, p: int,
                             budget: int = DEFAULT_BUDGET) -> CheckResult:
    """End-of-iteration invariant of the second rebalancing phase.

    ``e`` must be a bundle of ``x`` that is EFL-feasible but not EEFX-feasible
    for ``j``, and ``j`` must not EFX-envy any bundle other than ``x[p]``
    relative to ``e``.
    """
    if e not in x:
        return CheckResult(False, {"clause": "membership", "E": goods_of(e)})
    if not efl_feasible_bundle(inst, j, e, x):
        return CheckResult(False, {"clause": "efl", "E": goods_of(e)})
    if eefx_feasible(inst, j, x.index(e), x, budget):
        return CheckResult(False, {"clause": "not-eefx", "E": goods_of(e)})
    for z, t in enumerate(x):
        if z != p and efx_envies(inst, j, e, t):
            return CheckResult(False, {"clause": "efx-envy", "E": goods_of(e), "bundle": z})
    return CheckResult(True)
