"""Definition-level verification, kept independent of the solver's fast paths.

Everything here is computed from :meth:`Valuation.value` and labelled
partition enumeration (``itertools.product``); nothing goes through the
integer tables or the set-partition enumerator used by :mod:`mxsefl.fairness`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .core import Bundle, Instance, goods_of
from .envygraph import Partition
from .errors import DimensionMismatch, InstanceTooLarge
from .fairness import DEFAULT_BUDGET, mxs_efl_feasible
from .solver import Allocation

ONE = Fraction(1)


def enumerate_labeled_partitions(s: Bundle, k: int, budget: int = DEFAULT_BUDGET) -> Iterator[Partition]:
    """Every assignment of the goods of ``s`` to ``k`` labelled bundles, once each."""
    members = goods_of(s)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k ** len(members) > budget:
        raise InstanceTooLarge(k ** len(members), budget, "labelled partitions")
    for labels in itertools.product(range(k), repeat=len(members)):
        out = [0] * k
        for g, lab in zip(members, labels):
            out[lab] |= 1 << g
        yield tuple(out)


class _Values:
    """Memoised exact valuation of one agent."""

    def __init__(self, inst: Instance, i: int):
        self._v = inst.valuations[i]
        self._cache: dict[Bundle, Fraction] = {}
        self._drop: dict[Bundle, Fraction] = {}

    def __call__(self, s: Bundle) -> Fraction:
        hit = self._cache.get(s)
        if hit is None:
            hit = self._cache[s] = self._v.value(s)
        return hit

    def max_without_one(self, s: Bundle) -> Fraction:
        """``max_{g in s} v(s - g)``; only defined for nonempty ``s``."""
        hit = self._drop.get(s)
        if hit is None:
            hit = self._drop[s] = max(self(s & ~(1 << g)) for g in goods_of(s))
        return hit


def _ratio(num: Fraction, den: Fraction) -> Fraction:
    if den == 0:
        return ONE
    return min(ONE, num / den)


def _efx_envies(v: _Values, s: Bundle, t: Bundle) -> bool:
    return any(v(s) < v(t & ~(1 << g)) for g in goods_of(t))


def _efl_envies(v: _Values, s: Bundle, t: Bundle) -> bool:
    members = goods_of(t)
    if len(members) <= 1:
        return False
    return all(v(s) < v(t & ~(1 << g)) or v(s) < v(1 << g) for g in members)


def oracle_shares(inst: Instance, k: int, budget: int = DEFAULT_BUDGET) -> list[dict]:
    """MXS and MMS shares of every agent over ``k``-partitions of all goods.

    One pass over the labelled partitions serves all agents. Each entry holds
    ``mxs`` with its attaining ``(partition, bundle)`` and ``mms`` with its
    attaining partition.
    """
    vals = [_Values(inst, i) for i in range(inst.n)]
    out = [{"mxs": None, "mxs_at": None, "mms": None, "mms_at": None} for _ in range(inst.n)]
    for y in enumerate_labeled_partitions(inst.goods, k, budget):
        for i, v in enumerate(vals):
            worth = [v(b) for b in y]
            # v(Y_l) < v(Y_z - g) for some g in Y_z  <=>  v(Y_l) < max_g v(Y_z - g)
            top = [v.max_without_one(b) if b else None for b in y]
            rec = out[i]
            for l in range(k):
                if any(t is not None and worth[l] < t for z, t in enumerate(top) if z != l):
                    continue
                if rec["mxs"] is None or worth[l] < rec["mxs"]:
                    rec["mxs"], rec["mxs_at"] = worth[l], (y, l)
            low = min(worth)
            if rec["mms"] is None or low > rec["mms"]:
                rec["mms"], rec["mms_at"] = low, y
    return out


def oracle_mxs_share(inst: Instance, i: int, k: int, budget: int = DEFAULT_BUDGET
                     ) -> tuple[Fraction, Partition, int]:
    """MXS share straight from the definition, with the attaining partition and bundle."""
    v = _Values(inst, i)
    best = None
    for y in enumerate_labeled_partitions(inst.goods, k, budget):
        for l in range(k):
            if any(_efx_envies(v, y[l], y[z]) for z in range(k) if z != l):
                continue
            if best is None or v(y[l]) < best[0]:
                best = (v(y[l]), y, l)
    return best


def oracle_mms_share(inst: Instance, i: int, k: int, s: Bundle, budget: int = DEFAULT_BUDGET
                     ) -> tuple[Fraction, Partition]:
    v = _Values(inst, i)
    best = None
    for y in enumerate_labeled_partitions(s, k, budget):
        low = min(v(b) for b in y)
        if best is None or low > best[0]:
            best = (low, y)
    return best


@dataclass
class AgentAudit:
    agent: int
    bundle: list[int]
    value: Fraction
    efl: bool
    mxs: bool
    mxs_share: Fraction
    ef1: bool
    alpha_efx: Fraction
    alpha_mms: Fraction
    mms_share: Fraction
    pmms_alpha: Fraction
    gmms_alpha: Optional[Fraction]
    proportional: bool
    witnesses: dict = field(default_factory=dict)


@dataclass
class AuditReport:
    """Per-agent fairness certificates of one allocation.

    Ratios are capped at 1 and a zero denominator counts as 1. ``gmms_alpha``
    is ``None`` whenever the agent-subset scan ran out of budget
    (``gmms_coverage`` tells how far it got).
    """

    n: int
    m: int
    agents: list[AgentAudit]
    gmms_coverage: tuple[int, int]

    @property
    def verdict(self) -> bool:
        return all(a.efl and a.mxs for a in self.agents)

    def min_field(self, name: str) -> Optional[Fraction]:
        vals = [getattr(a, name) for a in self.agents]
        if any(v is None for v in vals):
            return None
        return min(vals, default=ONE)

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, dict):
                return {k: enc(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [enc(v) for v in x]
            return x

        return {
            "version": 1,
            "n": self.n,
            "m": self.m,
            "verdict": self.verdict,
            "gmms_coverage": list(self.gmms_coverage),
            "agents": [
                {
                    "agent": a.agent,
                    "bundle": a.bundle,
                    "value": enc(a.value),
                    "EFL": a.efl,
                    "MXS": a.mxs,
                    "mxs_share": enc(a.mxs_share),
                    "EF1": a.ef1,
                    "alpha_EFX": enc(a.alpha_efx),
                    "alpha_MMS": enc(a.alpha_mms),
                    "mms_share": enc(a.mms_share),
                    "PMMS_alpha": enc(a.pmms_alpha),
                    "GMMS_alpha": enc(a.gmms_alpha),
                    "proportional": a.proportional,
                    "witnesses": enc(a.witnesses),
                }
                for a in self.agents
            ],
        }


def _part(y: Partition) -> list[list[int]]:
    return [goods_of(b) for b in y]


def audit_allocation(inst: Instance, alloc: Allocation, budget: int = DEFAULT_BUDGET,
                     gmms_budget: int = DEFAULT_BUDGET) -> AuditReport:
    """Evaluate every fairness notion of ``alloc`` from its definition."""
    n = inst.n
    x = alloc.partition
    if len(x) != n or sorted(a for a in alloc.assoc if a is not None) != list(range(n)):
        raise DimensionMismatch("audit needs a full allocation with one bundle per agent")
    own = [alloc.bundle_of(i) for i in range(n)]
    vals = [_Values(inst, i) for i in range(n)]

    grand = oracle_shares(inst, n, budget)
    mms: dict[tuple[int, int, Bundle], tuple[Fraction, Partition]] = {
        (i, n, inst.goods): (grand[i]["mms"], grand[i]["mms_at"]) for i in range(n)}

    def mu(i: int, k: int, s: Bundle):
        key = (i, k, s)
        if key not in mms:
            mms[key] = oracle_mms_share(inst, i, k, s, budget)
        return mms[key]

    # GMMS: agent subsets of size >= 2 in increasing size, within budget
    subsets = [c for size in range(2, n + 1) for c in itertools.combinations(range(n), size)]
    gmms: list[tuple[Fraction, Optional[dict]]] = [(ONE, None)] * n
    spent = 0
    done = 0
    complete = True
    for c in subsets:
        union = 0
        for a in c:
            union |= own[a]
        cost = len(c) ** union.bit_count() * len(c)
        if spent + cost > gmms_budget:
            complete = False
            break
        spent += cost
        for a in c:
            share, _ = mu(a, len(c), union)
            r = _ratio(vals[a](own[a]), share)
            if r < gmms[a][0]:
                gmms[a] = (r, {"agents": list(c), "share": share})
        done += 1

    agents = []
    for i in range(n):
        v = vals[i]
        mine = own[i]
        wit: dict = {}
        others = [j for j in range(n) if j != i]

        efl_bad = [j for j in others if _efl_envies(v, mine, own[j])]
        if efl_bad:
            wit["EFL"] = {"envied_agent": efl_bad[0]}

        share = grand[i]["mxs"]
        y, l = grand[i]["mxs_at"]
        mxs_ok = v(mine) >= share
        if not mxs_ok:
            wit["MXS"] = {"partition": _part(y), "bundle": l, "share": share}

        ef1_bad = [j for j in others
                   if v(mine) < v(own[j]) and not any(v(mine) >= v(own[j] & ~(1 << g)) for g in goods_of(own[j]))]
        if ef1_bad:
            wit["EF1"] = {"envied_agent": ef1_bad[0]}

        alpha_efx, efx_arg = ONE, None
        for j in others:
            if own[j]:
                r = _ratio(v(mine), v.max_without_one(own[j]))
                if r < alpha_efx:
                    alpha_efx, efx_arg = r, j
        if efx_arg is not None:
            wit["EFX"] = {"agent": efx_arg}

        mms_val, mms_part = mu(i, n, inst.goods)
        alpha_mms = _ratio(v(mine), mms_val)
        if alpha_mms < 1:
            wit["MMS"] = {"partition": _part(mms_part)}

        pmms, pmms_arg = ONE, None
        for j in others:
            r = _ratio(v(mine), mu(i, 2, mine | own[j])[0])
            if r < pmms:
                pmms, pmms_arg = r, j
        if pmms_arg is not None:
            wit["PMMS"] = {"agent": pmms_arg}

        if complete and gmms[i][1] is not None:
            wit["GMMS"] = gmms[i][1]

        agents.append(AgentAudit(
            agent=i,
            bundle=goods_of(mine),
            value=v(mine),
            efl=not efl_bad,
            mxs=mxs_ok,
            mxs_share=share,
            ef1=not ef1_bad,
            alpha_efx=alpha_efx,
            alpha_mms=alpha_mms,
            mms_share=mms_val,
            pmms_alpha=pmms,
            gmms_alpha=gmms[i][0] if complete else None,
            proportional=v(mine) * n >= v(inst.goods),
            witnesses=wit,
        ))
    return AuditReport(n, inst.m, agents, (done, len(subsets)))


def brute_force_fair_association_exists(inst: Instance, x: Partition, budget: int = DEFAULT_BUDGET) -> bool:
    """Try every injective bundle-to-agent assignment."""
    k = len(x)
    if k > inst.n:
        return False
    count = 1
    for t in range(k):
        count *= inst.n - t
    if count > budget:
        raise InstanceTooLarge(count, budget, "association search")
    ok = [[mxs_efl_feasible(inst, a, l, x) for a in range(inst.n)] for l in range(k)]
    return any(all(ok[l][a] for l, a in enumerate(perm))
               for perm in itertools.permutations(range(inst.n), k))
