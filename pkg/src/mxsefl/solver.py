"""Constructive MXS+EFL allocation: rebalancing phases and the outer loop.

The algorithm grows a partition one empty bundle at a time. After each growth
step :func:`rebalance` moves goods between bundles and reassigns agents until
some full association makes every bundle both MXS- and EFL-feasible for its
agent. Every "arbitrary" choice is resolved by the lowest index (shortest,
then lexicographically smallest, for chains) so runs are reproducible.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator, Optional

from .core import Bundle, Instance, ValuationKind, goods_of, next_best_bundle
from .envygraph import (
    FREE,
    Assoc,
    Partition,
    any_chain_to,
    check_assoc,
    check_partition,
    eliminate_cycles,
    image,
    shift_subchain,
)
from .errors import (
    EmptyBundle,
    InvariantViolation,
    IterationCapExceeded,
    NoFairAssociation,
    NotRestrictedMmsFeasible,
)
from .fairness import (
    DEFAULT_BUDGET,
    ShareCache,
    efx_best,
    efl_feasible,
    is_mxs_efl,
    phase1_invariant_check,
    phase2_invariant_a_check,
    restricted_mms_feasible_check,
    share_cache,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Allocation:
    partition: Partition
    assoc: Assoc

    def bundle_of(self, agent: int) -> Bundle:
        return self.partition[self.assoc.index(agent)]


@dataclass(frozen=True)
class SolverConfig:
    budget: int = DEFAULT_BUDGET
    phase1_cap: int = 10 ** 7
    phase2_cap: int = 10 ** 7
    debug_assertions: bool = False
    check_restricted_mms: bool = False

    def __post_init__(self):
        for name in ("budget", "phase1_cap", "phase2_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolverTrace:
    """Ordered event log of one run.

    Every event that changes the association carries the full resulting
    association under ``"assoc"``; ``"move"`` events carry the good and the
    source/target bundle indices; ``"extend"`` appends an empty bundle. This
    is enough to replay a run (see :func:`replay`).
    """

    events: list[dict[str, Any]] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def emit(self, event: str, **payload) -> None:
        self.events.append({"event": event, **payload})

    def bump(self, name: str) -> None:
        self.counters[name] = self.counters.get(name, 0) + 1

    def of(self, event: str) -> list[dict[str, Any]]:
        return [e for e in self.events if e["event"] == event]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> SolverTrace:
        return cls([json.loads(line) for line in text.splitlines() if line.strip()])


def _assoc_json(f: Assoc) -> list[Optional[int]]:
    return list(f)


def _part_json(x: Partition) -> list[list[int]]:
    return [goods_of(b) for b in x]


def replay_states(trace: SolverTrace) -> Iterator[tuple[dict[str, Any], Partition, Assoc]]:
    """Yield every event with the partition and association right after it."""
    x: list[Bundle] = []
    f: list[Optional[int]] = []
    for e in trace.events:
        kind = e["event"]
        if kind == "start":
            x = [sum(1 << g for g in b) for b in e["partition"]]
        elif kind == "extend":
            x.append(0)
            f.append(FREE)
        elif kind == "move":
            bit = 1 << e["good"]
            x[e["from"]] &= ~bit
            x[e["to"]] |= bit
        if "assoc" in e:
            f = list(e["assoc"])
        yield e, tuple(x), tuple(f)


def replay(inst: Instance, trace: SolverTrace) -> Allocation:
    """Re-apply the events of ``trace`` from the initial state."""
    x: Partition = ()
    f: Assoc = ()
    for _, x, f in replay_states(trace):
        pass
    check_partition(x, inst.m)
    return Allocation(x, f)


# ---------------------------------------------------------------- subroutines

def find_mins(inst: Instance, p: Bundle, i: int, j: int) -> tuple[int, int]:
    """Goods of smallest marginal value in ``p`` for ``i`` and ``j``.

    A good that is minimal for both agents is returned for both.
    """
    if not p:
        raise EmptyBundle("find_mins of the empty bundle")
    ti, tj = inst.tables[i], inst.tables[j]
    members = goods_of(p)
    min_i = [g for g in members if ti.val[p ^ (1 << g)] == ti.drop[p]]
    min_j = [g for g in members if tj.val[p ^ (1 << g)] == tj.drop[p]]
    common = [g for g in min_i if g in min_j]
    if common:
        return common[0], common[0]
    return min_i[0], min_j[0]


def _feasibility_lists(inst: Instance, x: Partition, cache: ShareCache) -> list[list[int]]:
    k = len(x)
    out = []
    for l in range(k):
        row = []
        for a in range(inst.n):
            if inst.tables[a].val[x[l]] >= cache.mxs_scaled(a, k) and efl_feasible(inst, a, l, x):
                row.append(a)
        out.append(row)
    return out


def _match(adj: list[list[int]], n: int) -> Optional[Assoc]:
    # greedy pass with the lowest free agent, then augmenting paths for the
    # bundles left over; both go in bundle index order, agents lowest first
    owner: list[Optional[int]] = [None] * n
    matched = [False] * len(adj)
    for l, row in enumerate(adj):
        a = next((a for a in row if owner[a] is None), None)
        if a is not None:
            owner[a] = l
            matched[l] = True

    def augment(l: int, seen: set[int]) -> bool:
        for a in adj[l]:
            if a in seen:
                continue
            seen.add(a)
            if owner[a] is None or augment(owner[a], seen):
                owner[a] = l
                return True
        return False

    for l in range(len(adj)):
        if not matched[l] and not augment(l, set()):
            return None
    f: list[Optional[int]] = [FREE] * len(adj)
    for a, l in enumerate(owner):
        if l is not None:
            f[l] = a
    return tuple(f)


def fair_association_or_none(inst: Instance, x: Partition, cache: ShareCache | None = None) -> Optional[Assoc]:
    if len(x) > inst.n:
        return None
    cache = cache or share_cache(inst)
    return _match(_feasibility_lists(inst, x, cache), inst.n)


def has_fair_association(inst: Instance, x: Partition, cache: ShareCache | None = None) -> bool:
    """Whether some full association makes every bundle MXS+EFL-feasible for its agent."""
    return fair_association_or_none(inst, x, cache) is not None


def fair_association(inst: Instance, x: Partition, cache: ShareCache | None = None) -> Assoc:
    f = fair_association_or_none(inst, x, cache)
    if f is None:
        raise NoFairAssociation(f"partition {_part_json(x)} has no full MXS+EFL association")
    return f


# ---------------------------------------------------------------- rebalance

def _move(x: Partition, g: int, src: int, dst: int) -> Partition:
    bit = 1 << g
    out = list(x)
    out[src] &= ~bit
    out[dst] |= bit
    return tuple(out)


def _set(f: Assoc, l: int, agent: Optional[int]) -> Assoc:
    out = list(f)
    out[l] = agent
    return tuple(out)


class _Run:
    """State shared by the phases of one solver run."""

    def __init__(self, inst: Instance, cfg: SolverConfig, cache: ShareCache, trace: SolverTrace):
        self.inst = inst
        self.cfg = cfg
        self.cache = cache
        self.trace = trace
        self._fair: dict[Partition, Optional[Assoc]] = {}

    def fair(self, x: Partition) -> Optional[Assoc]:
        if x not in self._fair:
            self._fair[x] = fair_association_or_none(self.inst, x, self.cache)
            self.trace.emit("matching", partition=_part_json(x), found=self._fair[x] is not None)
        return self._fair[x]

    def eliminate(self, x: Partition, f: Assoc, where: str) -> Assoc:
        cycles = []
        f = eliminate_cycles(self.inst, x, f, on_rotate=lambda c, _f: cycles.append(list(c)))
        self.trace.emit("eliminate_cycles", where=where, rotations=cycles, assoc=_assoc_json(f))
        self.trace.bump("rotations")
        return f

    def fail(self, message: str) -> InvariantViolation:
        return InvariantViolation(message, self.trace)


def rebalance(inst: Instance, x: Partition, f: Assoc, cfg: SolverConfig | None = None,
              cache: ShareCache | None = None, trace: SolverTrace | None = None
              ) -> tuple[Partition, Assoc, SolverTrace]:
    """Restore a full MXS+EFL association after an empty bundle was appended.

    Expects ``f`` to be MXS+EFL for ``x``, to associate every bundle but the
    last, and an acyclic envy graph. Returns the new partition, a full MXS+EFL
    association for it, and the trace.
    """
    cfg = cfg or SolverConfig()
    cache = cache or share_cache(inst, cfg.budget)
    trace = trace if trace is not None else SolverTrace()
    run = _Run(inst, cfg, cache, trace)
    x, f = tuple(x), tuple(f)
    check_assoc(f, len(x), inst.n)
    return (*_rebalance(run, x, f), trace)


def _rebalance(run: _Run, x: Partition, f: Assoc) -> tuple[Partition, Assoc]:
    inst, cfg, trace = run.inst, run.cfg, run.trace
    tables = inst.tables
    k = len(x)
    last = k - 1

    # Phase 1
    for _ in range(cfg.phase1_cap):
        trace.bump("phase1_iterations")
        trace.emit("phase1_head")
        if cfg.debug_assertions:
            res = phase1_invariant_check(inst, x, f, run.cache)
            if not res.holds:
                raise run.fail(f"phase 1 invariant violated: {res.counterexample}")
        fa = run.fair(x)
        if fa is not None:
            trace.emit("return", phase=1, partition=_part_json(x), assoc=_assoc_json(fa))
            return x, fa
        taken = image(f)
        i = next(a for a in range(inst.n) if a not in taken)
        p = efx_best(inst, i, x)[0]
        j = f[p]
        if j is FREE:
            raise run.fail(f"EFX-best bundle {p} of free agent {i} is unassociated")
        if p not in efx_best(inst, j, x):
            f = _set(f, p, i)
            trace.emit("reassign", bundle=p, agent=i, assoc=_assoc_json(f))
            continue
        xi, xj = find_mins(inst, x[p], i, j)
        c = any_chain_to(inst, x, f, last)
        q = c[0]
        if q == p:
            raise run.fail(f"chain to the new bundle starts at the contested bundle {p}")
        for u, g in ((i, xi), (j, xj)):
            val = tables[u].val
            bit = 1 << g
            if val[x[q] | bit] <= val[x[p] & ~bit]:
                x = _move(x, g, p, q)
                trace.emit("move", phase=1, good=g, **{"from": p, "to": q})
                f = _set(f, p, u)
                trace.emit("reassign", bundle=p, agent=u, assoc=_assoc_json(f))
                f = run.eliminate(x, f, "phase1")
                break
        else:
            break
    else:
        raise IterationCapExceeded(f"phase 1 exceeded {cfg.phase1_cap} iterations")

    f = shift_subchain(f, c)
    trace.emit("shift", chain=list(c), assoc=_assoc_json(f))
    f = _set(f, p, FREE)
    trace.emit("free", bundle=p, assoc=_assoc_json(f))
    e = x[p] & ~(1 << xj)
    trace.emit("phase2_enter", i=i, j=j, p=p, q=q, E=goods_of(e))

    # Phase 2
    val_i, val_j = tables[i].val, tables[j].val
    prev = None
    for it in range(cfg.phase2_cap):
        trace.bump("phase2_iterations")
        f = run.eliminate(x, f, "phase2")
        c = any_chain_to(inst, x, f, q)
        r = c[0]
        if r == p:
            raise run.fail(f"chain to bundle {q} starts at the contested bundle {p}")
        xi, xj = find_mins(inst, x[p], i, j)
        x1 = _move(x, xj, p, r)
        fa = run.fair(x1)
        if fa is not None:
            trace.emit("move", phase=2, good=xj, **{"from": p, "to": r})
            trace.emit("return", phase=2, partition=_part_json(x1), assoc=_assoc_json(fa))
            return x1, fa
        x2 = _move(x, xi, p, r)
        fa = run.fair(x2)
        if fa is not None:
            trace.emit("move", phase=2, good=xi, **{"from": p, "to": r})
            trace.emit("return", phase=2, partition=_part_json(x2), assoc=_assoc_json(fa))
            return x2, fa
        _, e = next_best_bundle(inst, j, [e, x1[p], x1[r]])
        src = p
        if val_j[x1[r]] > val_j[x1[p]]:
            f = shift_subchain(f, c)
            trace.emit("shift", chain=list(c), assoc=_assoc_json(f))
            q, p = p, r
        elif val_i[x1[r]] >= val_i[x[q]]:
            f = shift_subchain(f, c)
            trace.emit("shift", chain=list(c), assoc=_assoc_json(f))
            q = r
        x = x1
        trace.emit("move", phase=2, good=xj, **{"from": src, "to": r})
        state = (val_j[e], p, x[p].bit_count())
        trace.emit("phase2_iter", iteration=it, p=p, q=q, r=r, E=goods_of(e),
                   vjE=str(Fraction(val_j[e], tables[j].scale)), size_p=state[2])
        if cfg.debug_assertions:
            _phase2_asserts(run, x, e, j, p, state, prev)
        prev = state
    raise IterationCapExceeded(f"phase 2 exceeded {cfg.phase2_cap} iterations")


def _phase2_asserts(run: _Run, x: Partition, e: Bundle, j: int, p: int,
                    state: tuple[int, int, int], prev: Optional[tuple[int, int, int]]) -> None:
    res = phase2_invariant_a_check(run.inst, x, e, j, p, run.cfg.budget)
    if not res.holds:
        raise run.fail(f"phase 2 invariant A violated: {res.counterexample}")
    if prev is None:
        return
    # potential: v_j(E) never drops; when it stays, p stays and X_p shrinks
    if state[0] < prev[0]:
        raise run.fail("v_j(E) decreased in phase 2")
    if state[0] == prev[0] and (state[1] != prev[1] or state[2] >= prev[2]):
        raise run.fail("v_j(E) unchanged but p moved or X_p did not shrink")


# ---------------------------------------------------------------- outer loop

def mxs_efl_allocate(inst: Instance, cfg: SolverConfig | None = None,
                     cache: ShareCache | None = None) -> tuple[Allocation, SolverTrace]:
    """Allocate all goods to the ``n`` agents so that every agent's bundle is MXS+EFL-feasible."""
    cfg = cfg or SolverConfig()
    if cfg.check_restricted_mms:
        for a, v in enumerate(inst.valuations):
            if v.kind is ValuationKind.TABLE:
                res = restricted_mms_feasible_check(v, inst.n, inst.m, cfg.budget)
                if not res.holds:
                    raise NotRestrictedMmsFeasible(f"agent {a}: {res.counterexample}")
    cache = cache or share_cache(inst, cfg.budget)
    trace = SolverTrace()
    run = _Run(inst, cfg, cache, trace)
    x: Partition = (inst.goods,)
    f: Assoc = (0,)
    trace.emit("start", partition=_part_json(x), assoc=_assoc_json(f))
    for k in range(2, inst.n + 1):
        f = run.eliminate(x, f, "outer")
        x = x + (0,)
        f = f + (FREE,)
        trace.emit("extend", k=k, assoc=_assoc_json(f))
        x, f = _rebalance(run, x, f)
        if cfg.debug_assertions and not is_mxs_efl(inst, x, f, cache):
            raise run.fail(f"rebalance returned a non MXS+EFL association for k={k}")
    trace.emit("done", partition=_part_json(x), assoc=_assoc_json(f))
    check_partition(x, inst.m)
    log.debug("solved n=%d m=%d with counters %s", inst.n, inst.m, trace.counters)
    return Allocation(x, f), trace
