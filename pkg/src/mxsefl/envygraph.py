"""Generalized envy graph over a partition and an association function.

A partition is a tuple of bundle bitmasks. An association function is a tuple
with one entry per bundle holding the associated agent (0-based) or ``FREE``.
Vertex ``l`` has an edge to ``z`` when bundle ``l`` is associated with an agent
who strictly prefers bundle ``z`` to it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .core import Bundle, Instance, full_bundle
from .errors import (
    CyclicGraph,
    DimensionMismatch,
    FreeInteriorVertex,
    InvalidPartition,
    IterationCapExceeded,
)

FREE = None

Partition = tuple[Bundle, ...]
Assoc = tuple[Optional[int], ...]
Chain = tuple[int, ...]


def check_partition(x: Sequence[Bundle], m: int) -> None:
    seen = 0
    for b in x:
        if b < 0 or b >> m:
            raise InvalidPartition(f"bundle {b:#x} is not a subset of [0, {m})")
        if b & seen:
            raise InvalidPartition("bundles overlap")
        seen |= b
    if seen != full_bundle(m):
        raise InvalidPartition("bundles do not cover all goods")


def check_assoc(f: Sequence[Optional[int]], k: int, n: int) -> None:
    if len(f) != k:
        raise DimensionMismatch(f"association has {len(f)} entries for {k} bundles")
    used = set()
    for agent in f:
        if agent is FREE:
            continue
        if not 0 <= agent < n:
            raise DimensionMismatch(f"agent {agent} outside [0, {n})")
        if agent in used:
            raise DimensionMismatch(f"agent {agent} associated with two bundles")
        used.add(agent)


def support(f: Assoc) -> frozenset[int]:
    """Bundle indices with an associated agent."""
    return frozenset(l for l, a in enumerate(f) if a is not FREE)


def image(f: Assoc) -> frozenset[int]:
    """Agents associated with some bundle."""
    return frozenset(a for a in f if a is not FREE)


@dataclass(frozen=True)
class EnvyGraph:
    k: int
    succ: tuple[tuple[int, ...], ...]
    pred: tuple[tuple[int, ...], ...]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(l, z) for l in range(self.k) for z in self.succ[l]]

    def dump(self) -> str:
        return "".join(f"{l} -> {z}\n" for l, z in self.edges)

    def has_cycle(self) -> bool:
        return find_cycle(self) is not None


def build_envy_graph(inst: Instance, x: Partition, f: Assoc) -> EnvyGraph:
    k = len(x)
    if len(f) != k:
        raise DimensionMismatch(f"association has {len(f)} entries for {k} bundles")
    tables = inst.tables
    succ: list[list[int]] = [[] for _ in range(k)]
    pred: list[list[int]] = [[] for _ in range(k)]
    for l in range(k):
        agent = f[l]
        if agent is FREE:
            continue
        val = tables[agent].val
        own = val[x[l]]
        for z in range(k):
            if val[x[z]] > own:
                succ[l].append(z)
                pred[z].append(l)
    return EnvyGraph(k, tuple(map(tuple, succ)), tuple(map(tuple, pred)))


def is_source(g: EnvyGraph, l: int) -> bool:
    return not g.pred[l]


def find_cycle(g: EnvyGraph) -> list[int] | None:
    """First directed cycle found by DFS from the lowest start vertex.

    The search from start ``s`` only visits vertices ``>= s`` so every cycle is
    reported from its smallest vertex. Returns ``[s, a, ..., z]`` with edges
    ``s -> a -> ... -> z -> s``.
    """
    for s in range(g.k):
        path = [s]
        on_path = {s}
        stack = [iter(g.succ[s])]
        while stack:
            for z in stack[-1]:
                if z == s:
                    return path
                if z > s and z not in on_path:
                    path.append(z)
                    on_path.add(z)
                    stack.append(iter(g.succ[z]))
                    break
            else:
                stack.pop()
                on_path.discard(path.pop())
    return None


def rotate_cycle(f: Assoc, cycle: Sequence[int]) -> Assoc:
    """Give each bundle on the cycle to the agent of its predecessor."""
    out = list(f)
    for pos, l in enumerate(cycle):
        nxt = cycle[(pos + 1) % len(cycle)]
        out[nxt] = f[l]
    return tuple(out)


def eliminate_cycles(inst: Instance, x: Partition, f: Assoc, cap: int | None = None,
                     on_rotate=None) -> Assoc:
    """Rotate envy cycles, one at a time, until the envy graph is acyclic.

    Every rotation strictly raises the value of each agent on the cycle and
    leaves everyone else untouched, so the loop is finite; ``cap`` turns that
    argument into a tripwire. ``on_rotate(cycle, f)`` is called after each
    rotation.
    """
    if cap is None:
        cap = inst.n * len(x) * (1 << inst.m) + 1
    for _ in range(cap):
        cycle = find_cycle(build_envy_graph(inst, x, f))
        if cycle is None:
            return f
        f = rotate_cycle(f, cycle)
        if on_rotate is not None:
            on_rotate(cycle, f)
    raise IterationCapExceeded(f"eliminate_cycles exceeded {cap} rotations")


def _backward_paths(g: EnvyGraph, t: int) -> Iterator[Chain]:
    # every simple path ending at t, written first-vertex-first
    path = [t]
    on_path = {t}

    def walk():
        yield tuple(reversed(path))
        for l in g.pred[path[-1]]:
            if l not in on_path:
                path.append(l)
                on_path.add(l)
                yield from walk()
                on_path.discard(path.pop())

    return walk()


def subchains_to(inst: Instance, x: Partition, f: Assoc, t: int) -> list[Chain]:
    """All simple paths ``(q_s, ..., q_0)`` of the envy graph with ``q_0 == t``."""
    g = build_envy_graph(inst, x, f)
    return sorted(_backward_paths(g, t), key=lambda c: (len(c), c))


def chains_to(inst: Instance, x: Partition, f: Assoc, t: int) -> list[Chain]:
    """All subchains to ``t`` whose first bundle is a source.

    Raises :class:`CyclicGraph` when there is none, which requires a cycle.
    """
    g = build_envy_graph(inst, x, f)
    out = sorted((c for c in _backward_paths(g, t) if is_source(g, c[0])), key=lambda c: (len(c), c))
    if not out:
        raise CyclicGraph(f"no chain reaches bundle {t}")
    return out


def any_chain_to(inst: Instance, x: Partition, f: Assoc, t: int, graph: EnvyGraph | None = None) -> Chain:
    """The shortest chain to ``t``, ties broken by the smallest index sequence."""
    g = graph if graph is not None else build_envy_graph(inst, x, f)
    level: list[Chain] = [(t,)]
    while level:
        done = [c for c in level if is_source(g, c[0])]
        if done:
            return min(done)
        nxt = []
        for c in level:
            for l in g.pred[c[0]]:
                if l not in c:
                    nxt.append((l,) + c)
        level = nxt
    raise CyclicGraph(f"no chain reaches bundle {t}")


def shift_subchain(f: Assoc, c: Sequence[int]) -> Assoc:
    """Move every agent on ``c = (q_s, ..., q_0)`` one step forward.

    The bundle ``q_l`` receives the agent of ``q_{l+1}``; ``q_s`` becomes free
    and the agent formerly at ``q_0`` (if any) is freed.
    """
    out = list(f)
    for l in c[:-1]:
        if f[l] is FREE:
            raise FreeInteriorVertex(f"bundle {l} on the subchain has no agent")
    for a, b in zip(c, c[1:]):
        out[b] = f[a]
    out[c[0]] = FREE
    return tuple(out)
