"""Generate, solve and audit random instances until something breaks.

Each run is a pure function of its own 64-bit seed, and the run seeds are
drawn from ``random.Random(master_seed)``. A reported run seed therefore
reproduces its failure on its own, without replaying the campaign.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

from .core import Instance
from .errors import MxsEflError
from .fairness import DEFAULT_BUDGET, share_cache
from .instances import GeneratorSpec, generate
from .oracle import AuditReport, audit_allocation
from .solver import Allocation, SolverConfig, SolverTrace, mxs_efl_allocate


@dataclass
class RunResult:
    run_seed: int
    instance: Instance
    allocation: Optional[Allocation]
    trace: Optional[SolverTrace]
    report: Optional[AuditReport]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and (self.report is None or self.report.verdict)

    def reason(self) -> str:
        if self.error is not None:
            return self.error
        bad = [a.agent for a in self.report.agents if not (a.efl and a.mxs)]
        return f"audit rejected agents {bad}"


def run_seeds(master_seed: int, runs: int) -> list[int]:
    rng = random.Random(master_seed)
    return [rng.getrandbits(64) for _ in range(runs)]


def case_spec(run_seed: int, nmax: int, mmax: int, kinds: Sequence[str] = ("additive",),
              hi: int = 8, nmin: int = 2) -> GeneratorSpec:
    rng = random.Random(run_seed)
    n = rng.randint(min(nmin, nmax), nmax)
    m = rng.randint(0, mmax)
    kind = kinds[rng.randrange(len(kinds))]
    lo = 1 if kind in ("mult", "multiplicative") else 0
    return GeneratorSpec(n=n, m=m, kind=kind, lo=lo, hi=max(hi, lo), seed=run_seed)


def run_case(spec: GeneratorSpec, debug: bool = True, budget: int = DEFAULT_BUDGET,
             audit: bool = True) -> RunResult:
    inst = generate(spec)
    cache = share_cache(inst, budget)
    try:
        alloc, trace = mxs_efl_allocate(inst, SolverConfig(budget=budget, debug_assertions=debug), cache)
    except MxsEflError as exc:
        return RunResult(spec.seed, inst, None, None, None, f"{type(exc).__name__}: {exc}")
    report = audit_allocation(inst, alloc, budget, gmms_budget=budget) if audit else None
    return RunResult(spec.seed, inst, alloc, trace, report)


def campaign(runs: int, nmax: int, mmax: int, seed: int, kinds: Sequence[str] = ("additive",),
             hi: int = 8, nmin: int = 2, debug: bool = True,
             check: Callable[[RunResult], Optional[str]] | None = None) -> Iterator[RunResult]:
    """Yield one result per run; ``check`` may add a failure reason of its own."""
    for s in run_seeds(seed, runs):
        res = run_case(case_spec(s, nmax, mmax, kinds, hi, nmin), debug=debug)
        if res.ok and check is not None:
            res.error = check(res)
        yield res
