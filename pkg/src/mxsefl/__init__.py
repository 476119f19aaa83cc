"""Allocations of indivisible goods that are simultaneously MXS and EFL."""
from .core import (
    Bundle,
    Instance,
    Valuation,
    ValuationKind,
    best_bundle,
    bundle,
    goods_of,
    min_marginal_good,
    next_best_bundle,
    value,
    worst_bundle,
)
from .envygraph import FREE
from .solver import Allocation, SolverConfig, SolverTrace, mxs_efl_allocate

__all__ = [
    "Allocation",
    "Bundle",
    "FREE",
    "Instance",
    "SolverConfig",
    "SolverTrace",
    "Valuation",
    "ValuationKind",
    "best_bundle",
    "bundle",
    "goods_of",
    "min_marginal_good",
    "mxs_efl_allocate",
    "next_best_bundle",
    "value",
    "worst_bundle",
]
