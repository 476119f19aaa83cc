"""Command line interface.

Exit codes (stable):

    0  success (audit: every agent MXS and EFL; check-valuation: every agent
       restricted-MMS-feasible)
    1  malformed input, unreadable file or bad arguments
    2  enumeration budget exceeded
    3  solver invariant violation
    4  property does not hold (audit verdict false, a valuation that is not
       restricted-MMS-feasible, or a failing fuzz run)
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import io
from .errors import (InstanceTooLarge, InvariantViolation, IterationCapExceeded, MxsEflError,
                     NoFairAssociation)
from .fairness import DEFAULT_BUDGET, good_cancelable_check, restricted_mms_feasible_check
from .fuzz import campaign, case_spec, run_case
from .instances import KIND_ALIASES, GeneratorSpec, generate
from .oracle import audit_allocation
from .solver import SolverConfig, mxs_efl_allocate

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BUDGET = 2
EXIT_INVARIANT = 3
EXIT_PROPERTY = 4


class _Parser(argparse.ArgumentParser):
    # argparse's own usage errors would exit 2, which is reserved for budgets
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        io.write_text(path, text)


def cmd_solve(args) -> int:
    inst = io.read_instance(args.instance)
    cfg = SolverConfig(budget=args.budget, debug_assertions=args.debug_assert)
    try:
        alloc, trace = mxs_efl_allocate(inst, cfg)
    except (InvariantViolation, IterationCapExceeded, NoFairAssociation) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    if args.trace:
        io.write_text(args.trace, trace.to_jsonl())
    _emit(io.dumps(io.allocation_to_json(alloc)), args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    inst = io.read_instance(args.instance)
    alloc = io.read_allocation(args.allocation, inst)
    report = audit_allocation(inst, alloc, args.budget, args.gmms_budget)
    sys.stdout.write(io.dumps(report.to_json()))
    return EXIT_OK if report.verdict else EXIT_PROPERTY


def cmd_gen(args) -> int:
    lo = 1 if KIND_ALIASES[args.kind].value == "multiplicative" else 0
    spec = GeneratorSpec(n=args.n, m=args.m, kind=args.kind, lo=lo, hi=args.max, seed=args.seed)
    _emit(io.dumps(io.instance_to_json(generate(spec))), args.out)
    return EXIT_OK


def cmd_check_valuation(args) -> int:
    inst = io.read_instance(args.instance)
    status = EXIT_OK
    for i, v in enumerate(inst.valuations):
        rm = restricted_mms_feasible_check(v, args.kmax, args.mbudget, args.budget)
        gc = good_cancelable_check(v, args.mbudget, args.budget)
        print(f"agent {i} ({v.kind.value})")
        print(f"  restricted-MMS-feasible: {'yes' if rm.holds else 'no'}")
        if not rm.holds:
            print(f"  witness: {json.dumps(rm.counterexample)}")
            status = EXIT_PROPERTY
        print(f"  good-cancelable: {'yes' if gc.holds else 'no'}")
        if not gc.holds:
            print(f"  counterexample: {json.dumps(gc.counterexample)}")
    return status


def cmd_fuzz(args) -> int:
    kinds = args.kind or ["additive"]
    if args.repro is not None:
        results = [run_case(case_spec(args.repro, args.nmax, args.mmax, kinds, args.max))]
    else:
        results = campaign(args.runs, args.nmax, args.mmax, args.seed, kinds, args.max)
    count = 0
    for res in results:
        count += 1
        if not res.ok:
            print(f"FAIL run seed {res.run_seed}: {res.reason()}", file=sys.stderr)
            print(f"repro: mxsefl fuzz --repro {res.run_seed} --nmax {args.nmax} --mmax {args.mmax} "
                  f"--max {args.max} " + " ".join(f"--kind {k}" for k in kinds), file=sys.stderr)
            return EXIT_PROPERTY
    print(f"{count} runs ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mxsefl", description="MXS+EFL allocations of indivisible goods.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="compute an MXS+EFL allocation")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", help="allocation file (default: stdout)")
    p.add_argument("--trace", help="write the event trace as JSON lines")
    p.add_argument("--debug-assert", action="store_true", help="check invariants while solving")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="partition enumeration budget")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("audit", help="check every fairness notion of an allocation")
    p.add_argument("--instance", required=True)
    p.add_argument("--allocation", required=True)
    p.add_argument("--gmms-budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--kind", required=True, choices=["additive", "budget", "unit", "mult", "table"])
    p.add_argument("--max", type=int, required=True, help="largest drawn value")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check-valuation", help="test valuation class conditions")
    p.add_argument("--instance", required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--mbudget", type=int, required=True, help="largest bundle size searched")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_check_valuation)

    p = sub.add_parser("fuzz", help="generate, solve and audit random instances")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--nmax", type=int, default=3)
    p.add_argument("--mmax", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max", type=int, default=8)
    p.add_argument("--kind", action="append", choices=["additive", "budget", "unit", "mult"])
    p.add_argument("--repro", type=int, help="rerun the single run with this run seed")
    p.set_defaults(func=cmd_fuzz)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        return args.func(args)
    except InstanceTooLarge as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (MxsEflError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
