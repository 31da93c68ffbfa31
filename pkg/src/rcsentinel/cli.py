"""Command-line surface.

Subcommands: check (template robustness), subsets (maximal robust subsets),
promote (read-promotion repair), check-schedule (validate a transcript),
oracle (exhaustive small-scale robustness), bench (print a built-in fixture).
Exit codes: 0 for robust/serializable/success, 1 for a not-robust or
non-serializable verdict, 2 for any error.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import fixtures, report
from .dsl import parse_schedule, parse_workload, print_schedule, print_workload
from .errors import RcSentinelError
from .model import validate_workload
from .schedule import build_rlc_schedule, is_conflict_serializable, is_rc_allowed, robust_oracle
from .templates import is_robust_templates
from .workload_tools import (
    WRITE_BACK, AnalysisSetting, PromotionSet, apply_setting,
    maximal_robust_subsets, minimal_promotions, promote, read_positions,
)


def _add_setting_flags(parser):
    parser.add_argument("--granularity", choices=["attribute", "tuple"], default="attribute",
                        help="conflict granularity (default: attribute)")
    parser.add_argument("--updates", choices=["atomic", "split"], default="atomic",
                        help="model updates atomically or as read+write (default: atomic)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rc-sentinel",
        description="Robustness analysis of transaction templates under "
                    "multiversion read committed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide robustness of a workload")
    p.add_argument("file")
    _add_setting_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--counterexample", metavar="OUT",
                   help="write the counterexample schedule transcript here")
    p.add_argument("--timings", action="store_true", help="print elapsed time to stderr")

    p = sub.add_parser("subsets", help="list maximal robust template subsets")
    p.add_argument("file")
    _add_setting_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--timings", action="store_true")

    p = sub.add_parser("promote", help="compute read promotions that restore robustness")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--minimal", action="store_true", default=True,
                       help="search for minimum promotion sets (default)")
    group.add_argument("--all", action="store_true",
                       help="promote every R-operation instead")
    _add_setting_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--timings", action="store_true")

    p = sub.add_parser("check-schedule", help="validate a schedule transcript")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("oracle", help="exhaustively check all RC schedules of a "
                                      "transcript's transactions")
    p.add_argument("file")
    p.add_argument("--max-ops", type=int, default=16,
                   help="guard on the number of non-commit operations (default 16)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="print a built-in benchmark workload")
    p.add_argument("name", choices=sorted(fixtures.BENCH_WORKLOADS))
    return parser


def _read_file(path: str) -> str:
    with open(path, "r") as f:
        return f.read()


def _load_workload(path: str):
    workload = parse_workload(_read_file(path))
    diagnostics = validate_workload(workload)
    if diagnostics:
        raise RcSentinelError(
            "invalid workload:\n" + "\n".join(f"  {d}" for d in diagnostics))
    return workload


def _emit(out, text):
    out.write(text)


def _cmd_check(args, out):
    workload = _load_workload(args.file)
    setting = AnalysisSetting(args.granularity, args.updates)
    result = is_robust_templates(apply_setting(workload, setting))
    rc_ok = ser = None
    if not result.robust:
        rc_ok = is_rc_allowed(result.counterexample).allowed
        ser = is_conflict_serializable(result.counterexample).serializable
        if args.counterexample:
            with open(args.counterexample, "w") as f:
                f.write(print_schedule(result.counterexample))
    if args.json:
        _emit(out, report.json_dumps(report.check_report(args.file, setting, result, rc_ok, ser)))
    elif result.robust:
        _emit(out, "robust: every RC-allowed schedule of this workload is serializable\n")
    else:
        w = result.witness
        _emit(out, "not robust\n")
        _emit(out, f"  split: {w.split_template} at operation {w.split_op} "
                   f"(companion {w.companion_op}, tuple index {w.tuple_index})\n")
        _emit(out, "  occurrences: " + " -> ".join
              (t.name for t in w.chain.occurrences) + "\n")
        _emit(out, "  counterexample schedule:\n")
        for line in print_schedule(result.counterexample).splitlines():
            _emit(out, f"    {line}\n")
        _emit(out, f"  verified: rc_allowed={rc_ok} serializable={ser}\n")
    return 0 if result.robust else 1


def _cmd_subsets(args, out):
    workload = _load_workload(args.file)
    setting = AnalysisSetting(args.granularity, args.updates)
    subsets = maximal_robust_subsets(workload, setting)
    if args.json:
        _emit(out, report.json_dumps(report.subsets_report(args.file, setting, subsets)))
    else:
        _emit(out, f"{len(subsets)} maximal robust subset(s)\n")
        for s in subsets:
            _emit(out, "  {" + ", ".join(s) + "}\n")
    return 0


def _cmd_promote(args, out):
    workload = _load_workload(args.file)
    setting = AnalysisSetting(args.granularity, args.updates)
    mode = "all" if getattr(args, "all", False) else "minimal"
    if mode == "all":
        # narrowed write sets can leave promoted reads rw-conflicting each
        # other; the promote-everything fallback writes back full read sets
        selections = [PromotionSet(tuple(read_positions(workload)), policy=WRITE_BACK)]
    else:
        selections = minimal_promotions(workload, setting)
    applied = selections[0]
    promoted = promote(workload, applied)
    robust_after = is_robust_templates(apply_setting(promoted, setting)).robust
    promoted_text = print_workload(promoted)
    if args.json:
        _emit(out, report.json_dumps(report.promote_report(
            args.file, setting, mode, selections, applied, promoted_text, robust_after)))
    else:
        _emit(out, f"{len(selections)} promotion set(s) of size {len(applied.positions)}\n")
        for sel in selections:
            _emit(out, "  " + ", ".join(f"{t}[{i}]" for t, i in sel.positions) + "\n")
        _emit(out, f"applying the first; robust afterwards: {robust_after}\n")
        _emit(out, promoted_text)
    return 0


def _cmd_check_schedule(args, out):
    transactions, interleaving = parse_schedule(_read_file(args.file))
    sched = build_rlc_schedule(transactions, interleaving)
    rc = is_rc_allowed(sched)
    ser = is_conflict_serializable(sched)
    if args.json:
        _emit(out, report.json_dumps(report.check_schedule_report(args.file, rc, ser)))
    else:
        _emit(out, f"rc_allowed={rc.allowed} serializable={ser.serializable}\n")
        if not rc.allowed:
            _emit(out, f"  violation: {rc.violation.message}\n")
        if not ser.serializable:
            _emit(out, "  cycle: " + " -> ".join(ser.cycle) + "\n")
    return 0 if ser.serializable else 1


def _cmd_oracle(args, out):
    transactions, _ = parse_schedule(_read_file(args.file))
    verdict = robust_oracle(transactions, max_ops=args.max_ops)
    if args.json:
        _emit(out, report.json_dumps(report.oracle_report(args.file, args.max_ops, verdict)))
    elif verdict.robust:
        _emit(out, f"robust: all {verdict.schedules_checked} RC-allowed schedules "
                   f"are serializable\n")
    else:
        _emit(out, "not robust; first non-serializable schedule:\n")
        for line in print_schedule(verdict.counterexample).splitlines():
            _emit(out, f"  {line}\n")
    return 0 if verdict.robust else 1


def _cmd_bench(args, out):
    _emit(out, fixtures.fixture_text(args.name))
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "subsets": _cmd_subsets,
    "promote": _cmd_promote,
    "check-schedule": _cmd_check_schedule,
    "oracle": _cmd_oracle,
    "bench": _cmd_bench,
}


def run_cli(argv, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    start = time.monotonic()
    try:
        status = _COMMANDS[args.command](args, out)
    except RcSentinelError as exc:
        err.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 2
    if getattr(args, "timings", False):
        err.write(f"elapsed: {time.monotonic() - start:.3f}s\n")
    return status


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
