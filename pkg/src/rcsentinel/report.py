"""Report assembly and deterministic JSON rendering.

Field order is fixed by construction and documented in docs/report-schema.md;
additions are append-only.  Reports never embed wall-clock data, so identical
inputs and flags produce identical bytes.
"""

from __future__ import annotations

import json

from .dsl import print_schedule
from .model import potentially_conflicting
from .schedule import OP0, Schedule
from .templates import TemplateRobustnessResult

REPORT_VERSION = 1


def json_dumps(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def _setting_dict(setting) -> dict:
    return {"granularity": setting.granularity, "updates": setting.updates}


def _witness_dict(result: TemplateRobustnessResult) -> dict:
    witness = result.witness
    chain = witness.chain
    links = []
    for link in chain.links:
        out_tmpl = chain.occurrences[link.from_occurrence]
        in_tmpl = chain.occurrences[link.to_occurrence]
        kinds = potentially_conflicting(out_tmpl.ops[link.out_op], in_tmpl.ops[link.in_op])
        links.append({
            "from_occurrence": link.from_occurrence,
            "from_template": out_tmpl.name,
            "out_op_index": link.out_op,
            "to_occurrence": link.to_occurrence,
            "to_template": in_tmpl.name,
            "in_op_index": link.in_op,
            "conflict_kinds": sorted(kinds),
        })
    return {
        "split_template": witness.split_template,
        "split_op_index": witness.split_op,
        "companion_op_index": witness.companion_op,
        "tuple_index": witness.tuple_index,
        "occurrences": [t.name for t in chain.occurrences],
        "chain": links,
    }


def _counterexample_dict(result: TemplateRobustnessResult) -> dict:
    sched = result.counterexample
    transactions = []
    for tx, mu, tmpl in zip(result.transactions, result.assignments,
                            result.witness.chain.occurrences):
        assignment = {v.name: str(t) for v, t in sorted(mu.items(), key=lambda kv: kv[0].name)}
        transactions.append({"id": tx.id, "template": tmpl.name, "assignment": assignment})
    return {
        "transactions": transactions,
        "interleaving": [str(ref) for ref in sched.order if ref != OP0],
        "reads": _read_sources(sched),
        "schedule": print_schedule(sched),
    }


def _read_sources(sched: Schedule) -> list[dict]:
    out = []
    for ref in sched.order:
        if ref == OP0 or not sched.op(ref).is_read:
            continue
        source = sched.version_fn[ref]
        out.append({"op": str(ref), "source": "op0" if source == OP0 else str(source)})
    return out


def check_report(path: str, setting, result: TemplateRobustnessResult,
                 rc_allowed=None, serializable=None) -> dict:
    report = {
        "report_version": REPORT_VERSION,
        "command": "check",
        "workload": path,
        "setting": _setting_dict(setting),
        "verdict": "robust" if result.robust else "not-robust",
        "witness": None if result.robust else _witness_dict(result),
        "counterexample": None if result.robust else _counterexample_dict(result),
        "verification": None if result.robust else {
            "rc_allowed": rc_allowed,
            "serializable": serializable,
        },
    }
    return report


def check_schedule_report(path: str, rc_verdict, ser_verdict) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "command": "check-schedule",
        "schedule": path,
        "rc_allowed": rc_verdict.allowed,
        "violation": None if rc_verdict.allowed else {
            "kind": rc_verdict.violation.kind,
            "message": rc_verdict.violation.message,
        },
        "serializable": ser_verdict.serializable,
        "cycle": None if ser_verdict.serializable else list(ser_verdict.cycle),
    }


def subsets_report(path: str, setting, subsets) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "command": "subsets",
        "workload": path,
        "setting": _setting_dict(setting),
        "maximal_robust_subsets": [list(s) for s in subsets],
    }


def promote_report(path: str, setting, mode: str, selections, applied,
                   promoted_text: str, robust_after: bool) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "command": "promote",
        "workload": path,
        "setting": _setting_dict(setting),
        "mode": mode,
        "policy": applied.policy,
        "minimum_cardinality": len(applied.positions) if mode == "minimal" else None,
        "promotion_sets": [[list(p) for p in sel.positions] for sel in selections],
        "applied": [list(p) for p in applied.positions],
        "robust_after": robust_after,
        "promoted_workload": promoted_text,
    }


def oracle_report(path: str, max_ops: int, verdict) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "command": "oracle",
        "input": path,
        "max_ops": max_ops,
        "robust": verdict.robust,
        "schedules_checked": verdict.schedules_checked,
        "counterexample": None if verdict.robust else print_schedule(verdict.counterexample),
    }
