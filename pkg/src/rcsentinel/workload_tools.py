"""Analysis settings, maximal robust subsets and read-promotion repairs.

Three settings mirror the modelling choices the analyzer supports:
reads-and-writes-only (updates split into read+write, whole-tuple conflicts),
atomic updates at tuple granularity, and attribute-level conflicts.  Subset
search walks the template lattice top-down, pruning below robust sets;
promotion rewrites selected R-operations into updates that write back part
of what they read, and the minimal-promotion search looks for the smallest
selection that makes the workload robust.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from .errors import GuardExceeded, PromotionError
from .model import (
    R, Operation, Template, U, Workload, coarsen_to_tuple_level, split_updates,
)
from .templates import is_robust_templates

ATTRIBUTE = "attribute"
TUPLE = "tuple"
ATOMIC = "atomic"
SPLIT = "split"


@dataclass(frozen=True)
class AnalysisSetting:
    granularity: str = ATTRIBUTE  # attribute | tuple
    updates: str = ATOMIC  # atomic | split


# reads and writes only, whole-tuple conflicts
ONLY_R_AND_W = AnalysisSetting(TUPLE, SPLIT)
# atomic updates, whole-tuple conflicts
ATOMIC_UPDATES = AnalysisSetting(TUPLE, ATOMIC)
# attribute-level conflicts with atomic updates (the identity setting)
ATTRIBUTE_CONFLICTS = AnalysisSetting(ATTRIBUTE, ATOMIC)


def apply_setting(workload: Workload, setting: AnalysisSetting) -> Workload:
    """Split updates first (if requested), then coarsen to tuple granularity."""
    out = workload
    if setting.updates == SPLIT:
        out = split_updates(out)
    if setting.granularity == TUPLE:
        out = coarsen_to_tuple_level(out)
    return out


def _worker_count() -> int:
    raw = os.environ.get("RC_SENTINEL_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _check_many(workloads):
    """Robustness verdicts for several workloads, optionally on a thread pool."""
    workers = _worker_count()
    if workers == 1 or len(workloads) <= 1:
        return [is_robust_templates(w).robust for w in workloads]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda w: is_robust_templates(w).robust, workloads))


def maximal_robust_subsets(workload: Workload, setting: AnalysisSetting,
                           max_templates: int = 20) -> list[tuple[str, ...]]:
    """The antichain of inclusion-maximal robust template subsets.

    Walks cardinalities top-down; subsets of an already-found robust set are
    robust and not maximal, so they are skipped, and known non-robust subsets
    rule out their supersets via the verdict cache.
    """
    names = [t.name for t in workload.templates]
    if len(names) > max_templates:
        raise GuardExceeded(
            f"{len(names)} templates exceed the subset-search guard of {max_templates}")
    maximal: list[tuple[str, ...]] = []
    non_robust: list[frozenset] = []
    for size in range(len(names), 0, -1):
        level = []
        for combo in itertools.combinations(names, size):
            cset = frozenset(combo)
            if any(cset <= frozenset(m) for m in maximal):
                continue  # robust but not maximal
            level.append(combo)
        to_check = [combo for combo in level
                    if not any(bad <= frozenset(combo) for bad in non_robust)]
        verdicts = _check_many([apply_setting(workload.restrict(c), setting)
                                for c in to_check])
        robust_by_combo = dict(zip(to_check, verdicts))
        for combo in level:
            robust = robust_by_combo.get(combo, False)
            if robust:
                maximal.append(combo)
            else:
                non_robust.append(frozenset(combo))
    maximal.sort(key=lambda c: (-len(c), tuple(names.index(n) for n in c)))
    return maximal


# promoted write sets narrowed to what conflicting writers also write
CONFLICT_NARROWED = "conflict-narrowed"
# promoted write sets covering the whole non-key read set
WRITE_BACK = "write-back"


@dataclass(frozen=True)
class PromotionSet:
    """R-operations to rewrite into updates, as (template name, op index)."""

    positions: tuple[tuple[str, int], ...]
    policy: str = CONFLICT_NARROWED


def _promoted_write_set(workload: Workload, op: Operation, policy: str) -> frozenset:
    """Write set for a promoted read.

    The default narrows the writable part of the read set to what every
    potentially conflicting writer also writes: any attribute shared with
    every current writer makes the new update ww-conflict with each of them.
    The write-back policy (and the fallback when no writer overlaps the read
    set) writes back the whole non-key read set.
    """
    rel = workload.schema.relation(op.target.relation)
    base = op.read_set - rel.keys
    if policy == WRITE_BACK:
        return base
    writer_sets = []
    for other in workload.templates:
        for o in other.ops:
            if o.is_commit or not o.is_write or o is op:
                continue
            if o.target.relation == op.target.relation and o.write_set & op.read_set:
                writer_sets.append(o.write_set)
    narrowed = base
    for ws in writer_sets:
        narrowed &= ws
    if writer_sets and narrowed:
        return narrowed
    return base


def promote(workload: Workload, selection: PromotionSet) -> Workload:
    """Rewrite each selected R-operation into a U-operation in place."""
    wanted: dict[str, set[int]] = {}
    for name, idx in selection.positions:
        wanted.setdefault(name, set()).add(idx)
    for name, idxs in wanted.items():
        tmpl = workload.template(name)
        if tmpl is None:
            raise PromotionError(f"unknown template {name!r} in promotion set")
        for idx in idxs:
            if idx >= len(tmpl.ops) or tmpl.ops[idx].kind != R:
                raise PromotionError(
                    f"selection of a non-R operation: {name}[{idx}]")
    templates = []
    for tmpl in workload.templates:
        idxs = wanted.get(tmpl.name, set())
        ops = []
        for i, op in enumerate(tmpl.ops):
            if i in idxs:
                ws = _promoted_write_set(workload, op, selection.policy)
                ops.append(Operation(U, op.target, op.read_set, ws))
            else:
                ops.append(op)
        templates.append(Template(tmpl.name, tuple(ops)))
    return replace(workload, templates=tuple(templates))


def read_positions(workload: Workload) -> list[tuple[str, int]]:
    """All R-operation positions, in template then program order."""
    return [(tmpl.name, i)
            for tmpl in workload.templates
            for i, op in enumerate(tmpl.ops) if op.kind == R]


def minimal_promotions(workload: Workload, setting: AnalysisSetting,
                       max_candidates: int = 24) -> list[PromotionSet]:
    """All promotion sets of minimum cardinality that make the workload
    robust under the given setting (the empty set when it already is).

    Promoting every R-operation is sufficient as long as each read can write
    back a non-key attribute shared with its conflicting writers, so the
    exhaustive cardinality-ascending search terminates with a result.
    """
    candidates = read_positions(workload)
    if len(candidates) > max_candidates:
        raise GuardExceeded(
            f"{len(candidates)} promotable reads exceed the guard of {max_candidates}")
    for size in range(len(candidates) + 1):
        combos = list(itertools.combinations(candidates, size))
        selections = [PromotionSet(c) for c in combos]
        verdicts = _check_many([apply_setting(promote(workload, s), setting)
                                for s in selections])
        winners = [s for s, ok in zip(selections, verdicts) if ok]
        if winners:
            return winners
    raise PromotionError(
        "no promotion set achieves robustness; some read conflicts only on key attributes")
