"""Multiversion schedules under read-committed semantics.

A schedule is a total order over the operations of a set of transactions
plus the initial writer op0, together with a per-tuple version order over
write operations and a version function mapping each read to the write
whose version it observed.  Read-last-committed (RLC) schedules are fully
determined by the interleaving: the version order follows the commit order
and every read observes the most recently committed version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from . import _kernels
from .errors import GuardExceeded, InconsistentInterleaving
from .model import RW, WR, WW, Operation, Transaction, TupleId, ops_conflict

WW_DEP = "ww-dependency"
WR_DEP = "wr-dependency"
RW_ANTIDEP = "rw-antidependency"


@dataclass(frozen=True)
class OpRef:
    """Position-based operation identity: (transaction id, index in program order)."""

    tx: str
    index: int

    def __str__(self):
        return f"{self.tx}:{self.index}" if self.index >= 0 else "op0"


# Initial writer of every tuple's first version.
OP0 = OpRef("", -1)


@dataclass(frozen=True)
class DependencyEdge:
    from_op: OpRef
    to_op: OpRef
    kind: str  # ww-dependency, wr-dependency or rw-antidependency


@dataclass(frozen=True)
class ConflictGraph:
    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], tuple[DependencyEdge, ...]]

    def successors(self, tx: str) -> tuple[str, ...]:
        return tuple(t for t in self.nodes if (tx, t) in self.edges)


@dataclass(frozen=True)
class Schedule:
    transactions: tuple[Transaction, ...]
    order: tuple[OpRef, ...]  # op0 first, then all operations
    version_order: Mapping[TupleId, tuple[OpRef, ...]]  # op0 first per tuple
    version_fn: Mapping[OpRef, OpRef]  # read -> op0 or a write on the same tuple

    def transaction(self, tx_id: str) -> Transaction:
        for t in self.transactions:
            if t.id == tx_id:
                return t
        raise KeyError(tx_id)

    def op(self, ref: OpRef) -> Operation:
        return self.transaction(ref.tx).ops[ref.index]

    def position(self, ref: OpRef) -> int:
        return self.order.index(ref)

    def positions(self) -> dict[OpRef, int]:
        return {ref: i for i, ref in enumerate(self.order)}

    def commit_ref(self, tx_id: str) -> OpRef:
        t = self.transaction(tx_id)
        return OpRef(tx_id, len(t.ops) - 1)


def _all_refs(transactions) -> list[OpRef]:
    refs = []
    for t in transactions:
        refs.extend(OpRef(t.id, i) for i in range(len(t.ops)))
    return refs


def build_rlc_schedule(transactions, interleaving) -> Schedule:
    """Build the unique read-last-committed schedule for an interleaving.

    The version order per tuple follows the writers' commit order (program
    order within one transaction); each read observes the version-maximal
    write whose transaction committed before it, or op0.
    """
    txs = tuple(transactions)
    by_id = {t.id: t for t in txs}
    if len(by_id) != len(txs):
        raise InconsistentInterleaving("duplicate transaction ids")
    order = [OP0] + [ref for ref in interleaving]
    expected = set(_all_refs(txs))
    given = set(interleaving)
    if given != expected or len(order) - 1 != len(expected):
        raise InconsistentInterleaving("interleaving is not a permutation of all operations")
    last_index = {t.id: -1 for t in txs}
    for ref in interleaving:
        if ref.index <= last_index[ref.tx]:
            raise InconsistentInterleaving(
                f"interleaving violates program order of transaction {ref.tx!r}")
        last_index[ref.tx] = ref.index

    pos = {ref: i for i, ref in enumerate(order)}
    commit_pos = {t.id: pos[OpRef(t.id, len(t.ops) - 1)] for t in txs}
    for t in txs:
        if not t.ops or not t.ops[-1].is_commit:
            raise InconsistentInterleaving(f"transaction {t.id!r} does not end with a commit")

    writes_per_tuple: dict[TupleId, list[OpRef]] = {}
    for t in txs:
        for i, op in enumerate(t.ops):
            if op.is_write:
                writes_per_tuple.setdefault(op.target, []).append(OpRef(t.id, i))
    version_order = {}
    for tup, refs in writes_per_tuple.items():
        refs.sort(key=lambda r: (commit_pos[r.tx], r.index))
        version_order[tup] = (OP0,) + tuple(refs)

    version_fn = {}
    for t in txs:
        for i, op in enumerate(t.ops):
            if not op.is_read:
                continue
            ref = OpRef(t.id, i)
            source = OP0
            for w in version_order.get(op.target, (OP0,)):
                if w == OP0:
                    continue
                if commit_pos[w.tx] < pos[ref]:
                    source = w  # version order is ascending, keep the last
            version_fn[ref] = source

    return Schedule(txs, tuple(order), version_order, version_fn)


def exhibits_dirty_write(schedule: Schedule):
    """First pair (b, a) of ww-conflicting writes with b < a < commit(b's tx)."""
    pos = schedule.positions()
    writes = [ref for ref in schedule.order
              if ref != OP0 and schedule.op(ref).is_write]
    commit_pos = {t.id: pos[schedule.commit_ref(t.id)] for t in schedule.transactions}
    for a in writes:
        op_a = schedule.op(a)
        for b in writes:
            if b.tx == a.tx:
                continue
            if not (pos[b] < pos[a] < commit_pos[b.tx]):
                continue
            if op_a.write_set & schedule.op(b).write_set and op_a.target == schedule.op(b).target:
                return (b, a)
    return None


@dataclass(frozen=True)
class RcViolation:
    kind: str  # dirty-write, non-rlc-read or version-order
    message: str
    ops: tuple[OpRef, ...]


@dataclass(frozen=True)
class RcVerdict:
    allowed: bool
    violation: Optional[RcViolation] = None


def is_rc_allowed(schedule: Schedule) -> RcVerdict:
    """Read-last-committed and free of dirty writes."""
    pos = schedule.positions()
    commit_pos = {t.id: pos[schedule.commit_ref(t.id)] for t in schedule.transactions}

    dirty = exhibits_dirty_write(schedule)
    if dirty is not None:
        return RcVerdict(False, RcViolation(
            "dirty-write", f"dirty write: {dirty[1]} overwrites uncommitted {dirty[0]}", dirty))

    # The version order must follow the commit order: writes of an earlier
    # committer install earlier versions (program order within a transaction).
    for tup, refs in schedule.version_order.items():
        if not refs or refs[0] != OP0:
            return RcVerdict(False, RcViolation(
                "version-order", f"version order on {tup} does not start at op0", refs[:1]))
        keys = [(commit_pos[r.tx], r.index) for r in refs[1:]]
        if keys != sorted(keys):
            return RcVerdict(False, RcViolation(
                "version-order",
                f"version order on {tup} disagrees with the commit order", tuple(refs[1:])))

    for t in schedule.transactions:
        for i, op in enumerate(t.ops):
            if not op.is_read:
                continue
            ref = OpRef(t.id, i)
            v = schedule.version_fn.get(ref)
            if v is None:
                return RcVerdict(False, RcViolation(
                    "non-rlc-read", f"read {ref} has no version source", (ref,)))
            if v != OP0:
                if schedule.op(v).target != op.target or not schedule.op(v).is_write:
                    return RcVerdict(False, RcViolation(
                        "non-rlc-read", f"read {ref} observes a write on another tuple", (ref, v)))
                if not commit_pos[v.tx] < pos[ref]:
                    return RcVerdict(False, RcViolation(
                        "non-rlc-read", f"read {ref} observes an uncommitted version", (ref, v)))
            chain = schedule.version_order.get(op.target, (OP0,))
            if v not in chain:
                return RcVerdict(False, RcViolation(
                    "non-rlc-read", f"read {ref} observes a version outside the version order",
                    (ref, v)))
            v_rank = chain.index(v)
            for c in chain[v_rank + 1:]:
                if commit_pos[c.tx] < pos[ref]:
                    return RcVerdict(False, RcViolation(
                        "non-rlc-read",
                        f"read {ref} skips the more recently committed version {c}",
                        (ref, v, c)))

    return RcVerdict(True)


def dependency_edges(schedule: Schedule) -> list[DependencyEdge]:
    """All dependencies: ww by version order, wr into later readers of the
    same or a later version, rw from a read whose version precedes the write."""
    pos = schedule.positions()

    def vo_rank(tup, ref):
        chain = schedule.version_order.get(tup, (OP0,))
        return chain.index(ref)

    edges = []
    refs = [ref for ref in schedule.order if ref != OP0 and not schedule.op(ref).is_commit]
    for b in refs:
        op_b = schedule.op(b)
        for a in refs:
            if a.tx == b.tx or schedule.op(a).target != op_b.target:
                continue
            op_a = schedule.op(a)
            kinds = ops_conflict(op_b, op_a)
            if WW in kinds and vo_rank(op_b.target, b) < vo_rank(op_a.target, a):
                edges.append(DependencyEdge(b, a, WW_DEP))
            if WR in kinds:
                v = schedule.version_fn[a]
                if b == v or (v != OP0 and vo_rank(op_a.target, b) < vo_rank(op_a.target, v)):
                    edges.append(DependencyEdge(b, a, WR_DEP))
            if RW in kinds:
                v = schedule.version_fn[b]
                if v == OP0 or vo_rank(op_b.target, v) < vo_rank(op_b.target, a):
                    edges.append(DependencyEdge(b, a, RW_ANTIDEP))
    edges.sort(key=lambda e: (pos[e.from_op], pos[e.to_op], e.kind))
    return edges


def conflict_graph(schedule: Schedule) -> ConflictGraph:
    nodes = tuple(t.id for t in schedule.transactions)
    grouped: dict[tuple[str, str], list[DependencyEdge]] = {}
    for e in dependency_edges(schedule):
        grouped.setdefault((e.from_op.tx, e.to_op.tx), []).append(e)
    return ConflictGraph(nodes, {k: tuple(v) for k, v in grouped.items()})


@dataclass(frozen=True)
class SerializabilityVerdict:
    serializable: bool
    cycle: Optional[tuple[str, ...]] = None


def is_conflict_serializable(schedule: Schedule) -> SerializabilityVerdict:
    """Acyclicity of the conflict graph; on failure returns one cycle."""
    graph = conflict_graph(schedule)
    order = {tx: i for i, tx in enumerate(graph.nodes)}
    color = {tx: 0 for tx in graph.nodes}  # 0 new, 1 on stack, 2 done
    stack: list[str] = []

    def visit(tx):
        color[tx] = 1
        stack.append(tx)
        for succ in graph.successors(tx):
            if color[succ] == 1:
                cycle = stack[stack.index(succ):]
                return cycle
            if color[succ] == 0:
                found = visit(succ)
                if found is not None:
                    return found
        stack.pop()
        color[tx] = 2
        return None

    for tx in graph.nodes:
        if color[tx] == 0:
            cycle = visit(tx)
            if cycle is not None:
                k = min(range(len(cycle)), key=lambda i: order[cycle[i]])
                rotated = tuple(cycle[k:] + cycle[:k])
                return SerializabilityVerdict(False, rotated)
    return SerializabilityVerdict(True)


def interleaving_count(transactions) -> int:
    """Number of interleavings respecting program order (multinomial)."""
    total = 0
    result = 1
    for t in transactions:
        n = len(t.ops)
        total += n
        result *= math.comb(total, n)
    return result


def _check_guard(transactions, max_ops):
    non_commit = sum(len(t.non_commit_ops()) for t in transactions)
    if non_commit > max_ops:
        raise GuardExceeded(
            f"{non_commit} non-commit operations exceed the guard of {max_ops}; "
            f"{interleaving_count(transactions)} interleavings would result")


def enumerate_rc_schedules(transactions, max_ops: int = 16) -> Iterator[Schedule]:
    """Yield every dirty-write-free RLC schedule, one per qualifying
    interleaving, in lexicographic order of the transaction-choice sequence.

    Partial interleavings that already exhibit a dirty write are pruned.
    """
    txs = tuple(transactions)
    _check_guard(txs, max_ops)
    if not txs:
        return

    n_each = [len(t.ops) for t in txs]
    progress = [0] * len(txs)
    committed = [False] * len(txs)
    uncommitted_writes: list[dict[TupleId, frozenset[str]]] = [dict() for _ in txs]
    chosen: list[int] = []

    def dirty_on_append(ti: int, op: Operation) -> bool:
        if not op.is_write or not op.write_set:
            return False
        for tj in range(len(txs)):
            if tj == ti or committed[tj]:
                continue
            if uncommitted_writes[tj].get(op.target, frozenset()) & op.write_set:
                return True
        return False

    def emit() -> Schedule:
        interleaving = []
        cursor = [0] * len(txs)
        for ti in chosen:
            interleaving.append(OpRef(txs[ti].id, cursor[ti]))
            cursor[ti] += 1
        return build_rlc_schedule(txs, interleaving)

    total = sum(n_each)

    def walk():
        if len(chosen) == total:
            yield emit()
            return
        for ti in range(len(txs)):
            if progress[ti] == n_each[ti]:
                continue
            op = txs[ti].ops[progress[ti]]
            if dirty_on_append(ti, op):
                continue
            saved = None
            if op.is_commit:
                committed[ti] = True
            elif op.is_write:
                saved = uncommitted_writes[ti].get(op.target, frozenset())
                uncommitted_writes[ti][op.target] = saved | op.write_set
            progress[ti] += 1
            chosen.append(ti)
            yield from walk()
            chosen.pop()
            progress[ti] -= 1
            if op.is_commit:
                committed[ti] = False
            elif op.is_write:
                uncommitted_writes[ti][op.target] = saved

    yield from walk()


@dataclass(frozen=True)
class OracleVerdict:
    robust: bool
    counterexample: Optional[Schedule] = None
    schedules_checked: int = 0


def robust_oracle(transactions, max_ops: int = 16) -> OracleVerdict:
    """Exhaustively check every RC-allowed schedule for conflict serializability.

    Scans interleavings in the same order as enumerate_rc_schedules and stops
    at the first non-serializable one.  The scan runs in the compiled kernel
    when available (see _kernels).
    """
    txs = tuple(transactions)
    _check_guard(txs, max_ops)
    if not txs:
        return OracleVerdict(True, None, 1)

    encoded = _kernels.encode_transactions(txs)
    if encoded is None:
        # outside the kernel's encoding limits: fall back to direct enumeration
        checked = 0
        for sched in enumerate_rc_schedules(txs, max_ops=max_ops):
            checked += 1
            if not is_conflict_serializable(sched).serializable:
                return OracleVerdict(False, sched, checked)
        return OracleVerdict(True, None, checked)

    found, choice_seq, leaves = _kernels.scan_rc_schedules(encoded, early_stop=True)
    if not found:
        return OracleVerdict(True, None, leaves)
    cursor = {t.id: 0 for t in txs}
    interleaving = []
    for ti in choice_seq:
        t = txs[ti]
        interleaving.append(OpRef(t.id, cursor[t.id]))
        cursor[t.id] += 1
    sched = build_rlc_schedule(txs, interleaving)
    return OracleVerdict(False, sched, leaves)
