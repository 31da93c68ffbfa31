"""Robustness of concrete transaction sets against read committed.

Non-robustness is witnessed by a split schedule: one transaction cut at a
read, a chain of conflicting transactions inserted between its halves, and
every other transaction appended serially.  The decision procedure searches
for such a witness: for every candidate split read it builds the graph of
transactions whose writes stay clear of the split prefix, closes it under
reachability, and tests the cycle-closing conflict conditions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import SplitConditionError
from .model import RW, WW, Transaction, ops_conflict
from .schedule import OpRef, Schedule, build_rlc_schedule


@dataclass(frozen=True)
class ConflictQuadruple:
    from_tx: str
    b: OpRef  # operation of from_tx
    a: OpRef  # operation of to_tx conflicting with b
    to_tx: str


@dataclass(frozen=True)
class SplitWitness:
    chain: tuple[ConflictQuadruple, ...]  # starts and ends at split_tx
    split_tx: str
    split_op: OpRef  # a read operation; the split transaction is cut just after it


@dataclass(frozen=True)
class TxRobustnessResult:
    robust: bool
    witness: Optional[SplitWitness] = None


@dataclass(frozen=True)
class TxGraph:
    nodes: tuple[str, ...]
    adjacency: dict[str, tuple[str, ...]]

    def reachable(self, start: str) -> frozenset[str]:
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for n in frontier:
                for m in self.adjacency[n]:
                    if m not in seen:
                        seen.add(m)
                        nxt.append(m)
            frontier = nxt
        return frozenset(seen)


def _conflicts(t1: Transaction, t2: Transaction) -> bool:
    for o1 in t1.ops:
        for o2 in t2.ops:
            if not o1.is_commit and not o2.is_commit and ops_conflict(o1, o2):
                return True
    return False


def prefix_conflict_free_graph(b1: OpRef, t1: Transaction, others) -> TxGraph:
    """Graph over the transactions none of whose operations ww-conflict with
    the prefix of t1 up to and including b1; edges join conflicting pairs."""
    prefix = t1.ops[:b1.index + 1]
    nodes = []
    for t in others:
        blocked = any(WW in ops_conflict(p, o)
                      for p in prefix if p.is_write
                      for o in t.ops if o.is_write)
        if not blocked:
            nodes.append(t)
    adjacency = {}
    for t in nodes:
        adjacency[t.id] = tuple(u.id for u in nodes if u.id != t.id and _conflicts(t, u))
    return TxGraph(tuple(t.id for t in nodes), adjacency)


def _first_conflicting_pair(t_from: Transaction, t_to: Transaction):
    for i, b in enumerate(t_from.ops):
        if b.is_commit:
            continue
        for j, a in enumerate(t_to.ops):
            if a.is_commit:
                continue
            if ops_conflict(b, a):
                return OpRef(t_from.id, i), OpRef(t_to.id, j)
    return None


def is_robust_transactions(transactions) -> TxRobustnessResult:
    """Decide robustness; on failure return the first split witness found.

    Transactions are scanned in input order, operations in program order, so
    the reported witness is deterministic.
    """
    txs = tuple(transactions)
    by_id = {t.id: t for t in txs}
    if len(by_id) != len(txs):
        raise ValueError("transactions must have unique ids")
    for t1 in txs:
        others = [t for t in txs if t.id != t1.id]
        for b1_idx, b1_op in enumerate(t1.ops):
            if not b1_op.is_read:
                continue
            b1 = OpRef(t1.id, b1_idx)
            graph = prefix_conflict_free_graph(b1, t1, others)
            reach = {n: graph.reachable(n) for n in graph.nodes}  # reflexive
            for t2_id in graph.nodes:
                for tm_id in graph.nodes:
                    if tm_id not in reach[t2_id]:
                        continue
                    t2, tm = by_id[t2_id], by_id[tm_id]
                    hit = _split_conditions_hit(t1, b1_idx, t2, tm)
                    if hit is None:
                        continue
                    a1_idx, a2_idx, bm_idx = hit
                    chain = _assemble_chain(graph, by_id, t1, b1_idx,
                                            t2, a2_idx, tm, bm_idx, a1_idx)
                    return TxRobustnessResult(False, SplitWitness(chain, t1.id, b1))
    return TxRobustnessResult(True)


def _split_conditions_hit(t1, b1_idx, t2, tm):
    b1_op = t1.ops[b1_idx]
    for a1_idx, a1 in enumerate(t1.ops):
        if a1.is_commit:
            continue
        for a2_idx, a2 in enumerate(t2.ops):
            if a2.is_commit or RW not in ops_conflict(b1_op, a2):
                continue
            for bm_idx, bm in enumerate(tm.ops):
                if bm.is_commit or not ops_conflict(a1, bm):
                    continue
                if b1_idx < a1_idx or RW in ops_conflict(bm, a1):
                    return a1_idx, a2_idx, bm_idx
    return None


def _assemble_chain(graph, by_id, t1, b1_idx, t2, a2_idx, tm, bm_idx, a1_idx):
    path = _shortest_path(graph, t2.id, tm.id)
    quads = [ConflictQuadruple(t1.id, OpRef(t1.id, b1_idx), OpRef(t2.id, a2_idx), t2.id)]
    for from_id, to_id in zip(path, path[1:]):
        pair = _first_conflicting_pair(by_id[from_id], by_id[to_id])
        quads.append(ConflictQuadruple(from_id, pair[0], pair[1], to_id))
    quads.append(ConflictQuadruple(tm.id, OpRef(tm.id, bm_idx), OpRef(t1.id, a1_idx), t1.id))
    return tuple(quads)


def _shortest_path(graph: TxGraph, start: str, goal: str) -> list[str]:
    if start == goal:
        return [start]
    parent = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for n in frontier:
            for m in graph.adjacency[n]:
                if m in parent:
                    continue
                parent[m] = n
                if m == goal:
                    path = [m]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    return list(reversed(path))
                nxt.append(m)
        frontier = nxt
    raise ValueError(f"no path from {start!r} to {goal!r}")


def build_split_schedule(witness: SplitWitness, all_transactions) -> Schedule:
    """Materialize a witness: prefix of the split transaction, the chain
    transactions in full, the postfix, then every remaining transaction.

    The three witness clauses are re-checked; the result is read-committed
    allowed and not conflict serializable.
    """
    txs = tuple(all_transactions)
    by_id = {t.id: t for t in txs}
    chain = witness.chain
    if not chain:
        raise SplitConditionError(0, "empty witness chain")
    t1 = by_id[witness.split_tx]
    b1 = witness.split_op
    if chain[0].from_tx != t1.id or chain[0].b != b1 or chain[-1].to_tx != t1.id:
        raise SplitConditionError(0, "chain must start and end at the split transaction")
    if not t1.ops[b1.index].is_read:
        raise SplitConditionError(0, "split operation must be a read")
    for q, nxt in zip(chain, chain[1:]):
        if q.to_tx != nxt.from_tx:
            raise SplitConditionError(0, "chain quadruples do not share their middle transaction")
    middle_ids = []
    for q in chain[:-1]:
        if q.to_tx == t1.id:
            raise SplitConditionError(0, "split transaction may appear only at the ends")
        middle_ids.append(q.to_tx)
    if len(set(middle_ids)) != len(middle_ids):
        raise SplitConditionError(0, "a transaction occurs more than twice in the chain")
    for q in chain:
        b_op = by_id[q.from_tx].ops[q.b.index]
        a_op = by_id[q.to_tx].ops[q.a.index]
        if not ops_conflict(b_op, a_op):
            raise SplitConditionError(0, f"chain operations {q.b} and {q.a} do not conflict")

    prefix = t1.ops[:b1.index + 1]
    for tid in middle_ids:
        for p in prefix:
            if not p.is_write:
                continue
            for o in by_id[tid].ops:
                if o.is_write and WW in ops_conflict(p, o):
                    raise SplitConditionError(
                        1, f"dirty-write clause violated: prefix write conflicts with {tid}")

    a1 = chain[-1].a
    bm = chain[-1].b
    bm_op = by_id[bm.tx].ops[bm.index]
    a1_op = t1.ops[a1.index]
    if not (b1.index < a1.index or RW in ops_conflict(bm_op, a1_op)):
        raise SplitConditionError(
            2, "cycle-closing clause violated: the chain does not return into the split suffix")
    a2_op = by_id[chain[0].to_tx].ops[chain[0].a.index]
    if RW not in ops_conflict(t1.ops[b1.index], a2_op):
        raise SplitConditionError(
            3, "split-read clause violated: the split read must rw-conflict with its successor")

    interleaving = [OpRef(t1.id, i) for i in range(b1.index + 1)]
    for tid in middle_ids:
        interleaving.extend(OpRef(tid, i) for i in range(len(by_id[tid].ops)))
    interleaving.extend(OpRef(t1.id, i) for i in range(b1.index + 1, len(t1.ops)))
    used = {t1.id, *middle_ids}
    for t in txs:
        if t.id not in used:
            interleaving.extend(OpRef(t.id, i) for i in range(len(t.ops)))
    return build_rlc_schedule(txs, interleaving)
