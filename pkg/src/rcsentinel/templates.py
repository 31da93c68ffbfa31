"""Robustness of template workloads against read committed.

The decision procedure lifts the split-schedule search to templates.  For a
candidate split template, split read o1, companion operation p1 and a tuple
index h in {1,2}, it builds a graph whose nodes (template, op, i, in/out)
assert that the op's variable can be bound to tuple c_i without creating a
dirty write against the split prefix, and whose edges chain potentially
conflicting operations through template occurrences.  A qualifying in->out
path yields a sequence of potentially conflicting quadruples; binding each
connected-variable class to one of four tuples per relation materializes a
concrete counterexample schedule, which is verified end to end before it is
reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import InternalInvariantError
from .model import (
    RW, Operation, Template, Transaction, TupleId, Variable, Workload,
    instantiate, potentially_conflicting,
)
from .schedule import OpRef, Schedule, is_conflict_serializable, is_rc_allowed
from .txcheck import ConflictQuadruple, SplitWitness, build_split_schedule

IN = "in"
OUT = "out"


@dataclass(frozen=True)
class TemplateGraphNode:
    template: str
    op_index: int
    tuple_index: int  # 1..3
    direction: str  # "in" or "out"


@dataclass(frozen=True)
class PtGraph:
    nodes: tuple[TemplateGraphNode, ...]
    adjacency: Mapping[TemplateGraphNode, tuple[TemplateGraphNode, ...]]


@dataclass(frozen=True)
class TypeMapping:
    """One of the four canonical tuple choices; distinct indices pick
    distinct tuples of every relation."""

    index: int  # 1..4

    def __call__(self, relation: str) -> TupleId:
        return TupleId(relation, f"c{self.index}")


TYPE_MAPPINGS = {i: TypeMapping(i) for i in (1, 2, 3, 4)}


@dataclass(frozen=True)
class ChainLink:
    """One potentially conflicting quadruple: the out-operation of one
    occurrence conflicts with the in-operation of the next."""

    from_occurrence: int
    out_op: int
    in_op: int
    to_occurrence: int


@dataclass(frozen=True)
class PotentialQuadrupleChain:
    occurrences: tuple[Template, ...]  # occurrence 0 is the split template
    links: tuple[ChainLink, ...]  # closes back into occurrence 0
    split_op: int  # o1, a read operation of occurrence 0
    companion_op: int  # p1
    tuple_index: int  # h: 1 if the suffix reuses the split tuple, else 2


@dataclass(frozen=True)
class TemplateWitness:
    split_template: str
    split_op: int
    companion_op: int
    tuple_index: int
    chain: PotentialQuadrupleChain


@dataclass(frozen=True)
class TemplateRobustnessResult:
    robust: bool
    witness: Optional[TemplateWitness] = None
    assignments: tuple[Mapping[Variable, TupleId], ...] = ()
    transactions: tuple[Transaction, ...] = ()
    split_witness: Optional[SplitWitness] = None
    counterexample: Optional[Schedule] = None


class _Analysis:
    """Per-workload precomputation shared across all split candidates."""

    def __init__(self, workload: Workload):
        self.templates = workload.templates
        self.gids: list[tuple[int, int]] = []  # g -> (template index, op index)
        self.gid_of: dict[tuple[int, int], int] = {}
        self.ops: list[Operation] = []
        self.tmpl_of: list[int] = []
        self.tmpl_gids: list[list[int]] = []
        for ti, tmpl in enumerate(self.templates):
            mine = []
            for oi, op in enumerate(tmpl.ops):
                if op.is_commit:
                    continue
                g = len(self.gids)
                self.gids.append((ti, oi))
                self.gid_of[(ti, oi)] = g
                self.ops.append(op)
                self.tmpl_of.append(ti)
                mine.append(g)
            self.tmpl_gids.append(mine)
        n = len(self.ops)
        self.var_of = [op.target for op in self.ops]
        self.pot_any = [0] * n
        self.pot_rw = [0] * n
        for g1 in range(n):
            for g2 in range(n):
                kinds = potentially_conflicting(self.ops[g1], self.ops[g2])
                if kinds:
                    self.pot_any[g1] |= 1 << g2
                if RW in kinds:
                    self.pot_rw[g1] |= 1 << g2
        self.pot_any_list = [[g2 for g2 in range(n) if (self.pot_any[g1] >> g2) & 1]
                             for g1 in range(n)]
        # per (template, variable): union of write sets over that variable
        self.union_ws: dict[tuple[int, Variable], frozenset] = {}
        for g in range(n):
            key = (self.tmpl_of[g], self.var_of[g])
            self.union_ws[key] = self.union_ws.get(key, frozenset()) | self.ops[g].write_set

    def prefix_write_union(self, t1_idx: int, o1_idx: int, var: Variable) -> frozenset:
        acc = frozenset()
        for op in self.templates[t1_idx].ops[:o1_idx + 1]:
            if not op.is_commit and op.target == var:
                acc |= op.write_set
        return acc


class _SplitContext:
    """Node validity and edge successors for one (tau1, o1, p1, h) candidate."""

    def __init__(self, analysis: _Analysis, t1_idx: int, o1_idx: int, p1_idx: int, h: int):
        self.a = analysis
        self.h = h
        tmpl = analysis.templates[t1_idx]
        var_o1 = tmpl.ops[o1_idx].target
        var_p1 = tmpl.ops[p1_idx].target
        mask_o1 = analysis.prefix_write_union(t1_idx, o1_idx, var_o1)
        mask_p1 = analysis.prefix_write_union(t1_idx, o1_idx, var_p1)
        n = len(analysis.ops)
        self.blocked_o1 = [False] * n
        self.blocked_p1 = [False] * n
        for g in range(n):
            var = analysis.var_of[g]
            ws = analysis.union_ws[(analysis.tmpl_of[g], var)]
            if var.relation == var_o1.relation and ws & mask_o1:
                self.blocked_o1[g] = True
            if var.relation == var_p1.relation and ws & mask_p1:
                self.blocked_p1[g] = True

    def valid(self, g: int, i: int) -> bool:
        if i == 1 and self.blocked_o1[g]:
            return False
        if i == self.h and self.blocked_p1[g]:
            return False
        return True

    # node ids: g*6 + (i-1)*2 + (0 for in, 1 for out)
    def successors(self, nid: int):
        g, rest = divmod(nid, 6)
        i = rest // 2 + 1
        is_out = rest % 2 == 1
        a = self.a
        if is_out:
            for g2 in a.pot_any_list[g]:
                if self.valid(g2, i):
                    yield g2 * 6 + (i - 1) * 2
        else:
            var = a.var_of[g]
            for g2 in a.tmpl_gids[a.tmpl_of[g]]:
                if a.var_of[g2] == var:
                    if self.valid(g2, i):
                        yield g2 * 6 + (i - 1) * 2 + 1
                else:
                    for i2 in (1, 2, 3):
                        if self.valid(g2, i2):
                            yield g2 * 6 + (i2 - 1) * 2 + 1

    def bfs(self, start: int):
        parent = {start: -1}
        frontier = [start]
        while frontier:
            nxt = []
            for nid in frontier:
                for m in self.successors(nid):
                    if m not in parent:
                        parent[m] = nid
                        nxt.append(m)
            frontier = nxt
        return parent


def pt_prefix_conflict_free_graph(o1: int, p1: int, h: int, tau1: Template,
                                  workload: Workload) -> PtGraph:
    """The full node/edge graph for one split candidate (mostly for inspection;
    the decision procedure walks the same structure lazily)."""
    analysis = _Analysis(workload)
    t1_idx = workload.templates.index(tau1)
    ctx = _SplitContext(analysis, t1_idx, o1, p1, h)

    def to_node(nid):
        g, rest = divmod(nid, 6)
        ti, oi = analysis.gids[g]
        return TemplateGraphNode(workload.templates[ti].name, oi,
                                 rest // 2 + 1, IN if rest % 2 == 0 else OUT)

    node_ids = []
    for g in range(len(analysis.ops)):
        for i in (1, 2, 3):
            if ctx.valid(g, i):
                node_ids.append(g * 6 + (i - 1) * 2)
                node_ids.append(g * 6 + (i - 1) * 2 + 1)
    adjacency = {}
    for nid in node_ids:
        adjacency[to_node(nid)] = tuple(to_node(m) for m in ctx.successors(nid))
    return PtGraph(tuple(to_node(nid) for nid in node_ids), adjacency)


def _union_find():
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    return find, union


def _chain_classes(chain: PotentialQuadrupleChain):
    find, union = _union_find()
    for i, occ in enumerate(chain.occurrences):
        for v in occ.variables():
            find((i, v))
    for link in chain.links:
        out_var = chain.occurrences[link.from_occurrence].ops[link.out_op].target
        in_var = chain.occurrences[link.to_occurrence].ops[link.in_op].target
        union((link.from_occurrence, out_var), (link.to_occurrence, in_var))
    return find


def connected_variables(chain: PotentialQuadrupleChain, anchor: tuple[int, int]):
    """All (occurrence, variable) pairs the chain forces onto the anchor
    operation's tuple."""
    occ_idx, op_idx = anchor
    anchor_var = chain.occurrences[occ_idx].ops[op_idx].target
    find = _chain_classes(chain)
    root = find((occ_idx, anchor_var))
    members = set()
    for i, occ in enumerate(chain.occurrences):
        for v in occ.variables():
            if find((i, v)) == root:
                members.add((i, v))
    return frozenset(members)


def canonical_mapping(chain: PotentialQuadrupleChain) -> list[dict[Variable, TupleId]]:
    """One variable assignment per occurrence, over at most four tuples per
    relation: c1 for everything forced onto the split read's tuple, c1 or c2
    for the companion class (per the chain's tuple index), c4 for the split
    occurrence's remaining variables and c3 for everyone else's."""
    find = _chain_classes(chain)
    split_tmpl = chain.occurrences[0]
    root_o1 = find((0, split_tmpl.ops[chain.split_op].target))
    root_p1 = find((0, split_tmpl.ops[chain.companion_op].target))
    assignments = []
    for i, occ in enumerate(chain.occurrences):
        mapping = {}
        for v in occ.variables():
            root = find((i, v))
            if root == root_o1:
                idx = 1
            elif root == root_p1:
                idx = 1 if chain.tuple_index == 1 else 2
            elif i == 0:
                idx = 4
            else:
                idx = 3
            mapping[v] = TYPE_MAPPINGS[idx](v.relation)
        assignments.append(mapping)
    return assignments


def materialize_counterexample(chain: PotentialQuadrupleChain):
    """Instantiate the chain's occurrences with the canonical mapping and
    build the split schedule they induce."""
    assignments = canonical_mapping(chain)
    transactions = tuple(
        instantiate(occ, assignment, f"T{i + 1}")
        for i, (occ, assignment) in enumerate(zip(chain.occurrences, assignments)))
    quads = []
    for link in chain.links:
        quads.append(ConflictQuadruple(
            transactions[link.from_occurrence].id,
            OpRef(transactions[link.from_occurrence].id, link.out_op),
            OpRef(transactions[link.to_occurrence].id, link.in_op),
            transactions[link.to_occurrence].id))
    witness = SplitWitness(tuple(quads), transactions[0].id,
                           OpRef(transactions[0].id, chain.split_op))
    schedule = build_split_schedule(witness, transactions)
    return assignments, transactions, witness, schedule


def is_robust_templates(workload: Workload) -> TemplateRobustnessResult:
    """Decide robustness of a validated workload; a NotRobust answer carries a
    verified counterexample schedule over at most four tuples per relation."""
    analysis = _Analysis(workload)
    templates = workload.templates
    for t1_idx, tau1 in enumerate(templates):
        for o1_idx, o1_op in enumerate(tau1.ops):
            # only reads can open a split: the hit condition needs a
            # potential rw-conflict out of o1
            if not o1_op.is_read or o1_op.is_commit:
                continue
            o1_g = analysis.gid_of[(t1_idx, o1_idx)]
            if analysis.pot_rw[o1_g] == 0:
                continue
            for p1_idx, p1_op in enumerate(tau1.ops):
                if p1_op.is_commit:
                    continue
                p1_g = analysis.gid_of[(t1_idx, p1_idx)]
                if analysis.pot_any[p1_g] == 0:
                    continue
                for h in (1, 2):
                    if h == 2 and p1_op.target == o1_op.target:
                        # with a shared variable both guards coincide; any such
                        # hit is also found at h=1, where it is materializable
                        continue
                    hit = _scan_candidate(analysis, t1_idx, o1_idx, o1_g,
                                          p1_idx, p1_g, h)
                    if hit is None:
                        continue
                    return _report(analysis, t1_idx, o1_idx, p1_idx, h, hit)
    return TemplateRobustnessResult(True)


def _scan_candidate(analysis, t1_idx, o1_idx, o1_g, p1_idx, p1_g, h):
    ctx = _SplitContext(analysis, t1_idx, o1_idx, p1_idx, h)
    bfs_cache: dict[int, dict[int, int]] = {}
    templates = analysis.templates
    for t2_idx in range(len(templates)):
        for tm_idx in range(len(templates)):
            for p2_g in analysis.tmpl_gids[t2_idx]:
                if not (analysis.pot_rw[o1_g] >> p2_g) & 1:
                    continue
                start = p2_g * 6  # (p2, 1, in)
                if not ctx.valid(p2_g, 1):
                    continue
                if start not in bfs_cache:
                    bfs_cache[start] = ctx.bfs(start)
                parent = bfs_cache[start]
                for om_g in analysis.tmpl_gids[tm_idx]:
                    if not (analysis.pot_any[p1_g] >> om_g) & 1:
                        continue
                    if not (o1_idx < p1_idx or (analysis.pot_rw[om_g] >> p1_g) & 1):
                        continue
                    end = om_g * 6 + (h - 1) * 2 + 1  # (om, h, out)
                    if end in parent and end != start:
                        return ctx, parent, start, end
    return None


def _report(analysis, t1_idx, o1_idx, p1_idx, h, hit):
    ctx, parent, start, end = hit
    path = [end]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    # the path alternates in/out; each in/out pair is one template occurrence
    if len(path) % 2 != 0:
        raise InternalInvariantError("witness path does not alternate in/out")
    occurrences = [analysis.templates[t1_idx]]
    links = []
    pairs = [(path[k], path[k + 1]) for k in range(0, len(path), 2)]
    for in_nid, out_nid in pairs:
        g_in, g_out = in_nid // 6, out_nid // 6
        if analysis.tmpl_of[g_in] != analysis.tmpl_of[g_out]:
            raise InternalInvariantError("witness path pairs span two templates")
        occurrences.append(analysis.templates[analysis.tmpl_of[g_in]])
    m = len(occurrences)
    for j, (in_nid, out_nid) in enumerate(pairs):
        prev_out = o1_idx if j == 0 else analysis.gids[pairs[j - 1][1] // 6][1]
        links.append(ChainLink(j, prev_out, analysis.gids[in_nid // 6][1], j + 1))
    last_out = analysis.gids[pairs[-1][1] // 6][1]
    links.append(ChainLink(m - 1, last_out, p1_idx, 0))
    chain = PotentialQuadrupleChain(tuple(occurrences), tuple(links), o1_idx, p1_idx, h)

    assignments, transactions, split_witness, schedule = materialize_counterexample(chain)
    if not is_rc_allowed(schedule).allowed or is_conflict_serializable(schedule).serializable:
        raise InternalInvariantError("materialized counterexample failed verification")
    for rel in {v.relation for a in assignments for v in a}:
        labels = {a[v].label for a in assignments for v in a if v.relation == rel}
        if len(labels) > 4:
            raise InternalInvariantError("counterexample exceeds four tuples per relation")
    witness = TemplateWitness(analysis.templates[t1_idx].name, o1_idx, p1_idx, h, chain)
    return TemplateRobustnessResult(False, witness, tuple(assignments),
                                    transactions, split_witness, schedule)
