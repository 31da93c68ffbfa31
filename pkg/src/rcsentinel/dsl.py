"""Text formats: the workload DSL (.rct) and schedule transcripts (.rcs).

Workload files declare relations with key-flagged attributes followed by
templates whose operations read/write attribute lists of typed variables;
the commit is implicit at the end of each template.  Schedule files list one
operation per line in schedule order; the version function and version order
of a parsed schedule are always the forced read-last-committed ones.
"""

from __future__ import annotations

import re

from .errors import ParseError
from .model import (
    R, U, W, Operation, Relation, Schema, Template, Transaction,
    TupleId, Variable, Workload, commit,
)
from .schedule import OpRef

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_RELATION_RE = re.compile(rf"relation\s+({_IDENT})\s*\((.*)\)\s*$")
_TEMPLATE_RE = re.compile(rf"template\s+({_IDENT})\s*\{{\s*$")
_OP_RE = re.compile(
    rf"([RWU])\s+({_IDENT})\s*:\s*({_IDENT})\s*"
    rf"\[([^\]]*)\]\s*(?:\[([^\]]*)\])?\s*$")


def _strip(line: str) -> str:
    if "#" in line:
        line = line[:line.index("#")]
    return line.strip()


def _attr_list(text: str) -> list[str]:
    text = text.strip()
    if not text:
        return []
    return [a.strip() for a in text.split(",")]


def parse_workload(text: str) -> Workload:
    """Parse workload DSL; syntax errors carry line numbers, semantic issues
    are left to validate_workload."""
    relations: list[Relation] = []
    templates: list[Template] = []
    current_name = None
    current_ops: list[Operation] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if current_name is None:
            if line.startswith("relation"):
                m = _RELATION_RE.match(line)
                if not m:
                    raise ParseError("malformed relation declaration", lineno)
                attrs = []
                for item in _attr_list(m.group(2)):
                    parts = item.split()
                    if len(parts) == 1:
                        attrs.append((parts[0], False))
                    elif len(parts) == 2 and parts[1] == "key":
                        attrs.append((parts[0], True))
                    else:
                        raise ParseError(f"malformed attribute {item!r}", lineno)
                    if not re.fullmatch(_IDENT, parts[0]):
                        raise ParseError(f"malformed attribute name {parts[0]!r}", lineno)
                relations.append(Relation(m.group(1), tuple(attrs)))
            elif line.startswith("template"):
                m = _TEMPLATE_RE.match(line)
                if not m:
                    raise ParseError("malformed template header", lineno)
                current_name = m.group(1)
                current_ops = []
            else:
                raise ParseError(f"expected a relation or template declaration, got {line!r}",
                                 lineno)
            continue
        if line == "}":
            templates.append(Template(current_name, tuple(current_ops) + (commit(),)))
            current_name = None
            continue
        m = _OP_RE.match(line)
        if not m:
            raise ParseError(f"malformed operation {line!r}", lineno)
        kind, var_name, rel_name, first, second = m.groups()
        var = Variable(var_name, rel_name)
        if kind == "R":
            if second is not None:
                raise ParseError("R-operations take a single attribute list", lineno)
            current_ops.append(Operation(R, var, read_set=frozenset(_attr_list(first))))
        elif kind == "W":
            if second is not None:
                raise ParseError("W-operations take a single attribute list", lineno)
            current_ops.append(Operation(W, var, write_set=frozenset(_attr_list(first))))
        else:
            if second is None:
                raise ParseError("U-operations take a read list and a write list", lineno)
            current_ops.append(Operation(U, var, frozenset(_attr_list(first)),
                                         frozenset(_attr_list(second))))
    if current_name is not None:
        raise ParseError(f"template {current_name!r} is missing its closing brace")
    return Workload(Schema(tuple(relations)), tuple(templates))


def _ordered_attrs(schema: Schema, relation: str, attrs: frozenset[str]) -> list[str]:
    rel = schema.relation(relation)
    if rel is None:
        return sorted(attrs)
    ordered = [a for a in rel.attr_names if a in attrs]
    ordered.extend(sorted(attrs - rel.attr_set))
    return ordered


def print_workload(workload: Workload) -> str:
    """Canonical DSL text; parse(print(w)) == w for valid workloads."""
    out = []
    for rel in workload.schema.relations:
        decls = ", ".join(f"{a} key" if k else a for a, k in rel.attributes)
        out.append(f"relation {rel.name}({decls})")
    for tmpl in workload.templates:
        out.append("")
        out.append(f"template {tmpl.name} {{")
        for op in tmpl.ops:
            if op.is_commit:
                continue
            var = op.target
            rs = ",".join(_ordered_attrs(workload.schema, var.relation, op.read_set))
            ws = ",".join(_ordered_attrs(workload.schema, var.relation, op.write_set))
            if op.kind == R:
                out.append(f"  R {var.name}:{var.relation}[{rs}]")
            elif op.kind == W:
                out.append(f"  W {var.name}:{var.relation}[{ws}]")
            else:
                out.append(f"  U {var.name}:{var.relation}[{rs}][{ws}]")
        out.append("}")
    return "\n".join(out) + "\n"


_SCHED_OP_RE = re.compile(
    rf"({_IDENT})\s+([RWU])\s+({_IDENT})\.({_IDENT})"
    rf"(?:\s+reads=([A-Za-z0-9_,]*))?(?:\s+writes=([A-Za-z0-9_,]*))?\s*$")
_SCHED_COMMIT_RE = re.compile(rf"({_IDENT})\s+commit\s*$")


def parse_schedule(text: str):
    """Parse a schedule transcript into (transactions, interleaving).

    Line order is the schedule order; each transaction must end with its
    commit and schedule no operation after it.
    """
    ops_by_tx: dict[str, list[Operation]] = {}
    committed: set[str] = set()
    interleaving: list[OpRef] = []
    tx_order: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        m = _SCHED_COMMIT_RE.match(line)
        if m:
            tx = m.group(1)
            if tx in committed:
                raise ParseError(f"transaction {tx!r} commits twice", lineno)
            if tx not in ops_by_tx:
                ops_by_tx[tx] = []
                tx_order.append(tx)
            interleaving.append(OpRef(tx, len(ops_by_tx[tx])))
            ops_by_tx[tx].append(commit())
            committed.add(tx)
            continue
        m = _SCHED_OP_RE.match(line)
        if not m:
            raise ParseError(f"malformed schedule line {line!r}", lineno)
        tx, kind, rel, label, reads, writes = m.groups()
        if tx in committed:
            raise ParseError(f"operation after commit of transaction {tx!r}", lineno)
        rs = frozenset(_attr_list(reads or ""))
        ws = frozenset(_attr_list(writes or ""))
        if kind == "R" and ws:
            raise ParseError("R-operations cannot carry writes=", lineno)
        if kind == "W" and rs:
            raise ParseError("W-operations cannot carry reads=", lineno)
        target = TupleId(rel, label)
        if tx not in ops_by_tx:
            ops_by_tx[tx] = []
            tx_order.append(tx)
        interleaving.append(OpRef(tx, len(ops_by_tx[tx])))
        ops_by_tx[tx].append(Operation(kind, target, rs, ws))
    for tx in tx_order:
        if tx not in committed:
            raise ParseError(f"transaction {tx!r} is missing its commit")
    transactions = [Transaction(tx, tuple(ops_by_tx[tx])) for tx in tx_order]
    return transactions, interleaving


def print_schedule(schedule) -> str:
    """Render a schedule in transcript form (attributes sorted)."""
    lines = []
    for ref in schedule.order:
        if ref.index < 0:
            continue
        op = schedule.op(ref)
        if op.is_commit:
            lines.append(f"{ref.tx} commit")
            continue
        parts = [ref.tx, op.kind, f"{op.target.relation}.{op.target.label}"]
        if op.read_set:
            parts.append("reads=" + ",".join(sorted(op.read_set)))
        if op.write_set:
            parts.append("writes=" + ",".join(sorted(op.write_set)))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
