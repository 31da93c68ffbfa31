"""Core workload model.

Relations have named attributes with key flags; key attributes are the
read-only part of a tuple and may never appear in an update's write set.
Operations carry explicit attribute-level read and write sets.  Transactions
operate on concrete tuples, templates on typed variables; instantiating a
template with a variable assignment yields a transaction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional, Union

from .errors import InstantiationError

# Operation kinds
R = "R"
W = "W"
U = "U"
COMMIT = "C"

# Conflict kinds
WW = "ww"
WR = "wr"
RW = "rw"


@dataclass(frozen=True)
class Relation:
    name: str
    attributes: tuple[tuple[str, bool], ...]  # (attribute name, is_key)

    @property
    def attr_names(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.attributes)

    @property
    def attr_set(self) -> frozenset[str]:
        return frozenset(a for a, _ in self.attributes)

    @property
    def keys(self) -> frozenset[str]:
        return frozenset(a for a, k in self.attributes if k)


@dataclass(frozen=True)
class Schema:
    relations: tuple[Relation, ...]

    def relation(self, name: str) -> Optional[Relation]:
        for rel in self.relations:
            if rel.name == name:
                return rel
        return None

    def attrs(self, name: str) -> frozenset[str]:
        rel = self.relation(name)
        return rel.attr_set if rel is not None else frozenset()


@dataclass(frozen=True)
class TupleId:
    """An abstract tuple identity; tuples of different relations are distinct."""

    relation: str
    label: str

    def __str__(self):
        return f"{self.relation}.{self.label}"


@dataclass(frozen=True)
class Variable:
    """A typed template variable; instantiations must stay within its relation."""

    name: str
    relation: str

    def __str__(self):
        return f"{self.name}:{self.relation}"


Target = Union[TupleId, Variable]


@dataclass(frozen=True)
class Operation:
    kind: str  # R, W, U or C
    target: Optional[Target]  # None exactly for commits
    read_set: frozenset[str] = frozenset()
    write_set: frozenset[str] = frozenset()

    @property
    def is_commit(self) -> bool:
        return self.kind == COMMIT

    @property
    def is_read(self) -> bool:
        # U-operations read before they write
        return self.kind in (R, U)

    @property
    def is_write(self) -> bool:
        return self.kind in (W, U)


def read(target: Target, attrs) -> Operation:
    return Operation(R, target, read_set=frozenset(attrs))


def write(target: Target, attrs) -> Operation:
    return Operation(W, target, write_set=frozenset(attrs))


def update(target: Target, read_attrs, write_attrs) -> Operation:
    return Operation(U, target, frozenset(read_attrs), frozenset(write_attrs))


def commit() -> Operation:
    return Operation(COMMIT, None)


@dataclass(frozen=True)
class Transaction:
    """A sequence of operations over tuples, ending with a single commit."""

    id: str
    ops: tuple[Operation, ...]

    def non_commit_ops(self):
        return tuple(op for op in self.ops if not op.is_commit)


@dataclass(frozen=True)
class Template:
    """A transaction over typed variables."""

    name: str
    ops: tuple[Operation, ...]

    def variables(self) -> tuple[Variable, ...]:
        seen = []
        for op in self.ops:
            if isinstance(op.target, Variable) and op.target not in seen:
                seen.append(op.target)
        return tuple(seen)


@dataclass(frozen=True)
class Workload:
    schema: Schema
    templates: tuple[Template, ...]
    # Set by coarsen_to_tuple_level: write sets then cover key attributes by
    # construction, so the key-write ban on updates is suspended.
    tuple_level: bool = False

    def template(self, name: str) -> Optional[Template]:
        for t in self.templates:
            if t.name == name:
                return t
        return None

    def restrict(self, names) -> "Workload":
        keep = set(names)
        return replace(self, templates=tuple(t for t in self.templates if t.name in keep))


VariableAssignment = Mapping[Variable, TupleId]


def _set_kinds(o1: Operation, o2: Operation) -> frozenset[str]:
    kinds = set()
    if o1.write_set & o2.write_set:
        kinds.add(WW)
    if o1.write_set & o2.read_set:
        kinds.add(WR)
    if o1.read_set & o2.write_set:
        kinds.add(RW)
    return frozenset(kinds)


def ops_conflict(o1: Operation, o2: Operation) -> frozenset[str]:
    """Directed conflict kinds of o1 with o2 (both over tuples).

    ww: the write sets intersect; wr: o1 writes something o2 reads;
    rw: o1 reads something o2 writes.  Commits never conflict, and
    operations on different tuples never conflict.
    """
    if o1.is_commit or o2.is_commit:
        return frozenset()
    if not isinstance(o1.target, TupleId) or not isinstance(o2.target, TupleId):
        raise TypeError("ops_conflict expects operations over tuples")
    if o1.target != o2.target:
        return frozenset()
    return _set_kinds(o1, o2)


def potentially_conflicting(o1: Operation, o2: Operation) -> frozenset[str]:
    """Template-level analogue of ops_conflict for operations over variables.

    Non-empty only if both variables range over the same relation; the kinds
    are computed from the same read/write set intersections.  A non-empty
    result means any instantiation mapping both variables to one tuple
    produces a real conflict.
    """
    if o1.is_commit or o2.is_commit:
        return frozenset()
    if not isinstance(o1.target, Variable) or not isinstance(o2.target, Variable):
        raise TypeError("potentially_conflicting expects operations over variables")
    if o1.target.relation != o2.target.relation:
        return frozenset()
    return _set_kinds(o1, o2)


@dataclass(frozen=True)
class Diagnostic:
    template: Optional[str]
    op_index: Optional[int]
    rule: str
    message: str

    def __str__(self):
        where = ""
        if self.template is not None:
            where = f"{self.template}"
            if self.op_index is not None:
                where += f"[{self.op_index}]"
            where += ": "
        return f"{where}{self.message}"


def validate_workload(workload: Workload) -> list[Diagnostic]:
    """Check every model invariant; an empty list means the workload is valid.

    Never raises: callers must not run analyses when diagnostics are present.
    """
    diags = []
    schema = workload.schema

    seen_rels = set()
    for rel in schema.relations:
        if rel.name in seen_rels:
            diags.append(Diagnostic(None, None, "duplicate-relation",
                                    f"duplicate relation name {rel.name!r}"))
        seen_rels.add(rel.name)
        if not rel.attributes:
            diags.append(Diagnostic(None, None, "empty-relation",
                                    f"relation {rel.name!r} has no attributes"))
        seen_attrs = set()
        for attr, _ in rel.attributes:
            if attr in seen_attrs:
                diags.append(Diagnostic(None, None, "duplicate-attribute",
                                        f"duplicate attribute {attr!r} in relation {rel.name!r}"))
            seen_attrs.add(attr)

    seen_templates = set()
    for tmpl in workload.templates:
        if tmpl.name in seen_templates:
            diags.append(Diagnostic(tmpl.name, None, "duplicate-template",
                                    f"duplicate template name {tmpl.name!r}"))
        seen_templates.add(tmpl.name)
        diags.extend(_validate_template(tmpl, schema, workload.tuple_level))
    return diags


def _validate_template(tmpl: Template, schema: Schema, tuple_level: bool) -> list[Diagnostic]:
    diags = []
    if not tmpl.ops or not tmpl.ops[-1].is_commit:
        diags.append(Diagnostic(tmpl.name, None, "missing-commit",
                                "template must end with a commit"))
    for i, op in enumerate(tmpl.ops):
        if op.is_commit:
            if i != len(tmpl.ops) - 1:
                diags.append(Diagnostic(tmpl.name, i, "misplaced-commit",
                                        "commit must be the last operation"))
            if op.read_set or op.write_set:
                diags.append(Diagnostic(tmpl.name, i, "commit-attribute-sets",
                                        "commit carries no attribute sets"))
            continue
        if not isinstance(op.target, Variable):
            diags.append(Diagnostic(tmpl.name, i, "variable-target-expected",
                                    "template operations must target variables"))
            continue
        var = op.target
        rel = schema.relation(var.relation)
        if rel is None:
            diags.append(Diagnostic(tmpl.name, i, "unknown-relation",
                                    f"variable {var.name!r} uses unknown relation {var.relation!r}"))
            continue
        if op.kind == R and op.write_set:
            diags.append(Diagnostic(tmpl.name, i, "read-op-write-set",
                                    "R-operation must have an empty write set"))
        if op.kind == W and op.read_set:
            diags.append(Diagnostic(tmpl.name, i, "write-op-read-set",
                                    "W-operation must have an empty read set"))
        bad = (op.read_set | op.write_set) - rel.attr_set
        if bad:
            diags.append(Diagnostic(tmpl.name, i, "attribute-not-in-relation",
                                    f"attributes {sorted(bad)} not in relation {rel.name!r}"))
        if op.kind == U and not tuple_level:
            key_writes = op.write_set & rel.keys
            if key_writes:
                diags.append(Diagnostic(tmpl.name, i, "key-write-in-update",
                                        f"key attribute in update write set: {sorted(key_writes)}"))
    # every use of one variable name must agree on its relation
    rel_by_name: dict[str, str] = {}
    for i, op in enumerate(tmpl.ops):
        if isinstance(op.target, Variable):
            prev = rel_by_name.get(op.target.name)
            if prev is not None and prev != op.target.relation:
                diags.append(Diagnostic(tmpl.name, i, "inconsistent-variable-type",
                                        f"inconsistent variable type for {op.target.name!r}: "
                                        f"{prev!r} vs {op.target.relation!r}"))
            rel_by_name.setdefault(op.target.name, op.target.relation)
    return diags


def instantiate(template: Template, assignment: VariableAssignment, tx_id: str) -> Transaction:
    """Replace every variable by its assigned tuple, keeping sequence and sets."""
    ops = []
    for op in template.ops:
        if op.is_commit:
            ops.append(op)
            continue
        var = op.target
        if var not in assignment:
            raise InstantiationError(f"assignment misses variable {var} of template {template.name!r}")
        tup = assignment[var]
        if tup.relation != var.relation:
            raise InstantiationError(
                f"type mismatch: variable {var} assigned tuple of relation {tup.relation!r}")
        ops.append(replace(op, target=tup))
    return Transaction(tx_id, tuple(ops))


def coarsen_to_tuple_level(workload: Workload) -> Workload:
    """Widen every read set and every write set to the full attribute set.

    R write sets and W read sets stay empty.  The result is flagged so that
    validation accepts key attributes inside update write sets.
    """
    templates = []
    for tmpl in workload.templates:
        ops = []
        for op in tmpl.ops:
            if op.is_commit:
                ops.append(op)
                continue
            full = workload.schema.attrs(op.target.relation)
            rs = full if op.is_read else frozenset()
            ws = full if op.is_write else frozenset()
            ops.append(replace(op, read_set=rs, write_set=ws))
        templates.append(Template(tmpl.name, tuple(ops)))
    return Workload(workload.schema, tuple(templates), tuple_level=True)


def split_updates(workload: Workload) -> Workload:
    """Rewrite each U-operation into a read immediately followed by a write."""
    templates = []
    for tmpl in workload.templates:
        ops = []
        for op in tmpl.ops:
            if op.kind == U:
                ops.append(Operation(R, op.target, read_set=op.read_set))
                ops.append(Operation(W, op.target, write_set=op.write_set))
            else:
                ops.append(op)
        templates.append(Template(tmpl.name, tuple(ops)))
    return Workload(workload.schema, tuple(templates), tuple_level=workload.tuple_level)
