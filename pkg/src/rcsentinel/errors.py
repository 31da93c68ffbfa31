"""Exception types shared across the analyzer."""


class RcSentinelError(Exception):
    """Base class for all rc-sentinel errors."""


class ParseError(RcSentinelError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class InstantiationError(RcSentinelError):
    """A variable assignment does not cover or does not type-match a template."""


class PromotionError(RcSentinelError):
    """A promotion selection names an operation that is not an R-operation."""


class InconsistentInterleaving(RcSentinelError):
    """An interleaving violates some transaction's internal order."""


class GuardExceeded(RcSentinelError):
    """An exhaustive search would exceed its configured size guard."""


class SplitConditionError(RcSentinelError):
    """A split witness violates one of the three schedule-shape clauses."""

    def __init__(self, clause, message):
        self.clause = clause
        super().__init__(message)


class InternalInvariantError(RcSentinelError):
    """A materialized counterexample failed verification; this is a bug trap."""
