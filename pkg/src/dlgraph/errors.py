"""Exception types and the step budget shared by the search routines."""

from __future__ import annotations


class DLGraphError(Exception):
    """Base class for every error raised by this package."""


class GraphError(DLGraphError, ValueError):
    """A graph is malformed or violates an operation's precondition."""


class TaxonomyError(DLGraphError, ValueError):
    """A label taxonomy is malformed or a label is unknown to it."""


class RuleError(DLGraphError, ValueError):
    """A rewrite rule was invoked with bindings that violate its conditions."""

    def __init__(self, rule: str, clause: str):
        super().__init__(f"{rule}: condition violated: {clause}")
        self.rule = rule
        self.clause = clause


class WitnessError(DLGraphError, ValueError):
    """A subsumption witness fails validation."""


class PreconditionError(DLGraphError, ValueError):
    """An operation was called on inputs outside its domain."""


class DocumentError(DLGraphError, ValueError):
    """A serialized document could not be parsed."""


class DatasetError(DLGraphError, ValueError):
    """A dataset manifest or training set is unusable."""


class BudgetExceeded(DLGraphError):
    """A search ran out of its step budget before finishing."""

    def __init__(self, steps: int, partial=None):
        super().__init__(f"step budget of {steps} exhausted")
        self.steps = steps
        self.partial = partial


class Budget:
    """Counts search steps and raises `BudgetExceeded` past a limit.

    A budget of ``None`` never runs out. One `Budget` may be threaded through
    several nested searches so they share the same allowance.
    """

    __slots__ = ("limit", "used")

    def __init__(self, limit: int | None = None):
        if limit is not None and limit < 0:
            raise ValueError("budget must be nonnegative")
        self.limit = limit
        self.used = 0

    def tick(self, n: int = 1) -> None:
        self.used += n
        if self.limit is not None and self.used > self.limit:
            raise BudgetExceeded(self.limit)

    @classmethod
    def coerce(cls, budget: "Budget | int | None") -> "Budget":
        if isinstance(budget, Budget):
            return budget
        return cls(budget)
