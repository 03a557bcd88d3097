import math
from dataclasses import dataclass, fields, replace

from core.exceptions import ConfigError
from uplift_rank.conf import get_defaults


class ConstraintKind:
    PERCENTAGE = "percentage"
    BUDGET = "budget"

    CHOICES = [
        (PERCENTAGE, "Top P fraction of users"),
        (BUDGET, "Cumulative cost at most B"),
    ]

    VALUES = (PERCENTAGE, BUDGET)


class BudgetOrder:
    PROBABILITY = "probability"
    COST = "cost"

    VALUES = (PROBABILITY, COST)


@dataclass(frozen=True)
class Constraint:
    """Selection constraint enforced by the barrier: a fraction P or a cost budget B."""

    kind: str = ConstraintKind.PERCENTAGE
    P: float = 0.4
    B: float = None
    budget_order: str = BudgetOrder.PROBABILITY

    def __post_init__(self):
        if self.kind not in ConstraintKind.VALUES:
            raise ConfigError(f"Unknown constraint kind '{self.kind}'")
        if self.kind == ConstraintKind.PERCENTAGE and not 0.0 < self.P <= 1.0:
            raise ConfigError(f"Percentage P must be in (0, 1], got {self.P}")
        if self.kind == ConstraintKind.BUDGET and (self.B is None or self.B <= 0):
            raise ConfigError(f"Budget B must be positive, got {self.B}")
        if self.budget_order not in BudgetOrder.VALUES:
            raise ConfigError(f"budget_order must be one of {list(BudgetOrder.VALUES)}")

    @classmethod
    def percentage(cls, P=None):
        return cls(kind=ConstraintKind.PERCENTAGE, P=get_defaults()['PERCENTAGE'] if P is None else P)

    @classmethod
    def budget(cls, B, order=BudgetOrder.PROBABILITY):
        return cls(kind=ConstraintKind.BUDGET, B=B, budget_order=order)

    def scaled(self, fraction):
        """The same constraint for a batch holding `fraction` of the users."""
        if self.kind == ConstraintKind.BUDGET:
            return replace(self, B=self.B * fraction)
        return self

    def to_document(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class AnnealSchedule:
    """Temperature T0 + dT * floor(step / every), capped at Tmax."""

    T0: float = 0.5
    dT: float = 0.1
    every: int = 10
    Tmax: float = 50.0

    def __post_init__(self):
        if self.T0 <= 0:
            raise ConfigError(f"T0 must be positive, got {self.T0}")
        if self.dT < 0:
            raise ConfigError(f"dT must be >= 0, got {self.dT}")
        if self.every < 1:
            raise ConfigError(f"every must be >= 1, got {self.every}")
        if self.Tmax < self.T0:
            raise ConfigError("Tmax must be at least T0")

    @classmethod
    def from_defaults(cls, **overrides):
        values = dict(get_defaults()['ANNEAL'])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def temperature(self, step):
        return min(self.Tmax, self.T0 + self.dT * math.floor(step / self.every))

    def to_document(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}
