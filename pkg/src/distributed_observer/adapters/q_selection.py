"""q-selection adapters wrapping the weighted two-norm, mixed-norm and fixed-q rules."""

from typing import Optional

from distributed_observer.core.observer_design import choose_q_mixed, choose_q_weighted, explicit_q
from distributed_observer.domain.models import ErrorModel, GraphSchedule, QSelection
from distributed_observer.errors import InvalidInputError
from distributed_observer.ports.interfaces import IQSelector


class WeightedNormQSelector(IQSelector):
    def select(self, model: ErrorModel, schedule: GraphSchedule, lam: float) -> QSelection:
        return choose_q_weighted(model, schedule, lam)


class MixedNormQSelector(IQSelector):
    def select(self, model: ErrorModel, schedule: GraphSchedule, lam: float) -> QSelection:
        return choose_q_mixed(model, schedule, lam)


class ExplicitQSelector(IQSelector):
    """Uses a fixed q; lambda is only used by the caller to flag an unmet target."""

    def __init__(self, q: int):
        if q < 1:
            raise InvalidInputError("explicit q must be positive")
        self.q = q

    def select(self, model: ErrorModel, schedule: GraphSchedule, lam: float) -> QSelection:
        return explicit_q(model, schedule, self.q)


def q_selector(method: str, q: Optional[int] = None) -> IQSelector:
    if method == "weighted":
        return WeightedNormQSelector()
    if method == "mixed":
        return MixedNormQSelector()
    if method == "explicit":
        return ExplicitQSelector(q if q is not None else 0)
    raise InvalidInputError(f"Unknown q method: {method}")
