"""Domain models and value objects."""

from distributed_observer.domain.models import (
    AgentGain,
    AgentState,
    CertificateRow,
    Digraph,
    ErrorModel,
    FlockingMatrix,
    GraphSchedule,
    ObservabilityDecomposition,
    Plant,
    QSelection,
    ScenarioConfig,
    SimTrace,
)

__all__ = [
    "AgentGain",
    "AgentState",
    "CertificateRow",
    "Digraph",
    "ErrorModel",
    "FlockingMatrix",
    "GraphSchedule",
    "ObservabilityDecomposition",
    "Plant",
    "QSelection",
    "ScenarioConfig",
    "SimTrace",
]
