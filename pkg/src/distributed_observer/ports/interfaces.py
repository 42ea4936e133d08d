"""
Port interfaces (Dependency Inversion).
Implement these in adapters; the application layer depends only on these abstractions.
A different placement algorithm or q-selection rule implements the matching port.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from distributed_observer.domain.models import (
    AgentGain,
    ErrorModel,
    GraphSchedule,
    ObservabilityDecomposition,
    Plant,
    QSelection,
    ScenarioConfig,
    SimTrace,
)


class ISpectrumAssigner(ABC):
    """Output-injection design on each agent's observable quotient."""

    name: str = ""

    @abstractmethod
    def place(self, A_bar: np.ndarray, C_bar: np.ndarray, lam: float, seed: int = 0) -> np.ndarray:
        """Return K_bar with spectral radius of A_bar + K_bar C_bar at most lam."""
        pass

    @abstractmethod
    def design(
        self,
        plant: Plant,
        decomps: Sequence[ObservabilityDecomposition],
        lam: float,
        seed: int = 0,
    ) -> List[AgentGain]:
        """Design and lift gains for every agent, one `place` call per quotient."""
        pass


class IQSelector(ABC):
    """Consensus round count selection."""

    @abstractmethod
    def select(self, model: ErrorModel, schedule: GraphSchedule, lam: float) -> QSelection:
        pass


class IScenarioSource(ABC):
    """Scenario configs and stored gains."""

    @abstractmethod
    def load(self, path: str, overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
        pass

    @abstractmethod
    def load_gains(self, path: str, plant: Plant, decomps: Sequence[ObservabilityDecomposition]) -> List[AgentGain]:
        """Read gains written by a previous synthesis run."""
        pass


class ITraceWriter(ABC):
    """Simulation trace export."""

    @abstractmethod
    def write(self, trace: SimTrace, path: str, include_states: bool = False) -> str:
        """Write the trace; return the output path."""
        pass

    @abstractmethod
    def write_rounds(self, trace: SimTrace, path: str) -> str:
        """Write within-interval consensus errors (one row per event, round and agent)."""
        pass


class IReportWriter(ABC):
    """Structured reports (synthesis artifact, certificates, summaries)."""

    @abstractmethod
    def write(self, record: Dict[str, Any], path: str) -> str:
        """Write the record; return the output path."""
        pass
