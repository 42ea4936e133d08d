"""Spectrum assignment adapters: robust (Tits-Yang) and Ackermann."""

from typing import List, Sequence

import numpy as np

from distributed_observer.core.observer_design import design_gains, place_spectrum
from distributed_observer.domain.models import AgentGain, ObservabilityDecomposition, Plant
from distributed_observer.errors import InvalidInputError
from distributed_observer.ports.interfaces import ISpectrumAssigner


class _PlacementAdapter(ISpectrumAssigner):
    name = ""

    def place(self, A_bar: np.ndarray, C_bar: np.ndarray, lam: float, seed: int = 0) -> np.ndarray:
        return place_spectrum(A_bar, C_bar, lam, method=self.name, seed=seed)

    def design(
        self,
        plant: Plant,
        decomps: Sequence[ObservabilityDecomposition],
        lam: float,
        seed: int = 0,
    ) -> List[AgentGain]:
        return design_gains(plant, decomps, lam, method=self.name, seed=seed, placer=self.place)


class RobustPlacementAdapter(_PlacementAdapter):
    """scipy.signal.place_poles on the dual pair; handles multi-output quotients."""

    name = "robust"


class AckermannPlacementAdapter(_PlacementAdapter):
    """Characteristic polynomial matching; multi-output pairs go through a seeded output combination."""

    name = "ackermann"


def placement_adapter(name: str) -> ISpectrumAssigner:
    adapters = {"robust": RobustPlacementAdapter, "ackermann": AckermannPlacementAdapter}
    if name not in adapters:
        raise InvalidInputError(f"Unknown placement method: {name}")
    return adapters[name]()
