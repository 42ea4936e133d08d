"""
Adapters – concrete implementations of ports.
Numerical work is delegated to distributed_observer.core; adapters pick the
algorithm variant and handle file formats.
"""

from distributed_observer.adapters.placement import (
    AckermannPlacementAdapter,
    RobustPlacementAdapter,
    placement_adapter,
)
from distributed_observer.adapters.q_selection import (
    ExplicitQSelector,
    MixedNormQSelector,
    WeightedNormQSelector,
    q_selector,
)
from distributed_observer.adapters.report import JsonReportWriter
from distributed_observer.adapters.scenario import YamlScenarioLoader
from distributed_observer.adapters.trace import CsvTraceWriter
from distributed_observer.config import PLACEMENT


def default_adapters(**overrides):
    """
    Build default adapter instances (placement from DOBS_PLACEMENT).
    Overrides: spectrum_assigner=..., scenario_source=..., etc. for testing or alternative algorithms.
    """
    defaults = {
        "spectrum_assigner": placement_adapter(PLACEMENT),
        "scenario_source": YamlScenarioLoader(),
        "trace_writer": CsvTraceWriter(),
        "report_writer": JsonReportWriter(),
    }
    defaults.update(overrides)
    return defaults


__all__ = [
    "AckermannPlacementAdapter",
    "CsvTraceWriter",
    "ExplicitQSelector",
    "JsonReportWriter",
    "MixedNormQSelector",
    "RobustPlacementAdapter",
    "WeightedNormQSelector",
    "YamlScenarioLoader",
    "default_adapters",
    "placement_adapter",
    "q_selector",
]
