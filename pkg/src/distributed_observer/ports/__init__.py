"""Ports (interfaces) – depend on these, implement in adapters."""

from distributed_observer.ports.interfaces import (
    IQSelector,
    IReportWriter,
    IScenarioSource,
    ISpectrumAssigner,
    ITraceWriter,
)

__all__ = [
    "IQSelector",
    "IReportWriter",
    "IScenarioSource",
    "ISpectrumAssigner",
    "ITraceWriter",
]
