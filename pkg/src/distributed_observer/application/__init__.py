"""Application layer – synthesis, simulation and verification use cases."""

from distributed_observer.application.pipeline import ObserverPipeline

__all__ = ["ObserverPipeline"]
