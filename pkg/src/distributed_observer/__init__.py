"""
Distributed Observer – synthesis, certification and simulation of distributed
state estimators for jointly observable linear plants on switching networks.

Use from project root:
  from distributed_observer.application.pipeline import ObserverPipeline
  from distributed_observer.adapters import default_adapters
  pipeline = ObserverPipeline(**default_adapters())
  result = pipeline.synthesize(scenario)

Alternative placement or q-selection strategies implement the ports and are injected.
"""

__version__ = "0.1.0"
