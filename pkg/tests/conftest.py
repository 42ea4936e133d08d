"""Shared fixtures: the two-agent diag(2, 3) plant and a three-agent switching ring."""

from pathlib import Path

import numpy as np
import pytest
import yaml

from distributed_observer.adapters import default_adapters
from distributed_observer.application.pipeline import ObserverPipeline
from distributed_observer.core.observer_design import build_error_model, design_gains
from distributed_observer.core.plant import decompose_all
from distributed_observer.domain.models import Digraph, GraphSchedule, Plant

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def diag_plant():
    """A = diag(2, 3); agent 1 sees the first mode, agent 2 the second."""
    return Plant(A=np.diag([2.0, 3.0]), sensors=(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])))


@pytest.fixture
def complete_two():
    return GraphSchedule(graphs=(Digraph.complete(2),))


@pytest.fixture
def diag_design(diag_plant, complete_two):
    decomps = decompose_all(diag_plant)
    gains = design_gains(diag_plant, decomps, 0.8)
    model = build_error_model(diag_plant, decomps, gains, complete_two)
    return decomps, gains, model


@pytest.fixture
def ring_plant():
    A = np.array([[0.9, -0.3, 0.0], [0.3, 0.9, 0.0], [0.0, 0.0, 1.1]])
    sensors = (np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 0.0, 1.0]]), np.array([[0.0, 1.0, 0.0]]))
    return Plant(A=A, sensors=sensors)


@pytest.fixture
def ring_schedule():
    forward = Digraph.from_arcs(3, [(0, 1), (1, 2), (2, 0)])
    backward = Digraph.from_arcs(3, [(1, 0), (2, 1), (0, 2)])
    return GraphSchedule(graphs=(forward, backward), mode="periodic", sequence=(0, 1))


@pytest.fixture
def ring_design(ring_plant, ring_schedule):
    decomps = decompose_all(ring_plant)
    gains = design_gains(ring_plant, decomps, 0.8)
    model = build_error_model(ring_plant, decomps, gains, ring_schedule)
    return decomps, gains, model


@pytest.fixture
def pipeline():
    return ObserverPipeline(**default_adapters())


@pytest.fixture
def scenario_doc():
    """The two-agent scenario as a YAML document; tests tweak it before writing."""
    return yaml.safe_load((SCENARIOS / "two_agent_diag.yaml").read_text(encoding="utf-8"))


@pytest.fixture
def write_scenario(tmp_path):
    def _write(doc, name="scenario.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(doc), encoding="utf-8")
        return str(path)

    return _write
