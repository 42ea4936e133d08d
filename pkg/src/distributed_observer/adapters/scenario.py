"""
YAML scenario loading (schema_version 1) and synthesis-artifact gain loading.

Scenario files label agents and graph vertices 1..m; everything in memory is 0-based.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from distributed_observer.config import DEFAULT_SEED, OUTPUT_DIR, PLACEMENT
from distributed_observer.core.matrix_core import as_integer, as_matrix, as_real, as_vector
from distributed_observer.core.plant import plant_from_document
from distributed_observer.domain.models import (
    AgentGain,
    Digraph,
    GraphSchedule,
    ObservabilityDecomposition,
    Plant,
    ScenarioConfig,
)
from distributed_observer.errors import InvalidInputError
from distributed_observer.ports.interfaces import IScenarioSource

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def _section(doc: Dict[str, Any], key: str, required: bool = True) -> Dict[str, Any]:
    value = doc.get(key)
    if value is None:
        if required:
            raise InvalidInputError(f"scenario: missing section {key!r}")
        return {}
    if not isinstance(value, dict):
        raise InvalidInputError(f"scenario: section {key!r} must be a mapping")
    return value


def _label(value: Any, m: int, what: str) -> int:
    """1-based label -> 0-based index."""
    if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= m:
        raise InvalidInputError(f"{what}: expected an integer label in 1..{m}, got {value!r}")
    return value - 1


def graph_from_document(entry: Any, m: int, k: int) -> Digraph:
    """A graph entry is 'complete', 'cycle', or a list of [j, i] arcs (j is a neighbor of i)."""
    if entry == "complete":
        return Digraph.complete(m)
    if entry == "cycle":
        return Digraph.cycle(m)
    if isinstance(entry, dict):
        entry = entry.get("arcs")
    if not isinstance(entry, list):
        raise InvalidInputError(f"graph {k + 1}: expected 'complete', 'cycle' or a list of arcs")
    arcs = []
    for arc in entry:
        if not isinstance(arc, (list, tuple)) or len(arc) != 2:
            raise InvalidInputError(f"graph {k + 1}: arc {arc!r} is not a [from, to] pair")
        arcs.append((_label(arc[0], m, f"graph {k + 1}"), _label(arc[1], m, f"graph {k + 1}")))
    # Self-loops are implicit.
    return Digraph.from_arcs(m, arcs, add_self_loops=True)


def schedule_from_document(net: Dict[str, Any], m: int) -> GraphSchedule:
    entries = net.get("graphs")
    if not isinstance(entries, list) or not entries:
        raise InvalidInputError("network.graphs: expected a non-empty list")
    graphs = tuple(graph_from_document(e, m, k) for k, e in enumerate(entries))
    signal = net.get("signal") or {}
    if not isinstance(signal, dict):
        raise InvalidInputError("network.signal must be a mapping")
    mode = signal.get("mode", "periodic")
    n_graphs = len(graphs)
    raw_sequence = signal.get("sequence", list(range(1, n_graphs + 1)) if mode != "random" else [])
    if not isinstance(raw_sequence, list):
        raise InvalidInputError("network.signal.sequence must be a list of graph labels")
    sequence = tuple(_label(s, n_graphs, "network.signal.sequence") for s in raw_sequence)
    default = _label(signal.get("default", 1), n_graphs, "network.signal.default")
    return GraphSchedule(
        graphs=graphs,
        mode=mode,
        sequence=sequence,
        default=default,
        seed=as_integer(signal.get("seed", 0), "network.signal.seed"),
        period=as_real(net.get("period", 1.0), "network.period"),
    )


def schedule_to_document(schedule: GraphSchedule) -> Dict[str, Any]:
    return {
        "period": schedule.period,
        "graphs": [[[j + 1, i + 1] for j, i in g.sorted_arcs() if j != i] for g in schedule.graphs],
        "signal": {
            "mode": schedule.mode,
            "sequence": [s + 1 for s in schedule.sequence],
            "default": schedule.default + 1,
            "seed": schedule.seed,
        },
    }


class YamlScenarioLoader(IScenarioSource):
    """Load scenario configs from YAML and gains from synthesis JSON artifacts."""

    def load(self, path: str, overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
        p = Path(path)
        if not p.is_file():
            raise InvalidInputError(f"scenario file not found: {path}")
        try:
            doc = yaml.safe_load(p.read_text(encoding="utf-8"))
        except yaml.YAMLError as e:
            raise InvalidInputError(f"scenario {path}: invalid YAML ({e})") from e
        return self.from_document(doc, default_name=p.stem, overrides=overrides)

    def from_document(
        self,
        doc: Any,
        default_name: str = "scenario",
        overrides: Optional[Dict[str, Any]] = None,
    ) -> ScenarioConfig:
        if not isinstance(doc, dict):
            raise InvalidInputError("scenario: top level must be a mapping")
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise InvalidInputError(
                f"scenario: unsupported schema_version {doc.get('schema_version')!r} (expected {SCHEMA_VERSION})"
            )
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

        plant = plant_from_document(_section(doc, "plant"))
        schedule = schedule_from_document(_section(doc, "network"), plant.m)
        observer = _section(doc, "observer")
        sim = _section(doc, "simulation", required=False)

        if "lambda" not in observer:
            raise InvalidInputError("observer.lambda is required")
        q = observer.get("q")
        x0 = sim.get("x0")
        x_hat0 = sim.get("x_hat0")
        config = ScenarioConfig(
            name=str(doc.get("name", default_name)),
            plant=plant,
            schedule=schedule,
            lam=as_real(observer["lambda"], "observer.lambda"),
            q_method=str(observer.get("q_method", "weighted")),
            q=as_integer(q, "observer.q", minimum=1) if q is not None else None,
            placement=str(observer.get("placement", PLACEMENT)),
            tau_max=as_integer(sim.get("tau_max", 50), "simulation.tau_max", minimum=0),
            x0=tuple(as_vector(x0, "simulation.x0")) if x0 is not None else None,
            x_hat0=tuple(map(tuple, as_matrix(x_hat0, "simulation.x_hat0"))) if x_hat0 is not None else None,
            seed=as_integer(overrides.get("seed", sim.get("seed", DEFAULT_SEED)), "simulation.seed"),
            verbose=bool(overrides.get("verbose", False)),
            output_dir=str(overrides.get("output_dir", OUTPUT_DIR)),
        )
        logger.debug("loaded scenario %s: n=%d m=%d graphs=%d", config.name, plant.n, plant.m, len(schedule.graphs))
        return config

    def load_gains(self, path: str, plant: Plant, decomps: Sequence[ObservabilityDecomposition]) -> List[AgentGain]:
        p = Path(path)
        if not p.is_file():
            raise InvalidInputError(f"gains file not found: {path}")
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
            entries = doc["gains"]
        except (ValueError, KeyError, TypeError) as e:
            raise InvalidInputError(f"gains file {path}: not a synthesis artifact ({e})") from e
        if not isinstance(entries, list) or len(entries) != plant.m:
            raise InvalidInputError(f"gains file {path}: expected {plant.m} agent entries")

        gains = []
        for d, entry in zip(decomps, entries):
            C = plant.sensors[d.agent]
            expected = {
                "K_bar": (d.Q.shape[0], C.shape[0]),
                "K": (plant.n, C.shape[0]),
                "A_restr": (d.n_i, d.n_i),
            }
            mats = {}
            for key, shape in expected.items():
                try:
                    mats[key] = np.array(entry[key], dtype=float).reshape(entry.get(f"{key}_shape", shape))
                except (KeyError, ValueError, TypeError) as e:
                    raise InvalidInputError(f"gains file {path}: agent {d.agent + 1} {key} unreadable ({e})") from e
                if mats[key].shape != shape:
                    raise InvalidInputError(
                        f"gains file {path}: agent {d.agent + 1} {key} has shape {mats[key].shape}, expected {shape}"
                    )
            gains.append(AgentGain(agent=d.agent, **mats))
        return gains
