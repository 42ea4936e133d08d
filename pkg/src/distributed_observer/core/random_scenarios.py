"""
Seeded generators for jointly observable plants and switching schedules,
used by the randomized `verify` suite and the tests.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg
import scipy.stats

from distributed_observer.core.network import random_strongly_connected_graph
from distributed_observer.core.plant import joint_observability
from distributed_observer.domain.models import GraphSchedule, Plant
from distributed_observer.errors import InvalidInputError

MAGNITUDES = np.round(np.arange(0.3, 1.21, 0.1), 10)


@dataclass(frozen=True)
class RandomCase:
    name: str
    plant: Plant
    schedule: GraphSchedule
    lam: float
    seed: int


def _modal_blocks(n: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Real 1x1 and rotation 2x2 blocks whose eigenvalue magnitudes are pairwise distinct."""
    sizes: List[int] = []
    while sum(sizes) < n:
        sizes.append(1 if n - sum(sizes) == 1 or rng.random() < 0.5 else 2)
    radii = rng.choice(MAGNITUDES, size=len(sizes), replace=False)
    blocks = []
    for size, r in zip(sizes, radii):
        if size == 1:
            blocks.append(np.array([[r if rng.random() < 0.5 else -r]]))
        else:
            theta = rng.uniform(0.4, 2.6)
            c, s = np.cos(theta), np.sin(theta)
            blocks.append(r * np.array([[c, -s], [s, c]]))
    return blocks


def random_jointly_observable_plant(m: int, n: int, rng: np.random.Generator, max_tries: int = 20) -> Plant:
    """A = U D U' with D block diagonal; agent i sees a random subset of the modal blocks.

    Every block is assigned to at least one agent, so the stacked pair is observable
    while single agents generally are not.
    """
    if m < 2 or n < 1 or n > 2 * len(MAGNITUDES):
        raise InvalidInputError(f"unsupported random plant size m={m}, n={n}")
    for _ in range(max_tries):
        blocks = _modal_blocks(n, rng)
        U = scipy.stats.ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
        A = U @ scipy.linalg.block_diag(*blocks) @ U.T

        offsets = np.concatenate(([0], np.cumsum([b.shape[0] for b in blocks])))
        seen = [set() for _ in range(m)]
        for k in range(len(blocks)):
            seen[int(rng.integers(m))].add(k)
        for i in range(m):
            seen[i] |= {k for k in range(len(blocks)) if rng.random() < 0.3}

        sensors = []
        for i in range(m):
            if not seen[i]:
                sensors.append(np.zeros((1, n)))
                continue
            rows = np.vstack([U[:, offsets[k]:offsets[k + 1]].T for k in sorted(seen[i])])
            s_i = int(rng.integers(1, 3))
            sensors.append(rng.standard_normal((s_i, rows.shape[0])) @ rows)
        plant = Plant(A=A, sensors=tuple(sensors))
        if joint_observability(plant):
            return plant
    raise InvalidInputError(f"could not draw a jointly observable plant in {max_tries} tries")


def random_schedule(m: int, rng: np.random.Generator, n_graphs: int = 3, seed: int = 0) -> GraphSchedule:
    graphs = tuple(random_strongly_connected_graph(m, rng) for _ in range(n_graphs))
    return GraphSchedule(graphs=graphs, mode="random", sequence=(), seed=seed)


def build_random_case(
    seed: int, m: Optional[int] = None, n: Optional[int] = None, lam: Optional[float] = None
) -> RandomCase:
    """One reproducible case; unspecified sizes are drawn from m in 2..5, n in 2..6, lam in {0.6, 0.8, 0.95}."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6)) if m is None else m
    n = int(rng.integers(2, 7)) if n is None else n
    lam = float(rng.choice([0.6, 0.8, 0.95])) if lam is None else lam
    plant = random_jointly_observable_plant(m, n, rng)
    schedule = random_schedule(m, rng, seed=seed)
    return RandomCase(name=f"random_{seed}", plant=plant, schedule=schedule, lam=lam, seed=seed)


def random_cases(count: int, seed: int = 0) -> List[RandomCase]:
    return [build_random_case(seed + k) for k in range(count)]
