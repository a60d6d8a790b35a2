"""Default / local / global evaluation surfaces and fitness-grid sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import Environment, Morphology
from .generalist import GeneralistArchive
from .net import Controller
from .schedule import MorphologyGrid
from .seeding import derive_seed

CARTPOLE_GLOBAL = MorphologyGrid((0.1, 0.1), (0.1, 0.1), (18, 18))
LOCAL_DISTANCE = 6


@dataclass
class FitnessGrid:
    """Mean episode reward per lattice cell, ``rewards[i, j]`` for cell (i, j)."""

    grid: MorphologyGrid
    rewards: np.ndarray
    n_eval: int

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.rewards.shape != self.grid.shape:
            raise ValueError("reward matrix does not match grid shape")
        if not np.all(np.isfinite(self.rewards)):
            raise ValueError("non-finite rewards in fitness grid")

    @property
    def fitness(self) -> np.ndarray:
        return -self.rewards

    def at(self, ordinal: int) -> float:
        return float(self.rewards[self.grid.position(ordinal)])


@dataclass(frozen=True)
class TestSets:
    default_cell: int
    training: tuple[int, ...]
    local: tuple[int, ...]
    global_grid: MorphologyGrid


def lattice_ordinal(grid: MorphologyGrid, m: Morphology, tol: float = 1e-6) -> int:
    """Ordinal of ``m`` in ``grid``; raises if it is not a lattice point."""
    fi = (m.x - grid.origin[0]) / grid.steps[0]
    fj = (m.y - grid.origin[1]) / grid.steps[1]
    i, j = int(round(fi)), int(round(fj))
    if abs(fi - i) > tol or abs(fj - j) > tol or not (
            0 <= i < grid.shape[0] and 0 <= j < grid.shape[1]):
        raise ValueError(f"morphology ({m.x}, {m.y}) is not on the lattice")
    return grid.ordinal(i, j)


def build_test_sets(training: MorphologyGrid, global_grid: MorphologyGrid,
                    default: Morphology, distance: int = LOCAL_DISTANCE) -> TestSets:
    """Local set: lattice cells within Chebyshev distance ``distance`` of any training cell."""
    train = sorted({lattice_ordinal(global_grid, c) for c in training.cells})
    near = set()
    for o in train:
        ci, cj = global_grid.position(o)
        for i in range(max(0, ci - distance), min(global_grid.shape[0], ci + distance + 1)):
            for j in range(max(0, cj - distance), min(global_grid.shape[1], cj + distance + 1)):
                near.add(global_grid.ordinal(i, j))
    return TestSets(lattice_ordinal(global_grid, default), tuple(train), tuple(sorted(near)),
                    global_grid)


def sweep_seeds(seed: int, grid: MorphologyGrid, n_eval: int) -> np.ndarray:
    return np.array([[derive_seed(seed, "sweep", o, k) for k in range(n_eval)]
                     for o in range(grid.size)], dtype=np.uint64)


def sweep(env: Environment, policy: Controller | GeneralistArchive, grid: MorphologyGrid,
          n_eval: int = 3, seed: int = 0, episode_seeds=None) -> FitnessGrid:
    """Per-cell mean reward over ``n_eval`` seeded episodes.

    An archive routes each cell through :meth:`GeneralistArchive.dispatch`.
    ``episode_seeds`` (shape ``(grid.size, n_eval)``) overrides the derived seeds.
    """
    if n_eval < 1:
        raise ValueError("n_eval must be >= 1")
    seeds = sweep_seeds(seed, grid, n_eval) if episode_seeds is None else np.asarray(episode_seeds)
    cells = grid.cells
    if isinstance(policy, GeneralistArchive):
        topology = policy.topology
        params = np.stack([e.params for e in policy.entries])
        index = [policy.dispatch_index(c) for c in cells]
    else:
        topology = policy.topology
        params = policy.params[None, :]
        index = [0] * len(cells)
    p_index = np.repeat(np.asarray(index), n_eval)
    morphs = [c for c in cells for _ in range(n_eval)]
    flat_seeds = [int(s) for s in seeds.reshape(-1)]
    rewards = env.rollouts(topology, params, p_index, morphs, flat_seeds)
    means = rewards.reshape(grid.size, n_eval).mean(axis=1)
    out = np.empty(grid.shape)
    for o in range(grid.size):
        out[grid.position(o)] = means[o]
    return FitnessGrid(grid, out, n_eval)


def sufficiency_count(fg: FitnessGrid, threshold: float, cells=None) -> tuple[int, float]:
    ords = range(fg.grid.size) if cells is None else list(cells)
    vals = np.array([fg.at(o) for o in ords])
    n = int(np.sum(vals >= threshold))
    return n, n / len(vals) if len(vals) else 0.0


def summarize_grid(fg: FitnessGrid, sets: TestSets, threshold: float) -> dict:
    fit = {o: -fg.at(o) for o in range(fg.grid.size)}
    count, frac = sufficiency_count(fg, threshold)
    return {
        "default_fitness": fit[sets.default_cell],
        "local_mean": float(np.mean([fit[o] for o in sets.local])),
        "global_mean": float(np.mean(list(fit.values()))),
        "sufficiency": count,
        "sufficiency_fraction": frac,
    }


def summarize(env: Environment, policy, sets: TestSets, n_eval: int = 3, seed: int = 0) -> dict:
    """The three mean-fitness metrics plus global sufficiency, from one global sweep."""
    fg = sweep(env, policy, sets.global_grid, n_eval, seed)
    return summarize_grid(fg, sets, env.spec.sufficiency_threshold)
