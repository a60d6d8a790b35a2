"""Exponential natural evolution strategies (xNES), minimization convention.

The search distribution is N(mean, sigma^2 B B^T) with det(B) = 1. ``ask`` and
``tell`` are pure functions over :class:`SearchState` so a run can be
checkpointed between any two generations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


def population_size(d: int) -> int:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return 4 + int(math.floor(3.0 * math.log(d)))


def learning_rates(d: int) -> tuple[float, float, float]:
    """(eta_mean, eta_sigma, eta_shape) with the usual xNES defaults."""
    eta = (9.0 + 3.0 * math.log(d)) / (5.0 * d * math.sqrt(d))
    return 1.0, eta, eta


def utilities(n: int) -> np.ndarray:
    """Rank utilities, index 0 is the best rank. Sums to zero, non-increasing."""
    ranks = np.arange(1, n + 1, dtype=np.float64)
    raw = np.maximum(0.0, math.log(n / 2.0 + 1.0) - np.log(ranks))
    return raw / raw.sum() - 1.0 / n


def expm_sym(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a symmetric matrix through its eigendecomposition."""
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(a)
    return (v * np.exp(w)) @ v.T


@dataclass(frozen=True)
class SearchState:
    mean: np.ndarray
    sigma: float
    shape: np.ndarray
    seed: int
    generation: int = 0
    evaluations: int = 0
    popsize: int = 0

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64)
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise ValueError("mean must be a finite 1-D vector")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        shape = np.array(self.shape, dtype=np.float64)
        d = mean.shape[0]
        if shape.shape != (d, d):
            raise ValueError(f"shape matrix must be {d}x{d}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.popsize == 0:
            object.__setattr__(self, "popsize", population_size(d))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def initial(cls, mean, sigma: float, seed: int, popsize: int | None = None) -> SearchState:
        mean = np.asarray(mean, dtype=np.float64)
        return cls(mean=mean, sigma=sigma, shape=np.eye(mean.shape[0]), seed=int(seed),
                   popsize=popsize or 0)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "sigma": self.sigma,
            "shape": self.shape.tolist(),
            "seed": self.seed,
            "generation": self.generation,
            "evaluations": self.evaluations,
            "popsize": self.popsize,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SearchState:
        return cls(**d)


@dataclass
class Population:
    candidates: np.ndarray  # (popsize, d)
    noise: np.ndarray  # (popsize, d), the z_k that generated the candidates
    generation: int
    fitnesses: np.ndarray | None = field(default=None)


def ask(state: SearchState) -> Population:
    rng = np.random.default_rng([state.seed, state.generation])
    z = rng.standard_normal((state.popsize, state.dim))
    x = state.mean + state.sigma * (z @ state.shape.T)
    return Population(candidates=x, noise=z, generation=state.generation)


def tell(state: SearchState, population: Population, fitnesses=None) -> SearchState:
    f = population.fitnesses if fitnesses is None else fitnesses
    if f is None:
        raise ValueError("population has no fitnesses")
    f = np.asarray(f, dtype=np.float64)
    z = population.noise
    if (population.generation != state.generation or z.shape != (state.popsize, state.dim)
            or f.shape != (state.popsize,)):
        raise ValueError("population does not belong to this search state")
    if not np.all(np.isfinite(f)):
        raise ValueError("fitness values must be finite")

    d, n = state.dim, state.popsize
    eta_mu, eta_sigma, eta_b = learning_rates(d)
    # stable sort: ties keep candidate order
    order = np.argsort(f, kind="stable")
    u = np.empty(n)
    u[order] = utilities(n)

    grad_delta = u @ z
    grad_m = (z.T * u) @ z - u.sum() * np.eye(d)
    grad_sigma = np.trace(grad_m) / d
    grad_b = grad_m - grad_sigma * np.eye(d)

    mean = state.mean + eta_mu * state.sigma * (state.shape @ grad_delta)
    sigma = state.sigma * math.exp(0.5 * eta_sigma * grad_sigma)
    shape = state.shape @ expm_sym(0.5 * eta_b * grad_b)
    return replace(state, mean=mean, sigma=sigma, shape=shape,
                   generation=state.generation + 1,
                   evaluations=state.evaluations + n)


def minimize(fn, x0, sigma0: float, seed: int, max_generations: int, target: float = -np.inf,
             callback=None) -> tuple[SearchState, np.ndarray, float]:
    """Plain xNES loop on a scalar function; returns (state, best_x, best_f)."""
    state = SearchState.initial(x0, sigma0, seed)
    best_x, best_f = np.asarray(x0, dtype=np.float64), float(fn(x0))
    for _ in range(max_generations):
        pop = ask(state)
        f = np.array([fn(x) for x in pop.candidates])
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_x, best_f = pop.candidates[k].copy(), float(f[k])
        state = tell(state, pop, f)
        if callback is not None:
            callback(state, best_f)
        if best_f < target:
            break
    return state, best_x, best_f
