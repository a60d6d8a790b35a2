"""Morphology-parameterized episodic environments.

Two environments share one interface:

``CartPole``
    Classic cart-pole with continuous force ``10 N * action``. The morphology's
    ``x`` is the pole half-length (the stock simulator's ``length`` constant)
    and ``y`` the pole mass. Reward is one point per surviving step, capped at
    1000 steps.

``SwitchEnv``
    A 1-D point mass whose actuator sign flips at ``x_split``. No single
    controller can serve both sign classes, which makes branching outcomes
    analytically known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .net import Controller, DimensionError, Topology, check_params


@dataclass(frozen=True)
class Morphology:
    x: float
    y: float
    index: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0):
            raise ValueError(f"morphology parameters must be positive, got ({self.x}, {self.y})")
        if self.index is not None:
            object.__setattr__(self, "index", (int(self.index[0]), int(self.index[1])))


@dataclass(frozen=True)
class EpisodeResult:
    reward_total: float
    steps: int
    terminated_early: bool


@dataclass(frozen=True)
class EnvSpec:
    name: str
    observation_dim: int
    action_dim: int
    episode_cap: int
    max_reward: float
    sufficiency_threshold: float
    satisfaction_target: float
    default_morphology: Morphology

    def __post_init__(self):
        if self.sufficiency_threshold > self.max_reward:
            raise ValueError("sufficiency threshold exceeds the maximum reward")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "observation_dim": self.observation_dim,
            "action_dim": self.action_dim,
            "episode_cap": self.episode_cap,
            "max_reward": self.max_reward,
            "sufficiency_threshold": self.sufficiency_threshold,
            "satisfaction_target": self.satisfaction_target,
            "default_morphology": [self.default_morphology.x, self.default_morphology.y],
        }


def _as_batch(topology: Topology, params) -> np.ndarray:
    p = np.ascontiguousarray(params, dtype=np.float64)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] != topology.parameter_count:
        raise DimensionError(f"expected rows of {topology.parameter_count} parameters")
    return p


class Environment:
    spec: EnvSpec

    def check_topology(self, topology: Topology):
        if (topology.n_inputs != self.spec.observation_dim
                or topology.n_outputs != self.spec.action_dim):
            raise DimensionError(
                f"{self.spec.name} needs {self.spec.observation_dim} inputs and "
                f"{self.spec.action_dim} outputs, topology is {topology.as_tuple()}")

    def rollouts(self, topology, params, param_index, morphs, seeds) -> np.ndarray:
        """Episode rewards for ``params[param_index[k]]`` on ``morphs[k]`` with ``seeds[k]``."""
        raise NotImplementedError

    def evaluate(self, morphology: Morphology, controller: Controller, seed: int) -> EpisodeResult:
        raise NotImplementedError


def initial_cartpole_state(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.05, 0.05, size=4)


def cartpole_step(state, force: float, morph: Morphology) -> tuple[float, float, float, float]:
    """One explicit-Euler step of the cart-pole equations."""
    x, x_dot, theta, theta_dot = (float(v) for v in state)
    x_acc, theta_acc = K.cartpole_derivs.py_func(
        theta_dot, math.sin(theta), math.cos(theta), float(force), morph.x, morph.y)
    return (x + K.TAU * x_dot, x_dot + K.TAU * x_acc,
            theta + K.TAU * theta_dot, theta_dot + K.TAU * theta_acc)


def cartpole_terminal(state) -> bool:
    x, _, theta, _ = state
    return abs(x) > K.X_LIMIT or abs(theta) > K.THETA_LIMIT


class CartPole(Environment):
    def __init__(self, episode_cap: int = 1000, sufficiency_threshold: float = 800.0,
                 satisfaction_target: float = -800.0):
        self.spec = EnvSpec(
            name="cartpole", observation_dim=4, action_dim=1, episode_cap=episode_cap,
            max_reward=float(episode_cap), sufficiency_threshold=sufficiency_threshold,
            satisfaction_target=satisfaction_target,
            default_morphology=Morphology(0.5, 0.1))

    def _run(self, topology, params, param_index, morphs, init):
        self.check_topology(topology)
        p = _as_batch(topology, params)
        n = len(morphs)
        steps = np.zeros(n, dtype=np.int64)
        early = np.zeros(n, dtype=np.bool_)
        K.cartpole_rollouts(
            p, np.asarray(param_index, dtype=np.int64), topology.n_hidden,
            np.array([m.x for m in morphs], dtype=np.float64),
            np.array([m.y for m in morphs], dtype=np.float64),
            np.ascontiguousarray(init, dtype=np.float64), self.spec.episode_cap, steps, early)
        return steps, early

    def rollouts(self, topology, params, param_index, morphs, seeds) -> np.ndarray:
        init = np.array([initial_cartpole_state(s) for s in seeds]).reshape(len(seeds), 4)
        steps, _ = self._run(topology, params, param_index, morphs, init)
        return steps.astype(np.float64)

    def evaluate(self, morphology, controller, seed, initial_state=None) -> EpisodeResult:
        if initial_state is None:
            init = initial_cartpole_state(seed)[None, :]
        else:
            init = np.asarray(initial_state, dtype=np.float64).reshape(1, 4)
        steps, early = self._run(controller.topology, controller.params, [0], [morphology], init)
        return EpisodeResult(float(steps[0]), int(steps[0]), bool(early[0]))


class SwitchEnv(Environment):
    """Point mass driven by ``position += step_scale * gain * action``.

    ``gain`` is +1 for ``x < x_split`` and -1 otherwise; reward per step is
    ``1 - min(1, position**2)`` measured after the move. The episode has no
    randomness; the seed argument is accepted for interface parity.
    """

    START = 1.0
    DT = 0.05
    SPEED = 40.0

    def __init__(self, x_split: float = 0.35, episode_cap: int = 200,
                 sufficiency_threshold: float = 180.0, satisfaction_target: float = -180.0,
                 default_morphology: Morphology = Morphology(0.1, 0.1)):
        self.x_split = float(x_split)
        self.spec = EnvSpec(
            name="switch", observation_dim=1, action_dim=1, episode_cap=episode_cap,
            max_reward=float(episode_cap), sufficiency_threshold=sufficiency_threshold,
            satisfaction_target=satisfaction_target, default_morphology=default_morphology)

    @property
    def step_scale(self) -> float:
        return self.DT * self.SPEED

    def gain(self, morph: Morphology) -> float:
        if morph.x == self.x_split:
            raise ValueError("morphology lies on the sign boundary")
        return 1.0 if morph.x < self.x_split else -1.0

    def rollouts(self, topology, params, param_index, morphs, seeds=None) -> np.ndarray:
        self.check_topology(topology)
        p = _as_batch(topology, params)
        gains = np.array([self.gain(m) for m in morphs], dtype=np.float64)
        out = np.zeros(len(morphs))
        K.switch_rollouts(p, np.asarray(param_index, dtype=np.int64), topology.n_hidden,
                          gains, self.START, self.step_scale, self.spec.episode_cap, out)
        return out

    def evaluate(self, morphology, controller, seed=0) -> EpisodeResult:
        r = self.rollouts(controller.topology, controller.params, [0], [morphology])[0]
        return EpisodeResult(float(r), self.spec.episode_cap, False)

    def optimal_params(self, topology: Topology, sign: float) -> np.ndarray:
        """Parameters that move the mass from the start to the origin in one step.

        Only the first hidden unit is used: ``a(p) = tanh(v * tanh(p))`` with
        ``v`` chosen so that ``a(START) = -sign * START / step_scale``.
        """
        self.check_topology(topology)
        target = -sign * self.START / self.step_scale
        v = math.atanh(target) / math.tanh(self.START)
        p = np.zeros(topology.parameter_count)
        p[0] = 1.0  # input -> hidden 0
        p[topology.n_hidden_params + 0] = v  # hidden 0 -> output
        return check_params(topology, p)


def make_env(name: str, **kwargs) -> Environment:
    if name == "cartpole":
        return CartPole(**kwargs)
    if name == "switch":
        return SwitchEnv(**kwargs)
    raise KeyError(f"unknown environment {name!r}")
