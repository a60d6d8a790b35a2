"""Fixed-topology tanh feedforward controllers over a flat parameter vector.

Flat layout (frozen, used by every serialized archive)::

    [ hidden_0: w_0 .. w_{n_in-1}, bias | hidden_1: ... | ... ]   (n_in + 1) * n_hidden
    [ output_0: w_0 .. w_{n_hid-1}, bias | output_1: ... | ... ]  (n_hidden + 1) * n_outputs

i.e. row-major by destination neuron with the bias weight last in each row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    n_inputs: int
    n_hidden: int
    n_outputs: int

    def __post_init__(self):
        for name in ("n_inputs", "n_hidden", "n_outputs"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def n_hidden_params(self) -> int:
        return (self.n_inputs + 1) * self.n_hidden

    @property
    def parameter_count(self) -> int:
        return self.n_hidden_params + (self.n_hidden + 1) * self.n_outputs

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_inputs, self.n_hidden, self.n_outputs)


CARTPOLE_TOPOLOGY = Topology(4, 20, 1)


def check_params(topology: Topology, params) -> np.ndarray:
    p = np.asarray(params, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] != topology.parameter_count:
        raise DimensionError(
            f"expected {topology.parameter_count} parameters for {topology.as_tuple()}, "
            f"got shape {p.shape}"
        )
    if not np.all(np.isfinite(p)):
        raise ValueError("parameter vector contains non-finite entries")
    return p


def decode(topology: Topology, params) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split a flat vector into ``(w_hidden, b_hidden, w_out, b_out)``.

    ``w_hidden`` has shape (n_hidden, n_inputs) and ``w_out`` (n_outputs, n_hidden).
    """
    p = check_params(topology, params)
    k = topology.n_hidden_params
    first = p[:k].reshape(topology.n_hidden, topology.n_inputs + 1)
    second = p[k:].reshape(topology.n_outputs, topology.n_hidden + 1)
    return (first[:, :-1].copy(), first[:, -1].copy(),
            second[:, :-1].copy(), second[:, -1].copy())


def encode(topology: Topology, w_hidden, b_hidden, w_out, b_out) -> np.ndarray:
    """Inverse of :func:`decode`."""
    w_hidden = np.asarray(w_hidden, dtype=np.float64)
    w_out = np.asarray(w_out, dtype=np.float64)
    b_hidden = np.asarray(b_hidden, dtype=np.float64)
    b_out = np.asarray(b_out, dtype=np.float64)
    if (w_hidden.shape != (topology.n_hidden, topology.n_inputs)
            or b_hidden.shape != (topology.n_hidden,)
            or w_out.shape != (topology.n_outputs, topology.n_hidden)
            or b_out.shape != (topology.n_outputs,)):
        raise DimensionError("weight shapes do not match topology")
    first = np.concatenate([w_hidden, b_hidden[:, None]], axis=1)
    second = np.concatenate([w_out, b_out[:, None]], axis=1)
    return np.concatenate([first.ravel(), second.ravel()])


def layout(topology: Topology) -> list[tuple[str, int, int]]:
    """Describe every vector index as ``(layer, destination, source)``.

    ``layer`` is ``"ih"`` (input to hidden) or ``"ho"`` (hidden to output).
    The source index equal to the layer's fan-in denotes the bias unit.
    """
    entries = []
    for h in range(topology.n_hidden):
        for i in range(topology.n_inputs + 1):
            entries.append(("ih", h, i))
    for o in range(topology.n_outputs):
        for h in range(topology.n_hidden + 1):
            entries.append(("ho", o, h))
    return entries


def forward(topology: Topology, params, observation) -> np.ndarray:
    obs = np.asarray(observation, dtype=np.float64)
    if obs.shape != (topology.n_inputs,):
        raise DimensionError(
            f"observation must have shape ({topology.n_inputs},), got {obs.shape}"
        )
    w_h, b_h, w_o, b_o = decode(topology, params)
    hidden = np.tanh(w_h @ obs + b_h)
    return np.tanh(w_o @ hidden + b_o)


@dataclass(frozen=True)
class Controller:
    """A topology paired with its flat parameter vector."""

    topology: Topology
    params: np.ndarray

    def __post_init__(self):
        p = check_params(self.topology, self.params).copy()
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    def __call__(self, observation) -> np.ndarray:
        return forward(self.topology, self.params, observation)
