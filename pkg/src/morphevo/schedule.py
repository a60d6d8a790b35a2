"""Morphology lattices and per-generation training schedules."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from .envs import Morphology

KINDS = ("incremental", "random", "random_walk")


@dataclass(frozen=True)
class MorphologyGrid:
    """Rectangular lattice; ``cells`` are ordered with the x index varying fastest."""

    origin: tuple[float, float]
    steps: tuple[float, float]
    shape: tuple[int, int]

    def __post_init__(self):
        nx, ny = self.shape
        if nx < 1 or ny < 1:
            raise ValueError("grid shape must be positive")
        # corners bound every cell of a linear lattice; Morphology rejects non-positive values
        self.cell(0, 0)
        self.cell(nx - 1, ny - 1)

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    def cell(self, i: int, j: int) -> Morphology:
        if not (0 <= i < self.shape[0] and 0 <= j < self.shape[1]):
            raise IndexError((i, j))
        return Morphology(self.origin[0] + i * self.steps[0],
                          self.origin[1] + j * self.steps[1], (i, j))

    @property
    def cells(self) -> list[Morphology]:
        return [self.cell(i, j) for j in range(self.shape[1]) for i in range(self.shape[0])]

    def ordinal(self, i: int, j: int) -> int:
        return j * self.shape[0] + i

    def position(self, ordinal: int) -> tuple[int, int]:
        return ordinal % self.shape[0], ordinal // self.shape[0]

    def to_dict(self) -> dict:
        return {"origin": list(self.origin), "steps": list(self.steps), "shape": list(self.shape)}

    @classmethod
    def from_dict(cls, d: dict) -> MorphologyGrid:
        return cls(tuple(d["origin"]), tuple(d["steps"]), tuple(d["shape"]))


def make_grid(origin=(0.1, 0.1), steps=(0.1, 0.1), n: int = 64,
              default: Morphology | None = None) -> MorphologyGrid:
    """Square training lattice of ``n`` cells; ``n == 1`` yields just ``default``."""
    side = math.isqrt(n) if n > 0 else 0
    if n < 1 or side * side != n:
        raise ValueError(f"training set size must be a perfect square, got {n}")
    if n == 1:
        if default is None:
            raise ValueError("a size-1 grid needs the default morphology")
        return MorphologyGrid((default.x, default.y), tuple(steps), (1, 1))
    return MorphologyGrid(tuple(origin), tuple(steps), (side, side))


class Schedule:
    """Stateful iterator yielding one grid cell per generation.

    The active set starts as the whole grid and shrinks through
    :meth:`restrict`; the cursor and random stream carry over.
    """

    def __init__(self, kind: str, grid: MorphologyGrid, seed: int, walk_step: int = 1):
        if kind not in KINDS:
            raise ValueError(f"unknown schedule {kind!r}, expected one of {KINDS}")
        if walk_step < 1:
            raise ValueError("walk_step must be positive")
        self.kind = kind
        self.grid = grid
        self.walk_step = int(walk_step)
        self.seed = int(seed)
        self.rng = np.random.default_rng(seed)
        self.active = list(range(grid.size))
        self.current: int | None = None

    def __iter__(self):
        return self

    def __next__(self) -> Morphology:
        return self.next()

    def next(self) -> Morphology:
        if self.kind == "incremental":
            later = [k for k in self.active if self.current is None or k > self.current]
            self.current = later[0] if later else self.active[0]
        elif self.kind == "random":
            self.current = self.active[int(self.rng.integers(len(self.active)))]
        else:
            self.current = self._walk()
        return self.grid.cell(*self.grid.position(self.current))

    def _walk(self) -> int:
        if self.current is None:
            return self.active[int(self.rng.integers(len(self.active)))]
        ci, cj = self.grid.position(self.current)
        s = self.walk_step
        near = []
        for k in self.active:
            i, j = self.grid.position(k)
            if k != self.current and abs(i - ci) <= s and abs(j - cj) <= s:
                near.append(k)
        if near:
            return near[int(self.rng.integers(len(near)))]
        if self.current in self.active:
            return self.current
        # walked off a removed cell with nothing in reach
        return self.active[int(self.rng.integers(len(self.active)))]

    def restrict(self, cells) -> Schedule:
        """Copy of this schedule that only draws from ``cells`` (Morphology or ordinals)."""
        keep = set()
        for c in cells:
            keep.add(self.grid.ordinal(*c.index) if isinstance(c, Morphology) else int(c))
        if not keep:
            raise ValueError("cannot restrict a schedule to an empty set")
        if not keep.issubset(range(self.grid.size)):
            raise ValueError("restriction contains cells outside the grid")
        out = copy.deepcopy(self)
        out.active = sorted(keep)
        return out

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "grid": self.grid.to_dict(),
            "walk_step": self.walk_step,
            "seed": self.seed,
            "rng": self.rng.bit_generator.state,
            "active": list(self.active),
            "current": self.current,
        }

    @classmethod
    def from_state(cls, d: dict) -> Schedule:
        s = cls(d["kind"], MorphologyGrid.from_dict(d["grid"]), d["seed"], d["walk_step"])
        s.rng.bit_generator.state = d["rng"]
        s.active = list(d["active"])
        s.current = d["current"]
        return s
