"""Evolving generalist controllers with evolutionary branching.

One run keeps a morphology set ``M`` and an outlier set ``O``. Every
generation the schedule presents one morphology, xNES proposes candidates
that are scored on it, and the best candidate is cross-evaluated on all of
``M``; it becomes the branch champion if its mean fitness improves. When the
best per-generation fitness stalls for ``h`` generations, morphologies on
which the champion is worse than ``mean + k * std`` move from ``M`` to ``O``.
A branch ends when nothing is removed, when the champion is satisfactory, or
when the shared generation budget runs out. Evolution then restarts from
scratch on ``O``.

All fitness values follow the minimization convention (negated rewards).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import xnes
from .envs import Environment, Morphology
from .net import Controller, Topology
from .schedule import MorphologyGrid, Schedule
from .seeding import derive_seed

TRACE_VERSION = 1
IMPROVE_TOL = 1e-9


@dataclass(frozen=True)
class RunBudget:
    max_generations: int = 5000
    stagnation_window: int = 50
    satisfaction_target: float = -800.0
    threshold_multiplier: float = 1.0

    def __post_init__(self):
        if self.max_generations < 0 or self.stagnation_window < 1:
            raise ValueError("invalid budget")


@dataclass
class ArchiveEntry:
    params: np.ndarray
    cluster: list[int]  # grid ordinals
    mean_fitness: float
    generations_used: int

    def controller(self, topology: Topology) -> Controller:
        return Controller(topology, self.params)


@dataclass
class GeneralistArchive:
    grid: MorphologyGrid
    topology: Topology
    entries: list[ArchiveEntry] = field(default_factory=list)
    uncovered: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def cluster_cells(self, k: int) -> list[Morphology]:
        return [self.grid.cell(*self.grid.position(o)) for o in self.entries[k].cluster]

    def dispatch(self, morphology: Morphology) -> Controller:
        return self.entries[self.dispatch_index(morphology)].controller(self.topology)

    def dispatch_index(self, morphology: Morphology) -> int:
        """Index of the entry responsible for ``morphology``.

        Members of a cluster get that cluster's controller. Anything else goes
        to the cluster whose nearest member is closest in step-normalized
        Euclidean distance; near-ties resolve to the earlier entry.
        """
        if not self.entries:
            raise ValueError("cannot dispatch from an empty archive")
        sx, sy = self.grid.steps
        best_k, best_d = 0, math.inf
        for k in range(len(self.entries)):
            for cell in self.cluster_cells(k):
                d = math.hypot((morphology.x - cell.x) / sx, (morphology.y - cell.y) / sy)
                if d < best_d - 1e-9:
                    best_k, best_d = k, d
        return best_k


def mean_fitness(env: Environment, controller: Controller, morphs, seeds) -> float:
    """Mean negated episode reward over ``morphs``, one seeded episode each."""
    morphs = list(morphs)
    if not morphs:
        raise ValueError("mean fitness over an empty morphology set")
    rewards = env.rollouts(controller.topology, controller.params, [0] * len(morphs),
                           morphs, list(seeds))
    return float(np.mean(-rewards))


def outliers(fitnesses, multiplier: float = 1.0) -> tuple[np.ndarray, float, float, float]:
    """Mask of entries worse than ``mean + multiplier * std`` (population std).

    Returns ``(mask, mean, std, threshold)``.
    """
    f = np.asarray(fitnesses, dtype=np.float64)
    mu = float(f.mean())
    sd = float(f.std())
    thr = mu + multiplier * sd if math.isfinite(multiplier) else math.inf
    # rounding can put the mean of equal values an ulp below them; the best cell always stays
    return (f > thr) & (f > f.min()), mu, sd, thr


class GeneralistRun:
    """Resumable state machine for one evolutionary run.

    Call :meth:`step` until :attr:`done`; :meth:`state_dict` captures
    everything needed to continue bit-for-bit with :meth:`from_state`.
    """

    def __init__(self, env: Environment, topology: Topology, grid: MorphologyGrid,
                 schedule: Schedule, budget: RunBudget, sigma0: float = 0.1, run_seed: int = 0,
                 init_range: float = 1e-5, trace_sink=None):
        env.check_topology(topology)
        self.env = env
        self.topology = topology
        self.grid = grid
        self.budget = budget
        self.sigma0 = float(sigma0)
        self.run_seed = int(run_seed)
        self.init_range = float(init_range)
        self.trace_sink = trace_sink
        self.trace: list[dict] = []
        self.archive = GeneralistArchive(grid, topology)
        self.generations = 0
        self.branch = -1
        self.done = False
        self.schedule = schedule
        self.M = list(range(grid.size))
        self.O: list[int] = []
        self.last_outliers: list[int] = []
        self.search: xnes.SearchState | None = None
        self.champion: np.ndarray | None = None
        self.f_hat = math.inf
        self.best_f = math.inf
        self.stall = 0
        self.branch_generations = 0
        self._cross_seeds = [derive_seed(self.run_seed, "cross", o) for o in range(grid.size)]
        if budget.max_generations == 0:
            self.archive.uncovered = list(self.M)
            self.done = True
        else:
            self._start_branch()

    # -- branch lifecycle -------------------------------------------------

    def _start_branch(self):
        self.branch += 1
        d = self.topology.parameter_count
        rng = np.random.default_rng(derive_seed(self.run_seed, "init", self.branch))
        mean0 = rng.uniform(-self.init_range, self.init_range, size=d)
        self.search = xnes.SearchState.initial(
            mean0, self.sigma0, derive_seed(self.run_seed, "xnes", self.branch))
        self.schedule = self.schedule.restrict(self.M)
        self.champion = None
        self.f_hat = math.inf
        self.best_f = math.inf
        self.stall = 0
        self.branch_generations = 0

    def _end_branch(self):
        if self.champion is not None:
            self.archive.entries.append(ArchiveEntry(
                self.champion.copy(), sorted(self.M), self.f_hat, self.branch_generations))
        else:
            self.archive.uncovered.extend(self.M)
        self.last_outliers = sorted(self.O)
        if self.O and self.generations < self.budget.max_generations:
            self.M, self.O = sorted(self.O), []
            self._start_branch()
        else:
            self.archive.uncovered.extend(self.O)
            self.archive.uncovered.sort()
            self.O = []
            self.done = True

    # -- evaluation helpers ------------------------------------------------

    def _cells(self, ordinals) -> list[Morphology]:
        return [self.grid.cell(*self.grid.position(o)) for o in ordinals]

    def cross_fitness(self, params, ordinals) -> np.ndarray:
        """Per-morphology fitness of ``params`` with the fixed per-cell seeds."""
        ordinals = list(ordinals)
        rewards = self.env.rollouts(self.topology, params, [0] * len(ordinals),
                                    self._cells(ordinals), [self._cross_seeds[o] for o in ordinals])
        return -rewards

    # -- one generation ------------------------------------------------------

    def step(self) -> dict:
        if self.done:
            raise RuntimeError("run already finished")
        morph = self.schedule.next()
        pop = xnes.ask(self.search)
        ep_seed = derive_seed(self.run_seed, "episode", self.generations)
        n = self.search.popsize
        # all candidates of a generation share one episode seed
        fit = -self.env.rollouts(self.topology, pop.candidates, np.arange(n),
                                 [morph] * n, [ep_seed] * n)
        k = int(np.argmin(fit))
        f_best = float(fit[k])
        i_best = pop.candidates[k].copy()
        self.search = xnes.tell(self.search, pop, fit)

        f_prime = float(np.mean(self.cross_fitness(i_best, self.M)))
        improved = f_prime < self.f_hat
        if improved:
            self.champion, self.f_hat = i_best, f_prime

        if f_best < self.best_f - IMPROVE_TOL:
            self.best_f, self.stall = f_best, 0
        else:
            self.stall += 1

        record = {
            "v": TRACE_VERSION,
            "branch": self.branch,
            "generation": self.generations,
            "branch_generation": self.branch_generations,
            "morphology": [morph.x, morph.y],
            "cell": self.grid.ordinal(*morph.index),
            "f_best": f_best,
            "f_hat_prime": f_prime,
            "f_hat": self.f_hat,
            "champion_replaced": improved,
            "sigma": self.search.sigma,
            "m_size": len(self.M),
        }

        stop = False
        if self.stall >= self.budget.stagnation_window:
            fits = self.cross_fitness(self.champion, self.M)
            mask, mu, sd, thr = outliers(fits, self.budget.threshold_multiplier)
            removed = [o for o, drop in zip(self.M, mask) if drop]
            record["stagnation"] = {
                "per_cell": dict(zip(map(str, self.M), fits.tolist())),
                "mean": mu, "std": sd, "threshold": thr, "removed": removed,
            }
            if not removed:
                stop = True
            else:
                self.M = [o for o, drop in zip(self.M, mask) if not drop]
                self.O.extend(removed)
                self.schedule = self.schedule.restrict(self.M)
                self.f_hat = float(np.mean(fits[~mask]))
                record["f_hat"] = self.f_hat
                self.stall = 0

        self.generations += 1
        self.branch_generations += 1
        if self.f_hat <= self.budget.satisfaction_target:
            stop = True
            record["satisfied"] = True
        if self.generations >= self.budget.max_generations:
            stop = True
            record["budget_exhausted"] = True
        record["o_size"] = len(self.O)

        self.trace.append(record)
        if self.trace_sink is not None:
            self.trace_sink(record)
        if stop:
            self._end_branch()
        return record

    def run(self, checkpoint=None, every: int = 0) -> GeneralistArchive:
        while not self.done:
            self.step()
            if checkpoint is not None and every and self.generations % every == 0 and not self.done:
                checkpoint(self)
        return self.archive

    # -- persistence -------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "topology": list(self.topology.as_tuple()),
            "grid": self.grid.to_dict(),
            "budget": asdict(self.budget),
            "sigma0": self.sigma0,
            "run_seed": self.run_seed,
            "init_range": self.init_range,
            "generations": self.generations,
            "branch": self.branch,
            "branch_generations": self.branch_generations,
            "done": self.done,
            "M": list(self.M),
            "O": list(self.O),
            "last_outliers": list(self.last_outliers),
            "schedule": self.schedule.state_dict(),
            "search": None if self.search is None else self.search.to_dict(),
            "champion": None if self.champion is None else self.champion.tolist(),
            "f_hat": self.f_hat,
            "best_f": self.best_f,
            "stall": self.stall,
            "archive": [
                {"params": e.params.tolist(), "cluster": e.cluster,
                 "mean_fitness": e.mean_fitness, "generations_used": e.generations_used}
                for e in self.archive.entries
            ],
            "uncovered": list(self.archive.uncovered),
            "trace": self.trace,
        }

    @classmethod
    def from_state(cls, env: Environment, state: dict, trace_sink=None) -> GeneralistRun:
        state = json.loads(json.dumps(state))  # detach from caller
        self = cls.__new__(cls)
        self.env = env
        self.topology = Topology(*state["topology"])
        self.grid = MorphologyGrid.from_dict(state["grid"])
        self.budget = RunBudget(**state["budget"])
        self.sigma0 = state["sigma0"]
        self.run_seed = state["run_seed"]
        self.init_range = state["init_range"]
        self.trace_sink = trace_sink
        self.trace = state["trace"]
        self.generations = state["generations"]
        self.branch = state["branch"]
        self.branch_generations = state["branch_generations"]
        self.done = state["done"]
        self.M = state["M"]
        self.O = state["O"]
        self.last_outliers = state["last_outliers"]
        self.schedule = Schedule.from_state(state["schedule"])
        self.search = None if state["search"] is None else xnes.SearchState.from_dict(state["search"])
        self.champion = None if state["champion"] is None else np.array(state["champion"])
        self.f_hat = float(state["f_hat"])
        self.best_f = float(state["best_f"])
        self.stall = state["stall"]
        self._cross_seeds = [derive_seed(self.run_seed, "cross", o) for o in range(self.grid.size)]
        self.archive = GeneralistArchive(self.grid, self.topology, [
            ArchiveEntry(np.array(e["params"]), e["cluster"], e["mean_fitness"],
                         e["generations_used"]) for e in state["archive"]
        ], state["uncovered"])
        return self


def evolve_generalists(env: Environment, topology: Topology, grid: MorphologyGrid,
                       schedule: Schedule, budget: RunBudget, sigma0: float = 0.1,
                       run_seed: int = 0, **kw) -> GeneralistArchive:
    return GeneralistRun(env, topology, grid, schedule, budget, sigma0, run_seed, **kw).run()


def evolve_branch(run: GeneralistRun) -> tuple[ArchiveEntry | None, list[int], int]:
    """Advance ``run`` to the end of its current branch.

    Returns ``(entry, outliers, generations)``; ``entry`` is ``None`` when the
    budget ran out before the branch produced a champion.
    """
    branch, n_entries, start = run.branch, len(run.archive.entries), run.generations
    while not run.done and run.branch == branch:
        run.step()
    entry = run.archive.entries[n_entries] if len(run.archive.entries) > n_entries else None
    return entry, list(run.last_outliers), run.generations - start
