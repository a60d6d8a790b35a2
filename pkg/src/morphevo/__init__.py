"""Evolving generalist neural controllers across morphological variations."""

from .envs import CartPole, EnvSpec, Morphology, SwitchEnv, make_env
from .generalist import ArchiveEntry, GeneralistArchive, GeneralistRun, RunBudget, evolve_generalists
from .metrics import CARTPOLE_GLOBAL, FitnessGrid, TestSets, build_test_sets, summarize, sufficiency_count, sweep
from .net import CARTPOLE_TOPOLOGY, Controller, Topology
from .schedule import MorphologyGrid, Schedule, make_grid
from .seeding import derive_seed
from .stats import dunn_posthoc, group_medians, kruskal_wallis

__version__ = "0.1.0"

__all__ = [
    "ArchiveEntry", "CARTPOLE_GLOBAL", "CARTPOLE_TOPOLOGY", "CartPole", "Controller", "EnvSpec", "FitnessGrid",
    "GeneralistArchive", "GeneralistRun", "Morphology", "MorphologyGrid", "RunBudget",
    "Schedule", "SwitchEnv", "TestSets", "Topology", "build_test_sets", "derive_seed",
    "dunn_posthoc", "evolve_generalists", "group_medians", "kruskal_wallis", "make_env",
    "make_grid", "summarize", "sufficiency_count", "sweep",
]
