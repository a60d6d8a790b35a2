"""
A cart-pole specialist and its fitness landscape
================================================

Evolve a controller on the default pole only, then sweep it over the
18x18 lattice of pole lengths and masses.
"""

from pathlib import Path

import numpy as np

from morphevo import (CARTPOLE_GLOBAL, CartPole, GeneralistRun, RunBudget, Schedule,
                      build_test_sets, make_grid, sufficiency_count, sweep)
from morphevo.net import CARTPOLE_TOPOLOGY
from morphevo.storage import fitness_grid_rows, write_grid_csv, write_svg

out = Path("demo_output")
out.mkdir(exist_ok=True)

env = CartPole()
default = env.spec.default_morphology
grid = make_grid(n=1, default=default)

###############################################################################
# With a single training morphology the generalist loop reduces to a plain
# specialist run: nothing can ever be an outlier.

run = GeneralistRun(env, CARTPOLE_TOPOLOGY, grid, Schedule("incremental", grid, 0),
                    RunBudget(max_generations=1500), sigma0=0.1, run_seed=0)
archive = run.run()
print("generations:", run.generations, " training fitness:", archive.entries[0].mean_fitness)

###############################################################################
# Sweep over the global lattice; rewards are means of 3 seeded episodes.

fg = sweep(env, archive, CARTPOLE_GLOBAL, n_eval=3, seed=0)
sets = build_test_sets(grid, CARTPOLE_GLOBAL, default)
n, frac = sufficiency_count(fg, env.spec.sufficiency_threshold)
print(f"default cell reward {fg.at(sets.default_cell):.1f}")
print(f"local mean reward   {np.mean([fg.at(o) for o in sets.local]):.1f}")
print(f"global mean reward  {fg.rewards.mean():.1f}")
print(f"sufficient cells    {n} ({frac:.1%})")

write_grid_csv(fg, out / "specialist.csv")
write_svg(fitness_grid_rows(fg), out / "specialist.svg", "specialist")
print("wrote", out / "specialist.svg")
