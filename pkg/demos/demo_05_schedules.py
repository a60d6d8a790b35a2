"""
Training schedules
==================

The order in which morphologies are presented. The four variants share
seeds and training grids; only the schedule differs.
"""

from morphevo import Schedule, make_grid

grid = make_grid(n=16)

###############################################################################
# The first few cells each schedule visits, as lattice coordinates.

for kind, step in (("incremental", 1), ("random", 1), ("random_walk", 1), ("random_walk", 5)):
    s = Schedule(kind, grid, seed=0, walk_step=step)
    print(f"{kind:12s} step {step}:", [s.next().index for _ in range(8)])

###############################################################################
# After branching removes cells, the schedule continues over what is left.

s = Schedule("incremental", grid, 0).restrict([1, 6, 11])
print("restricted:", [grid.ordinal(*s.next().index) for _ in range(6)])

###############################################################################
# The full comparison on cart-pole is one call; here with a small budget.

from dataclasses import replace  # noqa: E402

from morphevo import experiment  # noqa: E402
from morphevo.config import parse_config  # noqa: E402
from morphevo.report import report_text  # noqa: E402

cfg = replace(parse_config("[experiment]\nenv = cartpole\n"), runs=3, size=16,
              max_generations=400, out="demo_output/schedules")
result = experiment.schedule_compare(cfg)
print(report_text([r for r in result["reports"] if r.metric == "global_mean"]))
