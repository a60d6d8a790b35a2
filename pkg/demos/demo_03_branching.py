"""
Evolutionary branching on a two-class environment
=================================================

In the synthetic environment the actuator gain flips sign at ``x_split``.
No single controller handles both signs, so stagnation exposes the cells of
the minority class as outliers and a fresh search takes them over.
"""

from morphevo import GeneralistRun, RunBudget, Schedule, SwitchEnv, Topology, make_grid

env = SwitchEnv(x_split=0.35)
grid = make_grid(n=64)
top = Topology(1, 20, 1)

run = GeneralistRun(env, top, grid, Schedule("incremental", grid, 0),
                    RunBudget(2000, 50, env.spec.satisfaction_target), 0.1, run_seed=0)
archive = run.run()

###############################################################################
# Each stagnation event lists the per-cell fitness of the branch champion and
# the cells it gave up.

for rec in run.trace:
    if "stagnation" in rec:
        ev = rec["stagnation"]
        print(f"gen {rec['generation']:4d} branch {rec['branch']}: mean {ev['mean']:.1f} "
              f"std {ev['std']:.1f} threshold {ev['threshold']:.1f} removed {len(ev['removed'])}")

###############################################################################
# The clusters line up with the sign classes: columns 0..2 and 3..7.

for k, e in enumerate(archive.entries):
    cols = sorted({grid.position(o)[0] for o in e.cluster})
    print(f"entry {k}: {len(e.cluster)} cells, columns {cols}, fitness {e.mean_fitness:.2f}")

###############################################################################
# Unseen morphologies are routed to the nearest cluster.

from morphevo import Morphology  # noqa: E402

for m in (Morphology(0.12, 2.0), Morphology(1.5, 0.3)):
    print(m, "-> entry", archive.dispatch_index(m))
