"""
Specialists versus generalists
==============================

A scaled-down version of the training-size comparison: 5 runs each of a
size-1 and a size-64 training set, then Kruskal-Wallis and Dunn tests on
the three evaluation metrics.
"""

from dataclasses import replace

from morphevo import experiment
from morphevo.config import parse_config
from morphevo.report import compare, group_rows, report_text

base = replace(parse_config("[experiment]\nenv = cartpole\n"), runs=5, max_generations=800)

rows = []
for size in (1, 16, 64):
    cfg = replace(base, size=size, out=f"demo_output/size_{size}")
    rows += experiment.evolve(cfg, log=print)

###############################################################################
# Fitness is negated reward, so lower is better. The size-64 group should
# come out ahead of the size-1 group on the global lattice.

reports = compare(group_rows(rows, "size"))
print(report_text(reports))
