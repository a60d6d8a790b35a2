"""
xNES on a sphere
================

The optimizer on its own: a 20-dimensional sphere started at distance 10.
"""

import numpy as np

from morphevo import xnes

d = 20
x0 = np.full(d, 10.0 / np.sqrt(d))
print("population size:", xnes.population_size(d))

###############################################################################
# ``minimize`` is a thin ask/tell loop. The callback sees every state, so we
# can watch the step size shrink and check that det(B) stays at one.

history = []
state, best_x, best_f = xnes.minimize(
    lambda x: float(x @ x), x0, sigma0=1.0, seed=0, max_generations=3000, target=1e-6,
    callback=lambda s, f: history.append((s.generation, s.sigma, f, np.linalg.det(s.shape))))

for gen, sigma, f, det in history[::250]:
    print(f"gen {gen:5d}  sigma {sigma:.3e}  best {f:.3e}  det(B) {det:.12f}")
print("solved in", state.generation, "generations, best", best_f)

###############################################################################
# The same loop by hand, which is what the generalist search does each
# generation with episode rewards in place of the sphere.

state = xnes.SearchState.initial(x0, 1.0, seed=1)
for _ in range(5):
    pop = xnes.ask(state)
    f = np.sum(pop.candidates ** 2, axis=1)
    state = xnes.tell(state, pop, f)
print("after 5 generations:", float(state.mean @ state.mean))
