# %% [markdown]
# # Mazes and waveguide layouts
#
# A perfect maze is a spanning tree of a grid graph, grown by a seeded
# depth-first search. IN and OUT sit at opposite corners. To build it as a
# waveguide array the tree is unfolded: the IN to OUT path becomes a straight
# chain and every dead end hangs off it as a perpendicular tail.

# %%
import numpy as np

from qmaze.instances import maze18
from qmaze.layout import append_sink_chain, layout_to_couplings, unfold
from qmaze.maze import GridSpec, extract_solution_path, generate_maze

maze = generate_maze(GridSpec(6, 6, seed=3))
print(len(maze.edges), "edges, IN", maze.in_node, "OUT", maze.out_node)
print("solution path:", extract_solution_path(maze))

# %% [markdown]
# Random 6x6 mazes usually have branching dead-end subtrees, which the
# chain-with-tails unfolding refuses rather than guessing an embedding.

# %%
from qmaze.layout import UnfoldInfeasible

try:
    unfold(maze)
except UnfoldInfeasible as err:
    print("cannot unfold:", err)

# %% [markdown]
# The shipped 18-site instance is a chain of 10 with five short tails.

# %%
layout = unfold(maze18())
print("main chain:", layout.main_chain)
print("tails:", layout.tails)

grid = np.full((7, 12), " . ")
shift = layout.positions - layout.positions.min(axis=0)
for node, (x, y) in enumerate(shift):
    grid[-1 - y, x] = f"{node:>2} "
print("\n".join("".join(row) for row in grid))

# %% [markdown]
# Couplings: 0.40 per mm between nearest neighbours, 20% of that across
# diagonals. A 62-waveguide sink continues the chain past OUT.

# %%
K = layout_to_couplings(layout, 0.40)
K80, extended = append_sink_chain(K, layout, 62)
print(K.shape, "->", K80.shape)
print("distinct coupling values:", sorted({round(float(v), 3) for v in K80[K80 > 0]}))
