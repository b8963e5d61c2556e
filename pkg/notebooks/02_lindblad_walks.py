# %% [markdown]
# # Quantum stochastic walks with a sink
#
# The mixing parameter p moves the dynamics from a coherent quantum walk
# (p = 0) to a classical random walk (p = 1). The sink drains the OUT site,
# and its population is the transfer efficiency E.

# %%
import numpy as np

from qmaze.layout import maze_couplings
from qmaze.maze import GridSpec, generate_maze
from qmaze.qsw import QswParams, build_generator, evolve, initial_state, sweep_p, transfer_efficiency

pair = np.array([[0.0, 1.0], [1.0, 0.0]])
for p in (0.0, 1.0):
    spec = build_generator(pair, QswParams(p, gamma=0.0))
    traj = evolve(initial_state(spec), spec, t_end=1.0, h=1e-3, n_samples=4)
    print(f"p={p}: rho_11(1) = {traj.rhos[-1][0, 0].real:.6f}")
print("closed forms:", np.cos(1.0) ** 2, 0.5 * (1 + np.exp(-2.0)))

# %% [markdown]
# The RK4 integrator reports trace, smallest eigenvalue and purity at every
# sample; E is cross-checked against 2*gamma times the integral of rho_NN.

# %%
maze = generate_maze(GridSpec(4, 4, seed=1))
K = maze_couplings(maze)
spec = build_generator(K, QswParams(0.1, gamma=1.0, sink_node=maze.out_node))
traj = evolve(initial_state(spec, maze.in_node), spec, t_end=160.0, h=0.02, n_samples=8)
eff = transfer_efficiency(traj)
for t, E, tr, lam in zip(traj.times, eff.values, traj.trace, traj.min_eig):
    print(f"t={t:6.1f}  E={E:.4f}  E+Tr={E + tr:.8f}  min eig={lam:+.1e}")

# %% [markdown]
# A p sweep at t = 10 N shows the noise-assisted optimum at small p.

# %%
rows = sweep_p(K, [1.0], np.round(np.arange(0, 1.01, 0.1), 2), 160.0, maze.in_node, maze.out_node)
for r in rows:
    print(f"p={r['p']:.1f}  E={r['E']:.4f}")
