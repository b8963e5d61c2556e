# %% [markdown]
# # Ballistic to diffusive spreading in a straight array
#
# Light injected in the centre of a uniform array spreads ballistically,
# variance growing as z^2. Strong segmented detuning turns this into
# diffusion, variance growing as z. The same crossover appears in the
# Lindblad model as p goes from 0 to 1.

# %%
import numpy as np

from qmaze.oracles import linear_array_benchmark, profile_variance

res = linear_array_benchmark(
    dbeta_list=[0.0, 4.0], p_grid=[0.0, 1.0], count=101, length=50.0, n_realizations=40
)
for name, g in res.exponents().items():
    print(f"{name:10s} variance exponent {g:.2f}")

# %%
for d, prof in res.noisy_mean.items():
    final = prof[-1]
    print(f"dbeta={d}: variance at 50 mm {profile_variance(final):7.1f}, peak at n={final.argmax() - 50}")
