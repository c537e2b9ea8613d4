# # Products of eigenfunctions as a perturbed cosine basis
#
# Products of Dirichlet and Dirichlet-Neumann eigenfunction pairs, shifted
# and scaled, land close to the orthonormal cosines. If the squared
# distances sum to less than one, the system is a Riesz basis.

# %%
import numpy as np

from borg2m import Potential, random_potential
from borg2m.riesz import epsilon_sweep, riesz_criterion

# %%
zero = Potential([0.0])
v = riesz_criterion(zero, zero, m=1, N=32)
print("at q = 0:", v.sum, v.verdict, v.bounds)

# %%
rng = np.random.default_rng(11)
q1 = random_potential(rng, modes=6, norm=0.1)
q2 = random_potential(rng, modes=6, norm=0.1)
v = riesz_criterion(q1, q2, m=2, N=16)
print(f"norm 0.1: sum {v.sum:.3e} tail {v.tail:.1e} frame bounds "
      f"({v.bounds.a_lower:.5f}, {v.bounds.A_upper:.5f})")

# %% [markdown]
# Scaling the pair up until the criterion fails gives an empirical radius.

# %%
t_true, t_false = epsilon_sweep(q1, q2, m=2, N=8, rtol=1e-2)
print(f"criterion holds up to norm {t_true:.3f}, fails from {t_false:.3f}")
