# # How fast do eigenvalues and eigenfunctions approach the free ones?
#
# The eigenvalue residual removes the mean of q and half of the matching
# cosine coefficient. What is left should decay like n^-2 or faster.

# %%
import numpy as np

from borg2m import DIRICHLET, DIRICHLET_NEUMANN, Grid, Potential
from borg2m.asymptotics import (
    continuity_probe,
    eigenfunction_sup_errors,
    eigenvalue_residuals,
    fit_decay,
)

# %%
q = Potential([0, 0, 0.3, 0, 0.1])
for m in (1, 2):
    ns, res, notes = eigenvalue_residuals(q, m, np.arange(4, 33))
    rep = fit_decay(ns, res, claimed_slope=-2.0)
    print(f"m={m} slope {rep.fitted_slope:.3f} passes {rep.passes}", notes)

# %% [markdown]
# Eigenfunction deviations, fitted after dividing out ln n.

# %%
u = Potential([0.2, 0.5, -0.3, 0.4, 0.1])
q = u.scaled(0.5 / u.norm)
for m in (1, 2):
    for bc in (DIRICHLET, DIRICHLET_NEUMANN):
        ns, err, _ = eigenfunction_sup_errors(q, m, np.arange(4, 33), bc, grid=Grid(1024))
        rep = fit_decay(ns, err, log_correction=True, claimed_slope=-(2 * m - 1))
        print(f"m={m} {bc.value}: slope {rep.fitted_slope:.2f}")

# %% [markdown]
# Shrinking the potential shrinks the eigenfunction deviation linearly.

# %%
table = continuity_probe(3, DIRICHLET, 2, [0.4, 0.2, 0.1, 0.05], n_directions=2)
print(table)
