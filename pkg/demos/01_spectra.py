# # Eigenvalues and eigenfunctions
#
# The operator is (-1)^m y^(2m) + q y on (0, pi) with either Dirichlet
# conditions at both ends or Dirichlet at 0 and Neumann-type at pi.
# Potentials are real cosine series.

# %%
import numpy as np

from borg2m import DIRICHLET, DIRICHLET_NEUMANN, Grid, Potential, spectrum
from borg2m.oracle import fd_eigenvalues_richardson

# %% [markdown]
# With q = 0 the spectrum is known exactly: n^(2m) and (n - 1/2)^(2m).

# %%
for bc in (DIRICHLET, DIRICHLET_NEUMANN):
    sd = spectrum(Potential([0.0]), m=2, bc=bc, count=5)
    print(bc.value, sd.eigenvalues)

# %% [markdown]
# A small potential shifts every eigenvalue by roughly its mean.
# The finite-difference oracle gives an independent check.

# %%
q = Potential([0.1, -0.2, 0.15, 0.05])
for m in (1, 2):
    galerkin = spectrum(q, m, count=5, grid=Grid(8)).eigenvalues
    fd = fd_eigenvalues_richardson(q, m, count=5)
    print(f"m={m}", galerkin.round(8), "max rel diff", np.max(np.abs(galerkin - fd) / fd))

# %% [markdown]
# Eigenfunctions are sampled on a grid, normalized in L2 and signed so that
# they agree with the free sine near the left end.

# %%
sd = spectrum(q, 1, count=3, grid=Grid(257))
x = sd.grid.nodes
for n, phi in enumerate(sd.values, 1):
    free = np.sqrt(2 / np.pi) * np.sin(n * x)
    print(n, "norm", f"{float(sd.grid.integrate(phi**2)):.12f}", "sup dev", np.abs(phi - free).max())
