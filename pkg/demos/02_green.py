# # Resolvent kernels and contour projections
#
# The free kernel is evaluated from a closed form plus an accelerated series.
# Adding the potential gives the perturbed kernel through a Neumann series.
# Integrating that kernel over a circle around the n-th free eigenvalue
# recovers the product of the n-th eigenfunction with itself.

# %%
import numpy as np

from borg2m import DIRICHLET, Grid, Potential, spectrum
from borg2m.green import Contour, free_kernel, kernel_bound_sweep, spectral_projection

# %% [markdown]
# For m = 1 the kernel has an elementary expression to compare against.

# %%
lam = 2.3
x, y = 0.7, 2.1
k = np.sqrt(lam)
closed = -np.sin(k * x) * np.sin(k * (np.pi - y)) / (k * np.sin(k * np.pi))
ev = free_kernel(DIRICHLET, 1, x, y, lam)
print("series", ev.value.real, "closed form", closed, "truncation", ev.truncation)

# %% [markdown]
# Contour projection for a small potential.

# %%
q = Potential([0.05, 0.1, -0.08])
g = Grid(65)
n, m = 4, 2
P = spectral_projection(DIRICHLET, m, q, n, contour=Contour(n, m), grid=g)
phi = spectrum(q, m, count=n, grid=g).values[n - 1]
print("projection vs eigenfunction product:", np.abs(P - np.outer(phi, phi)).max())
print("trace", g.integrate(np.diag(P)).real)

# %% [markdown]
# The kernel size on the contours scales like j^(1-2m). Dividing by the
# extra ln j makes the ratio drift slowly downward.

# %%
js = np.arange(4, 33, 4)
ratios, slope = kernel_bound_sweep(js, 2)
print(dict(zip(js.tolist(), ratios.round(4).tolist())), "slope", round(slope, 3))
