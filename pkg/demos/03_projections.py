# %% [markdown]
# # Local L2 projections and their approximation rates
#
# The element projection converges like h^(l+1) in L2 and like h^(l+1/2)
# on the element boundaries (the skeleton).

# %%
import numpy as np

from hdgpoisson.analysis import fitted_slope
from hdgpoisson.mesh import build_unit_square_simplex
from hdgpoisson.projections import element_boundary_l2_error, element_l2_error


def f(x):
    return np.sin(2 * x[:, 0] + x[:, 1]) * np.exp(x[:, 1])


meshes = [build_unit_square_simplex(n) for n in (4, 8, 16, 32)]
h = [m.h_max for m in meshes]
print(" l   interior slope   skeleton slope")
for ell in range(4):
    s_in = fitted_slope(h, [element_l2_error(f, m, ell) for m in meshes])
    s_bd = fitted_slope(h, [element_boundary_l2_error(f, m, ell) for m in meshes])
    print(f" {ell}   {s_in:6.3f}           {s_bd:6.3f}")
