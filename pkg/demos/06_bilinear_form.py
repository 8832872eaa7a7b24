# %% [markdown]
# # The HDG bilinear form
#
# B is symmetric and B(q, u, uhat; q, -u, -uhat) equals the energy
# ||q||^2 + ||h^(-1/2) (Pi u - uhat)||^2 on the element boundaries.  The
# discrete solution satisfies B(sol; test) = -(f, w) for every test bundle.

# %%
import numpy as np

from hdgpoisson import hdg
from hdgpoisson.mesh import build_ladder_mesh

mesh = build_ladder_mesh(2)
rng = np.random.default_rng(0)
for k in (0, 1, 2):
    a, b = hdg.random_fields(mesh, k, rng), hdg.random_fields(mesh, k, rng)
    print(f"k={k}  B(a;b)-B(b;a) = {hdg.apply_bilinear_B(a, b) - hdg.apply_bilinear_B(b, a):+.1e}  "
          f"B(a;flip a) - energy = {hdg.apply_bilinear_B(a, hdg.flip(a)) - hdg.energy_norm_sq(a):+.1e}")

# %% [markdown]
# Static condensation leaves an SPD system on the interior-face traces; its
# solution matches the full saddle-point system.

# %%
def f(x):
    return 1 + x[:, 0] * x[:, 1]


A, rhs, traces = hdg.assemble_monolithic(mesh, 1, f)
full = np.linalg.solve(A, rhs)[traces]
system = hdg.assemble_global(mesh, 1, f)
print("trace dofs:", system.size, " smallest eigenvalue:", np.linalg.eigvalsh(system.matrix.toarray()).min())
fields = hdg.solve_poisson(mesh, 1, f)
print("max difference to monolithic solve:", np.abs(fields.uhat[mesh.interior_faces].ravel() - full).max())
