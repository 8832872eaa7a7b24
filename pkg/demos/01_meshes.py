# %% [markdown]
# # Meshes of the unit square and cube
#
# Three families: split squares, Kuhn tetrahedra and the half-offset
# rectangle ("ladder") mesh whose odd rows create hanging vertices.

# %%
import io

import numpy as np

from hdgpoisson.mesh import build_ladder_mesh, build_unit_cube_simplex, build_unit_square_simplex

for name, mesh in [
    ("square n=4", build_unit_square_simplex(4)),
    ("cube n=2", build_unit_cube_simplex(2)),
    ("ladder n=4", build_ladder_mesh(4)),
]:
    print(f"{name:11s} elements {mesh.n_elements:4d}  faces {mesh.n_faces:4d}  "
          f"boundary {len(mesh.boundary_faces):3d}  h_max {mesh.h_max:.4f}  volume {mesh.volumes.sum():.12f}")

# %% [markdown]
# Every face has one or two neighbours.  On the ladder mesh the line y = 1/2
# is cut into the minimal segments between the vertices of both rows.

# %%
ladder = build_ladder_mesh(2)
v = ladder.vertices[ladder.face_vertices]
on = np.all(np.isclose(v[..., 1], 0.5), axis=1)
for F in np.flatnonzero(on):
    print(f"face {F}: x in [{v[F, :, 0].min():.2f}, {v[F, :, 0].max():.2f}]  elements {ladder.face_elements[F]}")

# %% [markdown]
# Outward normals close up on each element: the area-weighted sum vanishes.

# %%
worst = 0.0
for K in range(ladder.n_elements):
    F, s = ladder.element_faces[K], ladder.element_face_signs[K]
    worst = max(worst, np.abs((s[:, None] * ladder.face_area[F, None] * ladder.face_normal[F]).sum(0)).max())
print("max |sum of n ds| over elements:", worst)

# %% [markdown]
# Plain-text dump, first lines:

# %%
buf = io.StringIO()
build_unit_square_simplex(1).dump(buf)
print(buf.getvalue())
