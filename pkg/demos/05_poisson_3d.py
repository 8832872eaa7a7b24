# %% [markdown]
# # Mixed Poisson in 3D on Kuhn tetrahedra
#
# u = x(x-1) y(y-1) z(z-1).  Levels m = 1..3 run in seconds; add m = 4 with
# the PCG solver (``solver="pcg"``) for the asymptotic flux rates, which
# take about half a minute in total.

# %%
import sys

from hdgpoisson.analysis import convergence_study, manufactured

levels = [1, 2, 3, 4] if "--fine" in sys.argv else [1, 2, 3]
problem = manufactured("poly3d")
for k in (0, 1, 2):
    report = convergence_study(problem, "simplex", 3, k, levels, solver="auto" if levels[-1] < 4 else "pcg")
    print(f"### k = {k}")
    print(report.to_markdown())
