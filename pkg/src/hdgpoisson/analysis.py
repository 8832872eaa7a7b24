"""Manufactured problems, error norms and convergence tables."""
from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from . import hdg
from .basis import quadrature
from .mesh import REFERENCE_SHAPE, build_mesh


@dataclass(frozen=True)
class ManufacturedProblem:
    """Exact ``u``, flux ``q = -grad u`` and source ``f = div q = -lap u``.

    Callbacks take points of shape ``(N, dim)``.
    """

    name: str
    dim: int
    u: callable
    q: callable
    f: callable


def _sine2d():
    pi = np.pi

    def u(x):
        return np.sin(pi * x[:, 0]) ** 2 * np.sin(pi * x[:, 1]) ** 2

    def q(x):
        sx, sy = np.sin(pi * x[:, 0]), np.sin(pi * x[:, 1])
        return -pi * np.stack([np.sin(2 * pi * x[:, 0]) * sy**2, sx**2 * np.sin(2 * pi * x[:, 1])], axis=-1)

    def f(x):
        sx, sy = np.sin(pi * x[:, 0]), np.sin(pi * x[:, 1])
        return -2 * pi**2 * (np.cos(2 * pi * x[:, 0]) * sy**2 + sx**2 * np.cos(2 * pi * x[:, 1]))

    return ManufacturedProblem("sine2d", 2, u, q, f)


def _poly3d():
    def b(t):
        return t * (t - 1)

    def u(x):
        return b(x[:, 0]) * b(x[:, 1]) * b(x[:, 2])

    def q(x):
        bx, by, bz = b(x[:, 0]), b(x[:, 1]), b(x[:, 2])
        dx, dy, dz = 2 * x[:, 0] - 1, 2 * x[:, 1] - 1, 2 * x[:, 2] - 1
        return -np.stack([dx * by * bz, bx * dy * bz, bx * by * dz], axis=-1)

    def f(x):
        bx, by, bz = b(x[:, 0]), b(x[:, 1]), b(x[:, 2])
        return -2 * (by * bz + bx * bz + bx * by)

    return ManufacturedProblem("poly3d", 3, u, q, f)


def _poly2d_quartic():
    def u(x):
        return x[:, 0] * (1 - x[:, 0]) * x[:, 1] * (1 - x[:, 1])

    def q(x):
        X, Y = x[:, 0], x[:, 1]
        return -np.stack([(1 - 2 * X) * Y * (1 - Y), X * (1 - X) * (1 - 2 * Y)], axis=-1)

    def f(x):
        X, Y = x[:, 0], x[:, 1]
        return 2 * (Y * (1 - Y) + X * (1 - X))

    return ManufacturedProblem("poly2d-quartic", 2, u, q, f)


PROBLEMS = {"sine2d": _sine2d, "poly3d": _poly3d, "poly2d-quartic": _poly2d_quartic}


def manufactured(name: str) -> ManufacturedProblem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


# ---------------------------------------------------------------------------
# error norms

_REF_VERTICES = {
    "triangle": np.array([[0, 0], [1, 0], [0, 1]], float),
    "rectangle": np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float),
    "tetrahedron": np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float),
}
_REF_SIDES = {
    "triangle": [(1, 2), (2, 0), (0, 1)],
    "rectangle": [(0, 1), (1, 2), (2, 3), (3, 0)],
    "tetrahedron": [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)],
}


def sample_points(shape: str, k: int, density: int = 1) -> np.ndarray:
    """Reference sample set for max-norm estimates.

    Nodes of the degree-(2k+4) rule (``density`` multiplies the points per
    direction), the vertices, the edge midpoints and the side centroids.
    """
    ref = REFERENCE_SHAPE[shape]
    npts = (k + 3) * density
    nodes = quadrature(ref, 2 * k + 4, npoints=npts).points
    V = _REF_VERTICES[shape]
    nv = len(V)
    edges = [(V[i] + V[j]) / 2 for i in range(nv) for j in range(i + 1, nv)]
    if shape == "rectangle":
        edges = [(V[a] + V[b]) / 2 for a, b in _REF_SIDES[shape]]
    sides = [V[list(s)].mean(axis=0) for s in _REF_SIDES[shape]]
    return np.unique(np.vstack([nodes, V, edges, sides]), axis=0)


def linf_error(fields, problem: ManufacturedProblem, density: int = 1, chunk: int = 4096):
    """Sampled ``(max |q - q_h|, max |u - u_h|)``; ``|.|`` is the Euclidean norm for q."""
    mesh = fields.mesh
    S = sample_points(mesh.shape, fields.k, density)
    e_q = e_u = 0.0
    d = mesh.dim
    for start in range(0, mesh.n_elements, chunk):
        elems = np.arange(start, min(start + chunk, mesh.n_elements))
        X = mesh.origins[elems][:, None, :] + np.einsum("pj,eij->epi", S, mesh.jacobians[elems])
        flat = X.reshape(-1, d)
        du = fields.u_at(elems, X) - problem.u(flat).reshape(X.shape[:2])
        dq = fields.q_at(elems, X) - problem.q(flat).reshape(X.shape)
        e_u = max(e_u, float(np.abs(du).max()))
        e_q = max(e_q, float(np.sqrt((dq**2).sum(-1)).max()))
    return e_q, e_u


def interface_faces(mesh, coord: float, axis: int = 0) -> np.ndarray:
    """Faces lying in the hyperplane ``x[axis] = coord``; raises if they do not cover it."""
    fx = mesh.vertices[mesh.face_vertices][..., axis]
    on = np.all(np.abs(fx - coord) <= 1e-12, axis=1)
    faces = np.flatnonzero(on)
    # the cut of the unit square/cube by an interior axis hyperplane has measure 1
    if not 0 < coord < 1 or abs(mesh.face_area[faces].sum() - 1.0) > 1e-10:
        raise ValueError(f"hyperplane x[{axis}] = {coord} is not a union of mesh faces")
    return faces


def interface_l2_error(fields, problem: ManufacturedProblem, coord: float = 0.5, axis: int = 0):
    """``(||q - q_h||, ||u - u_h||)`` in L2 on the interface, one-sided from the first neighbour."""
    mesh = fields.mesh
    faces = interface_faces(mesh, coord, axis)
    k = fields.k
    eq2 = eu2 = 0.0
    for F in faces:
        face = mesh.face(F)
        K = face.elements[0]
        rule = face.quadrature(2 * k + 4)
        pts = rule.points[None]
        du = fields.u_at(np.array([K]), pts)[0] - problem.u(rule.points)
        dq = fields.q_at(np.array([K]), pts)[0] - problem.q(rule.points)
        eu2 += rule.integrate(du**2)
        eq2 += rule.integrate((dq**2).sum(-1))
    return float(np.sqrt(eq2)), float(np.sqrt(eu2))


# ---------------------------------------------------------------------------
# rates and reports


def rates(h, errors) -> list:
    """Observed orders between successive levels; ``None`` for the first."""
    h = np.asarray(h, float)
    e = np.asarray(errors, float)
    out = [None]
    for i in range(1, len(h)):
        if e[i] == e[i - 1]:
            out.append(0.0)
        else:
            out.append(float(np.log(e[i - 1] / e[i]) / np.log(h[i - 1] / h[i])))
    return out


def fitted_slope(h, errors) -> float:
    """Least-squares slope of ``log e`` against ``log h``."""
    return float(np.polyfit(np.log(h), np.log(errors), 1)[0])


COLUMN_LABELS = {
    "q_inf": "q: L^inf(Omega)",
    "u_inf": "u: L^inf(Omega)",
    "q_gamma": "q: L^2(Gamma)",
    "u_gamma": "u: L^2(Gamma)",
}


@dataclass
class ErrorReport:
    """Errors per refinement level with observed rates between successive levels."""

    h: list
    errors: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.h) < 2:
            raise ValueError("a convergence table needs at least two levels")
        if np.any(np.diff(self.h) >= 0):
            raise ValueError("h must be strictly decreasing")

    def rates(self, key) -> list:
        return rates(self.h, self.errors[key])

    def final_rate(self, key) -> float:
        return self.rates(key)[-1]

    def to_csv(self) -> str:
        cols = list(self.errors)
        buf = io.StringIO()
        header = ["h"]
        for c in cols:
            header += [f"err_{c}", f"rate_{c}"]
        buf.write(",".join(header) + "\n")
        rate_cols = {c: self.rates(c) for c in cols}
        for i, h in enumerate(self.h):
            row = [f"{h:.10e}"]
            for c in cols:
                r = rate_cols[c][i]
                row += [f"{self.errors[c][i]:.10e}", "" if r is None else f"{r:.4f}"]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = ["| quantity | h | Error | Rate |", "|---|---|---|---|"]
        for c in self.errors:
            for i, h in enumerate(self.h):
                r = self.rates(c)[i]
                label = COLUMN_LABELS.get(c, c) if i == 0 else ""
                lines.append(
                    f"| {label} | 2^{np.log2(h):.0f} | {self.errors[c][i]:.2E} | "
                    + ("-" if r is None else f"{r:.2f}") + " |"
                )
        return "\n".join(lines) + "\n"


def convergence_table(runs) -> ErrorReport:
    """``runs``: sequence of ``(h, {name: error})`` from coarse to fine."""
    runs = list(runs)
    if len(runs) < 2:
        raise ValueError("a convergence table needs at least two levels")
    keys = list(runs[0][1])
    return ErrorReport([float(h) for h, _ in runs], {key: [float(e[key]) for _, e in runs] for key in keys})


def run_level(problem, family: str, dim: int, k: int, m: int, solver="auto", tol=1e-11,
              gamma: float | None = None, density: int = 1):
    """Solve one refinement level ``h = 2^-m`` and return its error dict."""
    mesh = build_mesh(family, dim, 2**m)
    t0 = time.perf_counter()
    fields = hdg.solve_poisson(mesh, k, problem.f, solver=solver, tol=tol)
    e_q, e_u = linf_error(fields, problem, density)
    errs = {"q_inf": e_q, "u_inf": e_u}
    if gamma is not None:
        errs["q_gamma"], errs["u_gamma"] = interface_l2_error(fields, problem, gamma)
    info = {
        "conservation": float(hdg.conservation_residual(fields).max(initial=0.0)),
        "q_h_inf": linf_error(fields, _zero_problem(dim), density)[0],
        "seconds": time.perf_counter() - t0,
    }
    return errs, info, fields


def _zero_problem(dim):
    def zero(x):
        return np.zeros(len(x))

    def zq(x):
        return np.zeros((len(x), dim))

    return ManufacturedProblem("zero", dim, zero, zq, zero)


def convergence_study(problem, family: str, dim: int, k: int, levels, solver="auto", tol=1e-11,
                      gamma: float | None = None, density: int = 1) -> ErrorReport:
    runs, infos = [], []
    for m in levels:
        errs, info, _ = run_level(problem, family, dim, k, m, solver, tol, gamma, density)
        runs.append((2.0**-m, errs))
        infos.append(info)
    report = convergence_table(runs)
    report.meta = dict(problem=problem.name, family=family, dim=dim, k=k, levels=list(levels), levels_info=infos)
    return report
