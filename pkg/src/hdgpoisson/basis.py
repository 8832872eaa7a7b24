"""Total-degree monomial bases and quadrature rules.

Element bases are shifted-scaled monomials ``((x - c_K) / h_K) ** alpha`` with
``|alpha| <= degree`` in graded lexicographic order.  Face bases use the same
construction in an orthonormal in-plane frame anchored at the face centroid.

Reference shapes used by the quadrature rules:

* ``segment``     -- [0, 1]
* ``triangle``    -- (0,0), (1,0), (0,1)
* ``tetrahedron`` -- origin and the three unit vectors
* ``rectangle``   -- [0, 1]^2
* ``box``         -- [0, 1]^3
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from scipy.special import roots_jacobi

SHAPE_DIM = {"segment": 1, "triangle": 2, "tetrahedron": 3, "rectangle": 2, "box": 3}


def dim_poly(degree: int, d: int) -> int:
    """Dimension of the total-degree polynomial space P^degree in d variables."""
    if degree < 0:
        return 0
    return comb(degree + d, d)


@lru_cache(maxsize=None)
def multi_indices(degree: int, d: int) -> np.ndarray:
    """Exponents with ``|alpha| <= degree``, graded, then lexicographically descending.

    >>> multi_indices(1, 2).tolist()
    [[0, 0], [1, 0], [0, 1]]
    """
    out = []
    for total in range(degree + 1):
        out.extend(_compositions(total, d))
    arr = np.array(out, dtype=int).reshape(-1, d)
    arr.setflags(write=False)
    return arr


def _compositions(total, d):
    if d == 1:
        return [(total,)]
    res = []
    for first in range(total, -1, -1):
        res.extend((first,) + rest for rest in _compositions(total - first, d - 1))
    return res


def eval_monomials(xi: np.ndarray, degree: int) -> np.ndarray:
    """Monomials of scaled coordinates ``xi`` (shape ``(..., d)``) -> ``(..., m)``."""
    xi = np.asarray(xi, dtype=float)
    alpha = multi_indices(degree, xi.shape[-1])
    # powers[..., p, a] = xi[..., a] ** p, built by repeated products (exact for small p)
    pw = np.ones(xi.shape[:-1] + (degree + 1, xi.shape[-1]))
    for p in range(1, degree + 1):
        pw[..., p, :] = pw[..., p - 1, :] * xi
    vals = np.ones(xi.shape[:-1] + (len(alpha),))
    for a in range(xi.shape[-1]):
        vals = vals * pw[..., alpha[:, a], a]
    return vals


def eval_monomial_gradients(xi: np.ndarray, degree: int, scale) -> np.ndarray:
    """Gradients w.r.t. physical x of ``((x - c) / scale) ** alpha`` -> ``(..., m, d)``.

    ``scale`` broadcasts against the leading axes of ``xi``.
    """
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    alpha = multi_indices(degree, d)
    pw = np.ones(xi.shape[:-1] + (degree + 1, d))
    for p in range(1, degree + 1):
        pw[..., p, :] = pw[..., p - 1, :] * xi
    grads = np.empty(xi.shape[:-1] + (len(alpha), d))
    for b in range(d):
        g = np.ones(xi.shape[:-1] + (len(alpha),))
        for a in range(d):
            if a == b:
                lowered = np.maximum(alpha[:, a] - 1, 0)
                g = g * pw[..., lowered, a] * alpha[:, a]
            else:
                g = g * pw[..., alpha[:, a], a]
        grads[..., b] = g
    return grads / np.asarray(scale, dtype=float)[..., None, None]


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights; ``degree`` is the guaranteed polynomial exactness."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def mapped(self, origin, jacobian) -> "QuadratureRule":
        """Push the rule through ``x = origin + jacobian @ xi``."""
        jacobian = np.atleast_2d(np.asarray(jacobian, dtype=float))
        pts = np.asarray(origin, dtype=float) + self.points @ jacobian.T
        if jacobian.shape[0] == jacobian.shape[1]:
            meas = abs(np.linalg.det(jacobian))
        else:
            meas = np.sqrt(abs(np.linalg.det(jacobian.T @ jacobian)))
        return QuadratureRule(pts, self.weights * meas, self.degree)


def _gauss_01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def _jacobi_01(n, alpha):
    # nodes/weights for int_0^1 g(t) (1 - t)^alpha dt
    x, w = roots_jacobi(n, alpha, 0.0)
    return (x + 1) / 2, w / 2 ** (alpha + 1)


def _npoints(degree):
    return max(1, (degree + 2) // 2)


@lru_cache(maxsize=None)
def _reference_rule(shape, degree, npts):
    if shape == "segment":
        x, w = _gauss_01(npts)
        return x[:, None], w
    if shape in ("rectangle", "box"):
        d = SHAPE_DIM[shape]
        x, w = _gauss_01(npts)
        grids = np.meshgrid(*([x] * d), indexing="ij")
        wgrids = np.meshgrid(*([w] * d), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return pts, np.prod([g.ravel() for g in wgrids], axis=0)
    if shape == "triangle":
        s, ws = _gauss_01(npts)
        t, wt = _jacobi_01(npts, 1)
        S, T = np.meshgrid(s, t, indexing="ij")
        W = np.outer(ws, wt)
        pts = np.stack([(S * (1 - T)).ravel(), T.ravel()], axis=-1)
        return pts, W.ravel()
    if shape == "tetrahedron":
        s, ws = _gauss_01(npts)
        t, wt = _jacobi_01(npts, 1)
        r, wr = _jacobi_01(npts, 2)
        S, T, R = np.meshgrid(s, t, r, indexing="ij")
        W = ws[:, None, None] * wt[None, :, None] * wr[None, None, :]
        pts = np.stack(
            [(S * (1 - T) * (1 - R)).ravel(), (T * (1 - R)).ravel(), R.ravel()], axis=-1
        )
        return pts, W.ravel()
    raise ValueError(f"unsupported shape {shape!r}")


def quadrature(shape: str, degree: int, npoints: int | None = None) -> QuadratureRule:
    """Reference rule on ``shape`` exact for total degree ``degree``.

    Simplices use collapsed tensor Gauss-Jacobi, tensor shapes Gauss-Legendre.
    ``npoints`` overrides the number of points per direction.
    """
    if shape not in SHAPE_DIM:
        raise ValueError(f"unsupported shape {shape!r}")
    if degree < 0:
        raise ValueError("quadrature degree must be >= 0")
    n = _npoints(degree) if npoints is None else int(npoints)
    pts, w = _reference_rule(shape, degree, n)
    return QuadratureRule(pts, w, 2 * n - 1)


def reference_monomial_integral(shape: str, alpha) -> float:
    """Closed-form integral of ``x ** alpha`` over the reference shape."""
    from math import factorial

    alpha = tuple(int(a) for a in alpha)
    if shape in ("segment", "rectangle", "box"):
        return float(np.prod([1.0 / (a + 1) for a in alpha]))
    num = np.prod([factorial(a) for a in alpha])
    return num / factorial(sum(alpha) + len(alpha))


# ---------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class ElementBasis:
    """Scaled monomial basis of P^degree on one element."""

    degree: int
    centroid: np.ndarray
    scale: float

    @property
    def dim(self) -> int:
        return len(self.centroid)

    @property
    def size(self) -> int:
        return dim_poly(self.degree, self.dim)

    def local_coords(self, x):
        return (np.asarray(x, dtype=float) - self.centroid) / self.scale

    def __call__(self, x) -> np.ndarray:
        return eval_monomials(self.local_coords(x), self.degree)

    def grad(self, x) -> np.ndarray:
        return eval_monomial_gradients(self.local_coords(x), self.degree, self.scale)


def element_basis(element, degree: int) -> ElementBasis:
    """Basis of P^degree on ``element`` (anything with ``centroid`` and ``diameter``)."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    return ElementBasis(degree, np.asarray(element.centroid, dtype=float), float(element.diameter))


def face_frame(points: np.ndarray) -> np.ndarray:
    """Orthonormal in-plane axes from ordered face vertices.

    ``points`` has shape ``(..., nv, d)``; the result has shape ``(..., d-1, d)``.
    The first axis runs from vertex 0 to vertex 1.
    """
    points = np.asarray(points, dtype=float)
    e1 = points[..., 1, :] - points[..., 0, :]
    e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
    if points.shape[-1] == 2:
        return e1[..., None, :]
    e2 = points[..., 2, :] - points[..., 0, :]
    e2 = e2 - (e2 * e1).sum(-1, keepdims=True) * e1
    e2 = e2 / np.linalg.norm(e2, axis=-1, keepdims=True)
    return np.stack([e1, e2], axis=-2)


def face_diameter(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    diff = points[..., :, None, :] - points[..., None, :, :]
    return np.sqrt((diff**2).sum(-1)).max(axis=(-1, -2))


@dataclass(frozen=True)
class FaceBasis:
    """Scaled monomial basis of P^degree on a planar face, in face-local coordinates."""

    degree: int
    centroid: np.ndarray
    frame: np.ndarray
    scale: float

    @property
    def size(self) -> int:
        return dim_poly(self.degree, self.frame.shape[0])

    def local_coords(self, x):
        return ((np.asarray(x, dtype=float) - self.centroid) @ self.frame.T) / self.scale

    def __call__(self, x) -> np.ndarray:
        return eval_monomials(self.local_coords(x), self.degree)


def face_basis(face, degree: int) -> FaceBasis:
    """Basis of P^degree on ``face`` (needs ``points``, ``centroid``, ``diameter``)."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    pts = np.asarray(face.points, dtype=float)
    diam = float(face_diameter(pts))
    if diam <= 0 or getattr(face, "area", 1.0) <= 0:
        raise ValueError("degenerate face")
    return FaceBasis(degree, np.asarray(face.centroid, dtype=float), face_frame(pts), float(diam))
