"""Local L2 projections onto element and face polynomial spaces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .basis import ElementBasis, FaceBasis, element_basis, face_basis


class SingularGramError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ProjectedFunction:
    basis: ElementBasis | FaceBasis
    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return self.basis.degree

    @property
    def kind(self) -> str:
        return "element" if isinstance(self.basis, ElementBasis) else "face"

    def __call__(self, x) -> np.ndarray:
        return self.basis(x) @ self.coeffs


def _gram_solve(values, weights, rhs):
    G = values.T @ (weights[:, None] * values)
    try:
        fac = cho_factor(G)
    except LinAlgError as exc:
        raise SingularGramError("Gram matrix is not positive definite") from exc
    return cho_solve(fac, rhs)


def project_element(f, element, degree: int, qdeg: int | None = None) -> ProjectedFunction:
    """L2 projection of the callback ``f`` onto P^degree(element)."""
    basis = element_basis(element, degree)
    rule = element.quadrature(2 * degree + 4 if qdeg is None else qdeg)
    V = basis(rule.points)
    rhs = V.T @ (rule.weights * np.asarray(f(rule.points), dtype=float))
    return ProjectedFunction(basis, _gram_solve(V, rule.weights, rhs))


def project_face(g, face, degree: int, qdeg: int | None = None) -> ProjectedFunction:
    """L2 projection of the callback ``g`` onto P^degree(face)."""
    basis = face_basis(face, degree)
    rule = face.quadrature(2 * degree + 4 if qdeg is None else qdeg)
    V = basis(rule.points)
    rhs = V.T @ (rule.weights * np.asarray(g(rule.points), dtype=float))
    return ProjectedFunction(basis, _gram_solve(V, rule.weights, rhs))


def projection_matrix_face(element, face, element_degree: int, face_degree: int) -> np.ndarray:
    """Matrix taking P^element_degree(K) coefficients to face-projected trace coefficients."""
    eb = element_basis(element, element_degree)
    fb = face_basis(face, face_degree)
    rule = face.quadrature(element_degree + face_degree + 2)
    mu = fb(rule.points)
    B = mu.T @ (rule.weights[:, None] * eb(rule.points))
    return _gram_solve(mu, rule.weights, B)


def element_l2_error(f, mesh, degree: int, qdeg: int | None = None) -> float:
    """``||f - Pi_degree f||`` over the whole mesh."""
    total = 0.0
    for K in range(mesh.n_elements):
        el = mesh.element(K)
        p = project_element(f, el, degree, qdeg)
        rule = el.quadrature(2 * degree + 6)
        total += rule.integrate((f(rule.points) - p(rule.points)) ** 2)
    return float(np.sqrt(total))


def element_boundary_l2_error(f, mesh, degree: int) -> float:
    """``||f - Pi_degree f||`` on the element boundaries, each element taking its own trace."""
    total = 0.0
    for K in range(mesh.n_elements):
        p = project_element(f, mesh.element(K), degree)
        for F in mesh.element_faces[K]:
            rule = mesh.face(F).quadrature(2 * degree + 6)
            total += rule.integrate((f(rule.points) - p(rule.points)) ** 2)
    return float(np.sqrt(total))


def face_l2_error(g, mesh, degree: int) -> float:
    """``||g - Pi^partial_degree g||`` summed over every element boundary."""
    total = 0.0
    for K in range(mesh.n_elements):
        for F in mesh.element_faces[K]:
            face = mesh.face(F)
            p = project_face(g, face, degree)
            rule = face.quadrature(2 * degree + 6)
            total += rule.integrate((g(rule.points) - p(rule.points)) ** 2)
    return float(np.sqrt(total))
