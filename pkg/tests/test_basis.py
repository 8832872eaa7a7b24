from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdgpoisson.basis import (
    SHAPE_DIM,
    dim_poly,
    element_basis,
    face_basis,
    multi_indices,
    quadrature,
    reference_monomial_integral,
)
from hdgpoisson.mesh import build_ladder_mesh, build_unit_cube_simplex, build_unit_square_simplex


@pytest.mark.parametrize("shape", sorted(SHAPE_DIM))
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_quadrature_matches_closed_form(shape, k):
    top = 2 * k + 4
    rule = quadrature(shape, top)
    assert rule.degree >= top
    for alpha in multi_indices(top, SHAPE_DIM[shape]):
        exact = reference_monomial_integral(shape, alpha)
        approx = rule.integrate(np.prod(rule.points**alpha, axis=1))
        assert approx == pytest.approx(exact, rel=1e-12), alpha


def test_quadrature_hand_values():
    seg = quadrature("segment", 3)
    assert len(seg.weights) == 2
    assert seg.integrate(seg.points[:, 0] ** 3) == pytest.approx(0.25, abs=1e-15)
    tri = quadrature("triangle", 2)
    assert tri.integrate(tri.points[:, 0] * tri.points[:, 1]) == pytest.approx(1 / 24, abs=1e-14)
    assert quadrature("tetrahedron", 0).weights.sum() == pytest.approx(1 / 6, abs=1e-15)


def test_triangle_closed_form_by_iterated_integral():
    # int over the triangle of x^a y^b = int_0^1 x^a (1-x)^(b+1) / (b+1) dx
    seg = quadrature("segment", 20)
    x = seg.points[:, 0]
    for a, b in [(0, 0), (1, 1), (3, 2), (0, 5)]:
        brute = seg.integrate(x**a * (1 - x) ** (b + 1) / (b + 1))
        assert reference_monomial_integral("triangle", (a, b)) == pytest.approx(brute, rel=1e-13)


def test_unsupported_shape():
    with pytest.raises(ValueError):
        quadrature("hexagon", 2)
    with pytest.raises(ValueError):
        quadrature("triangle", -1)


def test_physical_rule_weights_sum_to_volume():
    for mesh in (build_unit_square_simplex(2), build_unit_cube_simplex(1), build_ladder_mesh(2)):
        for K in range(mesh.n_elements):
            el = mesh.element(K)
            assert el.quadrature(4).weights.sum() == pytest.approx(el.volume, rel=1e-13)
        for F in range(mesh.n_faces):
            face = mesh.face(F)
            assert face.quadrature(2).weights.sum() == pytest.approx(face.area, rel=1e-13)


def test_basis_sizes():
    el = build_unit_square_simplex(1).element(0)
    assert element_basis(el, 0).size == 1
    assert element_basis(el, 2).size == 6
    m3 = build_unit_cube_simplex(1)
    assert element_basis(m3.element(0), 3).size == 20
    assert face_basis(m3.face(0), 0).size == 1
    assert face_basis(m3.face(0), 2).size == 6
    m2 = build_unit_square_simplex(1)
    assert face_basis(m2.face(0), 3).size == 4


def test_constant_basis_function():
    el = build_unit_square_simplex(2).element(3)
    x = np.random.default_rng(0).random((10, 2))
    np.testing.assert_array_equal(element_basis(el, 0)(x), np.ones((10, 1)))


def test_linear_gradient_in_3d():
    el = build_unit_cube_simplex(2).element(5)
    b = element_basis(el, 1)
    x = np.random.default_rng(1).random((7, 3))
    g = b.grad(x)
    # graded order: 1, then the three linear monomials with x first
    np.testing.assert_allclose(g[:, 1], np.tile([1 / el.diameter, 0, 0], (7, 1)), rtol=1e-15)


@pytest.mark.parametrize("mesh", [build_unit_square_simplex(2), build_unit_cube_simplex(1), build_ladder_mesh(2)],
                         ids=["triangle", "tetrahedron", "rectangle"])
@pytest.mark.parametrize("degree", [1, 3])
def test_gradients_against_finite_differences(mesh, degree):
    rng = np.random.default_rng(2)
    for K in range(0, mesh.n_elements, 3):
        el = mesh.element(K)
        b = element_basis(el, degree)
        x = el.centroid + 0.3 * el.diameter * (rng.random((100, mesh.dim)) - 0.5)
        eps = 1e-6 * el.diameter
        g = b.grad(x)
        for a in range(mesh.dim):
            dx = np.zeros(mesh.dim)
            dx[a] = eps
            fd = (b(x + dx) - b(x - dx)) / (2 * eps)
            scale = np.abs(g[:, :, a]).max() + 1 / el.diameter
            assert np.abs(fd - g[:, :, a]).max() <= 1e-6 * scale


@pytest.mark.parametrize("family", ["square", "cube", "ladder"])
def test_mass_conditioning_independent_of_h(family):
    build = {
        "square": lambda n: build_unit_square_simplex(n),
        "cube": lambda n: build_unit_cube_simplex(n),
        "ladder": lambda n: build_ladder_mesh(2 * n),
    }[family]
    conds = []
    for n in (1, 2, 4):
        el = build(n).element(0)
        b = element_basis(el, 2)
        rule = el.quadrature(8)
        V = b(rule.points)
        M = V.T @ (rule.weights[:, None] * V)
        np.linalg.cholesky(M)
        conds.append(np.linalg.cond(M))
    assert max(conds) / min(conds) < 1.05


def test_segment_face_mass():
    L = 0.37
    face = SimpleNamespace(points=np.array([[0.1, 0.2], [0.1 + L, 0.2]]), centroid=np.array([0.1 + L / 2, 0.2]),
                           area=L)
    fb = face_basis(face, 1)
    rule = quadrature("segment", 4).mapped(face.points[0], (face.points[1] - face.points[0])[:, None])
    V = fb(rule.points)
    M = V.T @ (rule.weights[:, None] * V)
    np.testing.assert_allclose(M, np.diag([L, L / 12]), atol=1e-15)


def test_degenerate_face():
    face = SimpleNamespace(points=np.zeros((2, 2)), centroid=np.zeros(2), area=0.0)
    with pytest.raises(ValueError, match="degenerate"):
        face_basis(face, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.integers(1, 3))
def test_multi_indices_graded(degree, d):
    idx = multi_indices(degree, d)
    assert len(idx) == dim_poly(degree, d)
    total = idx.sum(axis=1)
    assert np.all(np.diff(total) >= 0)
    assert len({tuple(r) for r in idx}) == len(idx)
