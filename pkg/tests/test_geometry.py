import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflab.errors import DegenerateElementError, OpenBoundaryError
from mcflab.geometry import (
    Hypersurface,
    compute_geometry,
    element_measure,
    laplace_beltrami,
    second_fundamental_form_norm2,
    tangential_gradient_norm,
    validate,
)
from mcflab.shapes import circle, ellipse, icosphere


# ---------------------------------------------------------------- validation


def test_validate_closed_curve():
    assert validate(circle(128)).ok


def test_validate_closed_surface():
    assert validate(icosphere(3)).ok


def test_open_boundary_detected():
    m = icosphere(1)
    holed = Hypersurface(m.vertices, m.cells[1:])
    rep = validate(holed)
    assert "OpenBoundary" in rep.kinds()
    with pytest.raises(OpenBoundaryError):
        rep.raise_for_violations()


def test_flipped_triangle_detected():
    m = icosphere(1)
    cells = m.cells.copy()
    cells[0] = cells[0, ::-1]
    assert "InconsistentOrientation" in validate(Hypersurface(m.vertices, cells)).kinds()


def test_curve_vertex_of_degree_three_is_nonmanifold():
    m = circle(16)
    cells = np.vstack([m.cells, [[0, 8]]])
    assert "NonManifold" in validate(Hypersurface(m.vertices, cells)).kinds()


def test_zero_length_edge_is_degenerate():
    m = circle(16)
    x = m.vertices.copy()
    x[1] = x[0]
    assert "DegenerateElement" in validate(Hypersurface(x, m.cells)).kinds()
    with pytest.raises(DegenerateElementError):
        compute_geometry(Hypersurface(x, m.cells))


def test_collapsed_triangle_is_degenerate():
    m = icosphere(1)
    x = m.vertices.copy()
    a, b, c = m.cells[0]
    x[c] = 0.5 * (x[a] + x[b])
    assert "DegenerateElement" in validate(Hypersurface(x, m.cells)).kinds()


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        Hypersurface(np.zeros((4, 3)), np.array([[0, 1], [1, 2], [2, 3], [3, 0]]))


# ---------------------------------------------------------------- curvature


def test_unit_circle_curvature():
    m = compute_geometry(circle(128))
    # turning angle 2 pi/N over edge 2 sin(pi/N): error about (pi/N)^2 / 6
    assert np.max(np.abs(m.H - 1.0)) < 1.1e-4
    assert np.allclose(m.principal[:, 0], m.H)


def test_unit_sphere_curvature_level4():
    m = compute_geometry(icosphere(4))
    assert np.max(np.abs(m.H - 2.0)) < 1e-6
    assert np.max(np.abs(m.principal - 1.0)) < 1e-3


def test_ellipse_vertex_curvature():
    # kappa = ab / (a^2 sin^2 + b^2 cos^2)^{3/2}; at theta = 0 this is a/b^2 = 2
    m = compute_geometry(ellipse(512, 2.0, 1.0))
    assert m.H[0] == pytest.approx(2.0, rel=1e-3)


def test_ellipse_curvature_everywhere():
    a, b = 2.0, 1.0
    m = compute_geometry(ellipse(1024, a, b))
    th = 2 * np.pi * np.arange(1024) / 1024
    kappa = a * b / (a**2 * np.sin(th) ** 2 + b**2 * np.cos(th) ** 2) ** 1.5
    assert np.max(np.abs(m.H - kappa)) < 1e-3


@pytest.mark.parametrize("mesh", [circle(64), icosphere(3)], ids=["circle", "sphere"])
def test_normals_unit_and_outward(mesh):
    m = compute_geometry(mesh)
    assert np.max(np.abs(np.linalg.norm(m.normals, axis=1) - 1.0)) < 1e-12
    assert np.all(np.einsum("ij,ij->i", m.normals, m.vertices) > 0)


def test_clockwise_circle_keeps_positive_curvature():
    m = circle(64)
    rev = Hypersurface(m.vertices[::-1].copy(), m.cells)
    g = compute_geometry(rev)
    assert np.all(g.H > 0)


@pytest.mark.parametrize("mesh", [circle(100), ellipse(80), icosphere(2), icosphere(3)])
def test_area_weights_sum_to_polyhedral_measure(mesh):
    m = compute_geometry(mesh)
    exact = element_measure(m).sum()
    assert abs(m.area.sum() - exact) <= 1e-12 * exact


def test_inscribed_polygon_length():
    m = compute_geometry(circle(128))
    assert m.total_area == pytest.approx(2 * 128 * np.sin(np.pi / 128), rel=1e-13)


@pytest.mark.parametrize("level", [2, 3, 4])
def test_principal_sum_matches_H(level):
    m = compute_geometry(icosphere(level))
    assert np.max(np.abs(m.principal.sum(axis=1) - m.H)) < 1e-12


def test_torus_principal_curvatures():
    from mcflab.shapes import torus

    m = compute_geometry(torus(2.0, 1.0, 96, 48))
    v = 2 * np.pi * (np.arange(96 * 48) % 48) / 48
    k_tube = np.ones_like(v)
    k_ring = np.cos(v) / (2.0 + np.cos(v))
    exact = np.sort(np.column_stack([k_tube, k_ring]), axis=1)
    assert np.max(np.abs(np.sort(m.principal, axis=1) - exact)) < 0.02
    assert np.max(np.abs(m.curvature_tol)) < 0.05


def _order(errors, hs):
    return np.polyfit(np.log(hs), np.log(errors), 1)[0]


def test_circle_refinement_order():
    Ns = [32, 64, 128, 256]
    errs = [np.max(np.abs(compute_geometry(circle(N)).H - 1.0)) for N in Ns]
    assert _order(errs, [1.0 / N for N in Ns]) >= 1.8


def test_sphere_refinement_order():
    levels = [1, 2, 3]
    errs = []
    for L in [2, 3, 4]:
        errs.append(np.max(np.abs(compute_geometry(icosphere(L)).H - 2.0)))
    assert _order(errs, [2.0**-L for L in levels]) >= 1.8
    # the quadric fit reaches its asymptotic rate a level later than H
    pr = [np.max(np.abs(compute_geometry(icosphere(L)).principal - 1.0)) for L in [3, 4, 5]]
    assert _order(pr, [2.0**-L for L in levels]) >= 1.8


def test_geometry_snapshot_is_read_only():
    m = compute_geometry(icosphere(1))
    with pytest.raises(ValueError):
        m.H[0] = 0.0
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 1.0


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(0.05, 20.0), shift=st.tuples(*[st.floats(-5, 5)] * 3))
def test_curvature_scales_inversely(scale, shift):
    base = compute_geometry(icosphere(2))
    moved = compute_geometry(Hypersurface(base.vertices * scale + np.array(shift), base.cells))
    assert np.allclose(moved.H * scale, base.H, rtol=1e-8, atol=1e-8)
    assert np.allclose(moved.area, base.area * scale**2, rtol=1e-9)


@settings(max_examples=25, deadline=None)
@given(angle=st.floats(0, 2 * np.pi), scale=st.floats(0.1, 10.0))
def test_curve_curvature_invariant_under_rotation(angle, scale):
    base = compute_geometry(ellipse(64))
    R = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    moved = compute_geometry(Hypersurface(base.vertices @ R.T * scale, base.cells))
    assert np.allclose(moved.H * scale, base.H, rtol=1e-9, atol=1e-12)


# ---------------------------------------------------------------- operators


@pytest.mark.parametrize("mesh", [circle(50), icosphere(2), ellipse(40)])
def test_laplacian_annihilates_constants(mesh):
    m = compute_geometry(mesh)
    assert np.max(np.abs(laplace_beltrami(m, np.full(m.n_vertices, 3.7)))) < 1e-10


@pytest.mark.parametrize("mesh", [circle(50), icosphere(2)])
def test_laplacian_self_adjoint_for_area_weights(mesh, rng):
    m = compute_geometry(mesh)
    f, g = rng.normal(size=(2, m.n_vertices))
    lhs = np.sum(laplace_beltrami(m, f) * g * m.area)
    rhs = np.sum(f * laplace_beltrami(m, g) * m.area)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_coordinate_is_laplacian_eigenfunction_on_sphere():
    # on the unit sphere Delta x = -2 x
    m = compute_geometry(icosphere(4))
    x = m.vertices[:, 0]
    assert np.max(np.abs(laplace_beltrami(m, x) + 2.0 * x)) < 1e-2


def test_squared_distance_from_center_is_harmonic_on_sphere():
    m = compute_geometry(icosphere(3))
    f = np.sum(m.vertices**2, axis=1)
    assert np.max(np.abs(laplace_beltrami(m, f))) < 1e-10


def test_laplacian_of_position_is_mean_curvature_vector():
    for L, tol in [(3, 3e-2), (4, 1e-2)]:
        m = compute_geometry(icosphere(L))
        lap = laplace_beltrami(m, m.vertices)
        # the normal component is H by definition of the estimator
        assert np.max(np.abs(np.einsum("ij,ij->i", lap, m.normals) + m.H)) < 1e-10
        assert np.max(np.abs(lap + m.H[:, None] * m.normals)) < tol


def test_gradient_of_constant_is_zero():
    m = compute_geometry(icosphere(2))
    assert np.max(tangential_gradient_norm(m, np.full(m.n_vertices, 5.0))) < 1e-12


def test_gradient_of_x_on_circle():
    m = compute_geometry(circle(256))
    th = np.arctan2(m.vertices[:, 1], m.vertices[:, 0])
    assert np.max(np.abs(tangential_gradient_norm(m, m.vertices[:, 0]) - np.abs(np.sin(th)))) < 5e-4


def test_gradient_of_x_on_sphere():
    m = compute_geometry(icosphere(4))
    x = m.vertices[:, 0]
    assert np.max(np.abs(tangential_gradient_norm(m, x) - np.sqrt(1 - x * x))) < 1e-2


def test_second_fundamental_form_norm_on_sphere():
    m = compute_geometry(icosphere(3))
    assert np.allclose(second_fundamental_form_norm2(m), 2.0, atol=5e-3)
