import numpy as np
import pytest

from mcflab.errors import ResolutionTooLowError
from mcflab.formats import read_mesh, write_mesh
from mcflab.geometry import compute_geometry, validate
from mcflab.shapes import (
    circle,
    dumbbell,
    ellipse,
    euler_characteristic,
    graded_sphere,
    icosphere,
    neck_mask,
    star_shaped,
    torus,
)


@pytest.mark.parametrize("level, nv, nf", [(0, 12, 20), (1, 42, 80), (2, 162, 320), (3, 642, 1280)])
def test_icosphere_counts(level, nv, nf):
    m = icosphere(level)
    assert m.n_vertices == nv == 10 * 4**level + 2
    assert len(m.cells) == nf
    assert euler_characteristic(m) == 2


def test_circle_vertex_count_and_perimeter():
    m = circle(128)
    assert m.n_vertices == 128
    assert compute_geometry(m).total_area == pytest.approx(2 * 128 * np.sin(np.pi / 128), rel=1e-14)


def test_torus_is_genus_one():
    m = torus(2.0, 1.0, 64, 32)
    assert validate(m).ok
    assert euler_characteristic(m) == 0


@pytest.mark.parametrize("make", [
    lambda: circle(7),
    lambda: ellipse(4),
    lambda: torus(2.0, 1.0, 5, 5),
    lambda: dumbbell(0.3, 1.0, 4, 8),
])
def test_resolution_too_low(make):
    with pytest.raises(ResolutionTooLowError):
        make()


@pytest.mark.parametrize("make", [
    lambda: ellipse(64, 1.0, 2.0),
    lambda: torus(1.0, 2.0),
    lambda: dumbbell(1.2, 1.0),
    lambda: dumbbell(0.0, 1.0),
])
def test_invalid_shape_parameters(make):
    with pytest.raises(ValueError):
        make()


def test_dumbbell_is_closed_sphere_with_thin_neck():
    m = dumbbell(0.3, 1.0, 64, 32)
    assert validate(m).ok
    assert euler_characteristic(m) == 2
    g = compute_geometry(m)
    rho = np.linalg.norm(g.vertices[:, :2], axis=1)
    neck = neck_mask(g)
    assert neck.any()
    assert rho[neck].min() < 0.5 * rho[~neck].max()


def test_star_shaped_is_deterministic_and_star_shaped():
    a = star_shaped(2, np.random.default_rng(3))
    b = star_shaped(2, np.random.default_rng(3))
    assert np.array_equal(a.vertices, b.vertices)
    r = np.linalg.norm(a.vertices, axis=1)
    assert 0.85 - 1e-12 <= r.min() and r.max() <= 1.15 + 1e-12
    assert validate(a).ok


def test_graded_sphere_refines_toward_north_pole():
    m = graded_sphere()
    assert validate(m).ok
    g = compute_geometry(m)
    assert np.allclose(np.linalg.norm(g.vertices, axis=1), 1.0)
    near = np.linalg.norm(g.vertices - g.vertices[-1], axis=1) < 2e-3
    assert near.sum() > 100
    assert np.max(np.abs(g.H - 2.0)) < 0.05


@pytest.mark.parametrize("mesh", [circle(33), ellipse(40), icosphere(2), torus(2, 1, 12, 8)],
                         ids=["circle", "ellipse", "sphere", "torus"])
def test_mesh_file_round_trip_is_bit_exact(mesh, tmp_path):
    p = tmp_path / "m.txt"
    write_mesh(mesh, p)
    back = read_mesh(p)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.cells, mesh.cells)


def test_off_header_required(tmp_path):
    p = tmp_path / "bad.off"
    p.write_text("NOFF\n1 0 0\n0 0 0\n")
    with pytest.raises(ValueError):
        read_mesh(p)
