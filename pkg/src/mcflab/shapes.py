"""Deterministic initial meshes: polygons, icospheres, tori, dumbbells and
random star-shaped perturbations of the sphere."""

from __future__ import annotations

import numpy as np

from .errors import ResolutionTooLowError
from .geometry import Hypersurface

MIN_CURVE_VERTICES = 8
MIN_SURFACE_VERTICES = 42


def _loop_edges(n):
    i = np.arange(n)
    return np.column_stack([i, (i + 1) % n])


def circle(n_vertices: int, radius: float = 1.0, center=(0.0, 0.0)) -> Hypersurface:
    """Regular polygon inscribed in a circle, counter-clockwise."""
    if n_vertices < MIN_CURVE_VERTICES:
        raise ResolutionTooLowError(f"curves need >= {MIN_CURVE_VERTICES} vertices")
    theta = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    x = np.column_stack([np.cos(theta), np.sin(theta)]) * radius + np.asarray(center)
    return Hypersurface(x, _loop_edges(n_vertices))


def ellipse(n_vertices: int, a: float = 2.0, b: float = 1.0) -> Hypersurface:
    """Ellipse sampled uniformly in the parameter angle; vertex 0 sits at (a, 0)."""
    if n_vertices < MIN_CURVE_VERTICES:
        raise ResolutionTooLowError(f"curves need >= {MIN_CURVE_VERTICES} vertices")
    if not (0 < b <= a):
        raise ValueError("ellipse needs 0 < b <= a")
    theta = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    x = np.column_stack([a * np.cos(theta), b * np.sin(theta)])
    return Hypersurface(x, _loop_edges(n_vertices))


def _icosahedron():
    p = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
            [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
            [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return v / np.linalg.norm(v, axis=1)[:, None], f


def _subdivide(v, f):
    nv = len(v)
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    e = np.sort(e, axis=1)
    uniq, inv = np.unique(e[:, 0] * nv + e[:, 1], return_inverse=True)
    a, b = uniq // nv, uniq % nv
    mid = 0.5 * (v[a] + v[b])
    mid /= np.linalg.norm(mid, axis=1)[:, None]
    m = inv.reshape(3, -1).T + nv  # midpoints of edges (01, 12, 20)
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    faces = np.concatenate(
        [
            np.column_stack([f[:, 0], m01, m20]),
            np.column_stack([f[:, 1], m12, m01]),
            np.column_stack([f[:, 2], m20, m12]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return np.vstack([v, mid]), faces


def icosphere(level: int, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> Hypersurface:
    """Subdivided icosahedron projected onto a sphere, outward oriented.

    Level k has ``10 * 4**k + 2`` vertices.
    """
    v, f = _icosahedron()
    for _ in range(level):
        v, f = _subdivide(v, f)
    return Hypersurface(v * radius + np.asarray(center), f)


def _grid_faces(nu, nv, wrap_u=True):
    """Two triangles per quad of an (nu x nv) periodic tensor grid."""
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    i, j = i.ravel(), j.ravel()
    i1 = (i + 1) % nu
    j1 = (j + 1) % nv
    a = i * nv + j
    b = i1 * nv + j
    c = i1 * nv + j1
    d = i * nv + j1
    return np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])


def torus(R: float = 2.0, r: float = 1.0, n_major: int = 64, n_minor: int = 32) -> Hypersurface:
    """Tensor-grid torus around the z axis; vertex (i, j) sits at angles
    ``u = 2 pi i / n_major`` (around the axis) and ``v = 2 pi j / n_minor``
    (around the tube, ``v = 0`` on the outer equator)."""
    if not (0 < r < R):
        raise ValueError("torus needs 0 < r < R")
    if n_major * n_minor < MIN_SURFACE_VERTICES or min(n_major, n_minor) < 3:
        raise ResolutionTooLowError(f"surfaces need >= {MIN_SURFACE_VERTICES} vertices")
    u = 2.0 * np.pi * np.arange(n_major) / n_major
    w = 2.0 * np.pi * np.arange(n_minor) / n_minor
    U, W = np.meshgrid(u, w, indexing="ij")
    rho = R + r * np.cos(W)
    x = np.column_stack([(rho * np.cos(U)).ravel(), (rho * np.sin(U)).ravel(), (r * np.sin(W)).ravel()])
    return Hypersurface(x, _grid_faces(n_major, n_minor))


def revolution_surface(profile_z, profile_rho, n_around: int) -> Hypersurface:
    """Closed surface of revolution about the z axis.

    ``profile_z``/``profile_rho`` describe the interior rings (rho > 0),
    ordered from the bottom pole to the top pole; the two poles are added.
    """
    z = np.asarray(profile_z, dtype=float)
    rho = np.asarray(profile_rho, dtype=float)
    m = len(z)
    phi = 2.0 * np.pi * np.arange(n_around) / n_around
    ring = np.stack(
        [np.outer(rho, np.cos(phi)), np.outer(rho, np.sin(phi)), np.repeat(z[:, None], n_around, 1)],
        axis=-1,
    ).reshape(-1, 3)
    bottom = np.array([[0.0, 0.0, z[0] - (z[1] - z[0]) if m > 1 else z[0] - 1.0]])
    top = np.array([[0.0, 0.0, z[-1] + (z[-1] - z[-2]) if m > 1 else z[-1] + 1.0]])
    x = np.vstack([ring, bottom, top])
    ib, it = m * n_around, m * n_around + 1

    faces = []
    k = np.arange(n_around)
    k1 = (k + 1) % n_around
    for s in range(m - 1):
        a = s * n_around + k
        b = s * n_around + k1
        c = (s + 1) * n_around + k1
        d = (s + 1) * n_around + k
        faces.append(np.column_stack([a, b, c]))
        faces.append(np.column_stack([a, c, d]))
    faces.append(np.column_stack([np.full(n_around, ib), k1, k]))
    top_ring = (m - 1) * n_around
    faces.append(np.column_stack([np.full(n_around, it), top_ring + k, top_ring + k1]))
    return Hypersurface(x, np.concatenate(faces))


NECK_HALF_LENGTH = 2.0  # in units of the handle radius


def dumbbell_profile(n_points, neck_radius, handle_radius):
    """Profile ``(z, rho)`` of a dumbbell, sampled uniformly in arclength.

    Two hemispherical caps of radius ``handle_radius`` centred at
    ``z = +-c`` with ``c = NECK_HALF_LENGTH * handle_radius``, joined through
    ``|z| < c`` by ``rho = r + (R - r) p(|z| / c)`` where ``p`` is the quintic
    smoothstep. ``p`` is flat to second order at zero, so the middle of the
    neck is nearly cylindrical and carries the largest mean curvature
    ``~ 1 / neck_radius``. Returns ``n_points`` interior samples, bottom pole
    to top pole, with the poles excluded.
    """
    R, r = handle_radius, neck_radius
    c = NECK_HALF_LENGTH * R
    # dense polyline: bottom cap, neck, top cap
    phi = np.linspace(0.0, np.pi / 2, 2001)
    cap_z = c + R * np.sin(phi)  # c .. c + R
    cap_rho = R * np.cos(phi)
    u = np.linspace(0.0, 1.0, 4001)
    neck_z = c * u
    neck_rho = r + (R - r) * u**3 * (10.0 - 15.0 * u + 6.0 * u * u)
    zh = np.concatenate([neck_z, cap_z[1:]])
    rh = np.concatenate([neck_rho, cap_rho[1:]])
    z = np.concatenate([-zh[::-1], zh[1:]])
    rho = np.concatenate([rh[::-1], rh[1:]])
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(z), np.diff(rho)))])
    s = arc[-1] * (np.arange(n_points) + 0.5) / n_points
    return np.interp(s, arc, z), np.interp(s, arc, rho), c + R


def dumbbell(neck_radius: float = 0.3, handle_radius: float = 1.0, n_rings: int = 64,
             n_around: int = 32) -> Hypersurface:
    """Surface of revolution with two round lobes joined by a long thin neck
    centred at z = 0."""
    if neck_radius <= 0 or handle_radius <= neck_radius:
        raise ValueError("dumbbell needs 0 < neck_radius < handle_radius")
    if n_rings * n_around + 2 < MIN_SURFACE_VERTICES or n_around < 3:
        raise ResolutionTooLowError(f"surfaces need >= {MIN_SURFACE_VERTICES} vertices")
    z, rho, tip = dumbbell_profile(n_rings, neck_radius, handle_radius)
    mesh = revolution_surface(z, rho, n_around)
    # poles sit on the profile's closure
    v = mesh.vertices.copy()
    v[-2] = [0.0, 0.0, -tip]
    v[-1] = [0.0, 0.0, tip]
    return Hypersurface(v, mesh.cells)


def neck_mask(mesh: Hypersurface, handle_radius: float = 1.0) -> np.ndarray:
    """Vertices in the middle half of a dumbbell neck, ``|z| <= c / 2``."""
    return np.abs(mesh.vertices[:, 2]) <= 0.5 * NECK_HALF_LENGTH * handle_radius


def star_shaped(level: int, rng: np.random.Generator, amplitude: float = 0.15,
                n_modes: int = 4) -> Hypersurface:
    """Icosphere with radius ``1 + amplitude * g(direction)`` for a random
    smooth ``g`` bounded by 1 in magnitude; star-shaped about the origin."""
    sphere = icosphere(level)
    d = sphere.vertices
    g = np.zeros(len(d))
    for _ in range(n_modes):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        freq = rng.uniform(1.0, 3.0)
        g += np.cos(freq * d @ axis + rng.uniform(0, 2 * np.pi))
    g /= n_modes
    return Hypersurface(d * (1.0 + amplitude * g)[:, None], sphere.cells)


def euler_characteristic(mesh: Hypersurface) -> int:
    from .geometry import edges

    return mesh.n_vertices - len(edges(mesh)) + len(mesh.cells)


def graded_sphere(theta_min: float = 1e-3, growth: float = 1.15, n_around: int = 24,
                  radius: float = 1.0) -> Hypersurface:
    """Sphere of revolution whose rings crowd geometrically toward the north pole.

    Ring polar angles grow as ``theta_min * growth**k`` up to the equator and
    continue with the last spacing to the south pole. Resolves balls of radius
    ``~ 10 theta_min`` around the north pole (the last vertex) with O(100)
    vertices, which uniform subdivision cannot afford.
    """
    if not (0 < theta_min < 0.5 and growth > 1):
        raise ValueError("need 0 < theta_min < 0.5 and growth > 1")
    theta = [theta_min]
    while theta[-1] * growth < np.pi / 2:
        theta.append(theta[-1] * growth)
    step = theta[-1] - theta[-2]
    while theta[-1] + step < np.pi - 0.5 * step:
        theta.append(theta[-1] + step)
    theta = np.array(theta)[::-1]  # bottom (south) to top (north)
    mesh = revolution_surface(radius * np.cos(theta), radius * np.sin(theta), n_around)
    v = mesh.vertices.copy()
    v[-2] = [0.0, 0.0, -radius]
    v[-1] = [0.0, 0.0, radius]
    return Hypersurface(v, mesh.cells)
