"""Discrete closed hypersurfaces: curves in the plane (n = 1) and triangle
meshes in space (n = 2).

A :class:`Hypersurface` holds vertex positions and connectivity. Calling
:func:`compute_geometry` returns a new, read-only snapshot with per-vertex
outward normal, mean curvature, principal curvatures and lumped area
weights populated. Sign convention: outward normal, and a round sphere of
radius r has ``H = n / r > 0``, so that ``Delta x = -H nu``.

Estimators
----------
n = 1
    ``H`` is the turning angle at a vertex divided by half the sum of the two
    adjacent edge lengths, and the area weight is that same half sum.
n = 2
    ``H nu`` is the cotangent Laplacian of the position divided by the
    mixed Voronoi vertex area. The vertex normal and the principal
    curvatures come from a weighted quadric height fit over the one-ring
    (linear terms correct the normal, quadratic terms give the shape
    operator). ``H`` is the component of ``H nu`` along that normal, and the
    principal curvatures are shifted so that their sum equals ``H`` exactly.
    The magnitude of that shift plus the fit residual is stored as the
    per-vertex ``curvature_tol``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import sparse

from .errors import (
    DegenerateElementError,
    InconsistentOrientationError,
    NonManifoldError,
    OpenBoundaryError,
)

# relative threshold below which an element counts as collapsed
DEGENERATE_RTOL = 1e-14

_FIELDS = ("normals", "H", "principal", "area", "curvature_tol")


@dataclass(eq=False)
class Hypersurface:
    """One snapshot of a closed hypersurface of dimension ``n`` in R^{n+1}.

    Parameters
    ----------
    vertices : (N, n+1) array
    cells : (E, n+1) int array
        Directed edges ``(i, j)`` for a curve, oriented triangles for a surface.

    The geometric fields are ``None`` until :func:`compute_geometry` fills them.
    """

    vertices: np.ndarray
    cells: np.ndarray
    normals: Optional[np.ndarray] = None
    H: Optional[np.ndarray] = None
    principal: Optional[np.ndarray] = None
    area: Optional[np.ndarray] = None
    curvature_tol: Optional[np.ndarray] = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.cells = np.asarray(self.cells, dtype=np.int64)
        if self.cells.ndim != 2 or self.cells.shape[1] not in (2, 3):
            raise ValueError("cells must be an (E, 2) edge list or (F, 3) triangle list")
        if self.vertices.ndim != 2 or self.vertices.shape[1] != self.cells.shape[1]:
            raise ValueError(
                f"a dimension-{self.dim} hypersurface needs vertices in R^{self.dim + 1}, "
                f"got shape {self.vertices.shape}"
            )

    @property
    def dim(self) -> int:
        return self.cells.shape[1] - 1

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def has_geometry(self) -> bool:
        return self.H is not None

    @property
    def total_area(self) -> float:
        """Total length (n = 1) or area (n = 2) as the sum of vertex weights."""
        return float(np.sum(self.area)) if self.area is not None else element_measure(self).sum()

    def with_vertices(self, vertices) -> "Hypersurface":
        """Same connectivity, new positions, geometry cleared."""
        return Hypersurface(vertices, self.cells)

    def replace(self, **changes) -> "Hypersurface":
        return dataclasses.replace(self, **changes)


# ----------------------------------------------------------------------------
# validation


@dataclass
class Violation:
    kind: str
    detail: str


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self):
        return sorted({v.kind for v in self.violations})

    def raise_for_violations(self):
        if self.ok:
            return
        exc = {
            "NonManifold": NonManifoldError,
            "OpenBoundary": OpenBoundaryError,
            "InconsistentOrientation": InconsistentOrientationError,
            "DegenerateElement": DegenerateElementError,
        }
        first = self.violations[0]
        raise exc[first.kind](first.detail)


def validate(mesh: Hypersurface) -> ValidationReport:
    """Check that the mesh is closed and consistently oriented with no degenerate element."""
    report = ValidationReport()
    nv = mesh.n_vertices
    cells = mesh.cells
    if cells.size and (cells.min() < 0 or cells.max() >= nv):
        report.violations.append(Violation("NonManifold", "cell index out of range"))
        return report

    if mesh.dim == 1:
        _validate_curve(mesh, report)
    else:
        _validate_surface(mesh, report)
    return report


def _validate_curve(mesh, report):
    nv = mesh.n_vertices
    src = np.bincount(mesh.cells[:, 0], minlength=nv)
    dst = np.bincount(mesh.cells[:, 1], minlength=nv)
    degree = src + dst
    if np.any(mesh.cells[:, 0] == mesh.cells[:, 1]):
        report.violations.append(Violation("DegenerateElement", "edge with repeated vertex"))
    lonely = np.flatnonzero(degree == 1)
    if lonely.size:
        report.violations.append(
            Violation("OpenBoundary", f"{lonely.size} curve endpoint(s), e.g. vertex {lonely[0]}")
        )
    bad = np.flatnonzero((degree == 0) | (degree > 2))
    if bad.size:
        report.violations.append(
            Violation("NonManifold", f"{bad.size} vertices without exactly two edges, e.g. {bad[0]}")
        )
    flipped = np.flatnonzero((degree == 2) & (src != 1))
    if flipped.size:
        report.violations.append(
            Violation("InconsistentOrientation", f"edges reverse direction at vertex {flipped[0]}")
        )
    lengths = element_measure(mesh)
    if lengths.size and np.any(lengths <= DEGENERATE_RTOL * lengths.mean()):
        i = int(np.argmin(lengths))
        report.violations.append(Violation("DegenerateElement", f"zero-length edge {i}"))


def _validate_surface(mesh, report):
    nv = mesh.n_vertices
    tri = mesh.cells
    if np.any((tri[:, 0] == tri[:, 1]) | (tri[:, 1] == tri[:, 2]) | (tri[:, 0] == tri[:, 2])):
        report.violations.append(Violation("DegenerateElement", "triangle with repeated vertex"))
    half = _half_edges(tri)
    key = half[:, 0] * nv + half[:, 1]
    ukey, hcount = np.unique(key, return_counts=True)
    und = np.sort(half, axis=1)
    _, ecount = np.unique(und[:, 0] * nv + und[:, 1], return_counts=True)
    if np.any(ecount == 1):
        report.violations.append(
            Violation("OpenBoundary", f"{int(np.sum(ecount == 1))} edge(s) used by one triangle")
        )
    if np.any(ecount > 2):
        report.violations.append(
            Violation("NonManifold", f"{int(np.sum(ecount > 2))} edge(s) shared by >2 triangles")
        )
    if np.any(hcount > 1):
        report.violations.append(
            Violation(
                "InconsistentOrientation",
                f"{int(np.sum(hcount > 1))} directed edge(s) used twice",
            )
        )
    used = np.zeros(nv, dtype=bool)
    used[tri.ravel()] = True
    if not used.all():
        report.violations.append(
            Violation("NonManifold", f"{int((~used).sum())} isolated vertex(es)")
        )
    areas = element_measure(mesh)
    if areas.size and np.any(areas < DEGENERATE_RTOL * areas.mean()):
        report.violations.append(
            Violation("DegenerateElement", f"zero-area triangle {int(np.argmin(areas))}")
        )


# ----------------------------------------------------------------------------
# elementwise primitives


def _half_edges(tri):
    return np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])


def element_measure(mesh: Hypersurface) -> np.ndarray:
    """Edge lengths (n = 1) or triangle areas (n = 2)."""
    x = mesh.vertices
    c = mesh.cells
    if mesh.dim == 1:
        return np.linalg.norm(x[c[:, 1]] - x[c[:, 0]], axis=1)
    cr = np.cross(x[c[:, 1]] - x[c[:, 0]], x[c[:, 2]] - x[c[:, 0]])
    return 0.5 * np.linalg.norm(cr, axis=1)


def edges(mesh: Hypersurface) -> np.ndarray:
    """Undirected edges as sorted vertex pairs."""
    if mesh.dim == 1:
        return np.unique(np.sort(mesh.cells, axis=1), axis=0)
    return np.unique(np.sort(_half_edges(mesh.cells), axis=1), axis=0)


def _check_areas(areas):
    if areas.size == 0:
        raise DegenerateElementError("mesh has no elements")
    bad = areas < DEGENERATE_RTOL * areas.mean()
    if np.any(bad):
        raise DegenerateElementError(
            f"element {int(np.flatnonzero(bad)[0])} has (near) zero measure"
        )


def _curve_neighbors(mesh):
    nv = mesh.n_vertices
    nxt = np.empty(nv, dtype=np.int64)
    prv = np.empty(nv, dtype=np.int64)
    nxt[mesh.cells[:, 0]] = mesh.cells[:, 1]
    prv[mesh.cells[:, 1]] = mesh.cells[:, 0]
    return prv, nxt


def _surface_cotangents(x, tri):
    """Per-face cotangents of the angles at each corner and face areas.

    ``cot[:, k]`` is the cotangent of the angle at corner k, which sits
    opposite the edge (k+1, k+2).
    """
    p0, p1, p2 = x[tri[:, 0]], x[tri[:, 1]], x[tri[:, 2]]
    cr = np.cross(p1 - p0, p2 - p0)
    dbl = np.linalg.norm(cr, axis=1)
    _check_areas(0.5 * dbl)
    cot = np.empty((tri.shape[0], 3))
    cot[:, 0] = np.einsum("ij,ij->i", p1 - p0, p2 - p0) / dbl
    cot[:, 1] = np.einsum("ij,ij->i", p2 - p1, p0 - p1) / dbl
    cot[:, 2] = np.einsum("ij,ij->i", p0 - p2, p1 - p2) / dbl
    return cot, 0.5 * dbl, cr


def stiffness_matrix(mesh: Hypersurface) -> sparse.csr_matrix:
    """Symmetric weak Laplacian ``L`` with ``(L f)_i = sum_j w_ij (f_j - f_i)``.

    Cotangent weights ``(cot a + cot b) / 2`` on surfaces, inverse edge
    lengths on curves. ``Delta f = (L f) / area``.
    """
    x = mesh.vertices
    nv = mesh.n_vertices
    if mesh.dim == 1:
        lengths = element_measure(mesh)
        _check_areas(lengths)
        i, j = mesh.cells[:, 0], mesh.cells[:, 1]
        w = 1.0 / lengths
    else:
        tri = mesh.cells
        cot, _, _ = _surface_cotangents(x, tri)
        i = np.concatenate([tri[:, 1], tri[:, 2], tri[:, 0]])
        j = np.concatenate([tri[:, 2], tri[:, 0], tri[:, 1]])
        w = 0.5 * np.concatenate([cot[:, 0], cot[:, 1], cot[:, 2]])
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([w, w, -w, -w])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(nv, nv))


def lumped_area(mesh: Hypersurface) -> np.ndarray:
    """Diagonal vertex weights: half the adjacent edge lengths on curves,
    mixed Voronoi areas on surfaces. Both sum to the exact total measure."""
    if mesh.dim == 1:
        m = element_measure(mesh)
        return np.bincount(mesh.cells.ravel(), weights=np.repeat(0.5 * m, 2), minlength=mesh.n_vertices)
    cot, farea, _ = _surface_cotangents(mesh.vertices, mesh.cells)
    return _mixed_area(mesh.vertices, mesh.cells, cot, farea)


# ----------------------------------------------------------------------------
# geometry


def compute_geometry(mesh: Hypersurface) -> Hypersurface:
    """Return a read-only copy of ``mesh`` carrying its normals and curvature fields."""
    if mesh.dim == 1:
        fields = _curve_geometry(mesh)
    else:
        fields = _surface_geometry(mesh)
    out = Hypersurface(mesh.vertices.copy(), mesh.cells.copy(), **fields)
    for name in ("vertices", "cells") + _FIELDS:
        getattr(out, name).setflags(write=False)
    return out


def _curve_geometry(mesh):
    x = mesh.vertices
    prv, nxt = _curve_neighbors(mesh)
    e_out = x[nxt] - x
    e_in = x - x[prv]
    l_out = np.linalg.norm(e_out, axis=1)
    l_in = np.linalg.norm(e_in, axis=1)
    _check_areas(np.concatenate([l_out, l_in]))
    # shoelace sign: +1 for counter-clockwise loops
    orient = 1.0 if np.sum(x[:, 0] * x[nxt, 1] - x[nxt, 0] * x[:, 1]) >= 0 else -1.0

    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    dot = np.einsum("ij,ij->i", e_in, e_out)
    turning = np.arctan2(cross, dot)
    area = 0.5 * (l_in + l_out)
    H = orient * turning / area

    t_in = e_in / l_in[:, None]
    t_out = e_out / l_out[:, None]
    nrm = np.column_stack([t_in[:, 1] + t_out[:, 1], -(t_in[:, 0] + t_out[:, 0])]) * orient
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    return dict(
        normals=nrm,
        H=H,
        principal=H[:, None].copy(),
        area=area,
        curvature_tol=np.zeros_like(H),
    )


def _surface_geometry(mesh):
    x = mesh.vertices
    tri = mesh.cells
    nv = mesh.n_vertices
    cot, farea, cr = _surface_cotangents(x, tri)
    area = _mixed_area(x, tri, cot, farea)
    if np.any(area <= 0):
        raise DegenerateElementError("vertex with zero area weight")

    # signed volume decides which way the triangles face
    vol = np.einsum("ij,ij->", x[tri[:, 0]], cr) / 6.0
    orient = 1.0 if vol >= 0 else -1.0
    nrm = np.zeros((nv, 3))
    for k in range(3):
        for d in range(3):
            nrm[:, d] += np.bincount(tri[:, k], weights=cr[:, d], minlength=nv)
    nrm *= orient
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]

    nrm, (a, b, c), residual = _quadric_fit(x, tri, nrm)
    mc_normal = -_apply_cot(x, tri, cot, nv) / area[:, None]
    H = np.einsum("ij,ij->i", mc_normal, nrm)

    mean = 0.5 * (a + c)
    disc = np.sqrt(0.25 * (a - c) ** 2 + b * b)
    shift = 0.5 * (H - (a + c))
    principal = np.column_stack([mean - disc + shift, mean + disc + shift])
    return dict(
        normals=nrm,
        H=H,
        principal=principal,
        area=area,
        curvature_tol=residual + np.abs(2.0 * shift),
    )


def _mixed_area(x, tri, cot, farea):
    """Voronoi areas with the obtuse-triangle split (A/2 at the obtuse
    corner, A/4 at the other two). Sums to the total area exactly."""
    nv = len(x)
    obtuse_face = np.any(cot < 0, axis=1)
    out = np.zeros(nv)
    for k in range(3):
        a, b, c = tri[:, k], tri[:, (k + 1) % 3], tri[:, (k + 2) % 3]
        lab = np.sum((x[b] - x[a]) ** 2, axis=1)
        lac = np.sum((x[c] - x[a]) ** 2, axis=1)
        vor = (lab * cot[:, (k + 2) % 3] + lac * cot[:, (k + 1) % 3]) / 8.0
        val = np.where(obtuse_face, np.where(cot[:, k] < 0, 0.5 * farea, 0.25 * farea), vor)
        out += np.bincount(a, weights=val, minlength=nv)
    return out


def _apply_cot(f, tri, cot, nv):
    """``L f`` for per-vertex values ``f`` of shape (N,) or (N, d)."""
    f2 = f.reshape(nv, -1)
    out = np.zeros_like(f2, dtype=float)
    for k in range(3):
        a, b = tri[:, (k + 1) % 3], tri[:, (k + 2) % 3]
        w = 0.5 * cot[:, k]
        diff = (f2[b] - f2[a]) * w[:, None]
        for d in range(f2.shape[1]):
            out[:, d] += np.bincount(a, weights=diff[:, d], minlength=nv)
            out[:, d] -= np.bincount(b, weights=diff[:, d], minlength=nv)
    return out.reshape(f.shape)


def _tangent_frames(nrm):
    helper = np.zeros_like(nrm)
    idx = np.argmin(np.abs(nrm), axis=1)
    helper[np.arange(len(nrm)), idx] = 1.0
    e1 = np.cross(nrm, helper)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(nrm, e1)
    return e1, e2


def _quadric_fit(x, tri, nrm):
    """Least-squares height function ``h = a u^2/2 + b u v + c v^2/2 + p u + q v``
    over the one-ring in the tangent frame of ``nrm``.

    The linear part tilts the normal, which is second-order accurate
    afterwards; the quadratic part is minus the shape operator. Returns the
    corrected normals, the shape-operator entries (a, b, c) and the rms fit
    residual in curvature units.
    """
    nv = len(x)
    e1, e2 = _tangent_frames(nrm)
    half = _half_edges(tri)
    i, j = half[:, 0], half[:, 1]
    d = x[j] - x[i]
    u = np.einsum("ij,ij->i", d, e1[i])
    v = np.einsum("ij,ij->i", d, e2[i])
    z = np.einsum("ij,ij->i", d, nrm[i])
    rr = u * u + v * v
    cols = np.column_stack([0.5 * u * u, u * v, 0.5 * v * v, u, v])
    wt = 1.0 / (rr * rr)
    k = cols.shape[1]
    m = np.empty((nv, k, k))
    rhs = np.empty((nv, k))
    for p in range(k):
        rhs[:, p] = np.bincount(i, weights=wt * cols[:, p] * z, minlength=nv)
        for q in range(p, k):
            m[:, p, q] = np.bincount(i, weights=wt * cols[:, p] * cols[:, q], minlength=nv)
            m[:, q, p] = m[:, p, q]
    valence = np.bincount(i, minlength=nv)
    coef = np.empty((nv, k))
    full = valence >= k
    if np.any(full):
        coef[full] = np.linalg.solve(m[full], rhs[full][:, :, None])[:, :, 0]
    if np.any(~full):
        coef[~full] = (np.linalg.pinv(m[~full]) @ rhs[~full][:, :, None])[:, :, 0]

    fitted = np.einsum("ij,ij->i", cols, coef[i])
    sq = np.bincount(i, weights=(2.0 * (z - fitted) / rr) ** 2, minlength=nv)
    residual = np.sqrt(sq / valence)

    new = nrm - coef[:, 3:4] * e1 - coef[:, 4:5] * e2
    new /= np.linalg.norm(new, axis=1)[:, None]
    return new, (-coef[:, 0], -coef[:, 1], -coef[:, 2]), residual


# ----------------------------------------------------------------------------
# operators


def laplace_beltrami(mesh: Hypersurface, f) -> np.ndarray:
    """Discrete Laplace-Beltrami ``(L f) / area``; self-adjoint for the area weights."""
    f = np.asarray(f, dtype=float)
    area = mesh.area if mesh.area is not None else lumped_area(mesh)
    if mesh.dim == 1:
        prv, nxt = _curve_neighbors(mesh)
        x = mesh.vertices
        l_out = np.linalg.norm(x[nxt] - x, axis=1)
        l_in = np.linalg.norm(x - x[prv], axis=1)
        _check_areas(np.concatenate([l_out, l_in]))
        if f.ndim == 1:
            lf = (f[nxt] - f) / l_out + (f[prv] - f) / l_in
        else:
            lf = (f[nxt] - f) / l_out[:, None] + (f[prv] - f) / l_in[:, None]
    else:
        cot, _, _ = _surface_cotangents(mesh.vertices, mesh.cells)
        lf = _apply_cot(f, mesh.cells, cot, mesh.n_vertices)
    if lf.ndim == 1:
        return lf / area
    return lf / area[:, None]


def tangential_gradient(mesh: Hypersurface, f) -> np.ndarray:
    """Per-vertex tangential gradient vectors (N, n+1).

    Elementwise affine gradients averaged with element-measure weights,
    then projected onto the vertex tangent space when normals are known.
    """
    f = np.asarray(f, dtype=float)
    x = mesh.vertices
    c = mesh.cells
    nv = mesh.n_vertices
    m = element_measure(mesh)
    _check_areas(m)
    if mesh.dim == 1:
        t = (x[c[:, 1]] - x[c[:, 0]]) / m[:, None]
        g = ((f[c[:, 1]] - f[c[:, 0]]) / m)[:, None] * t
    else:
        p0, p1, p2 = x[c[:, 0]], x[c[:, 1]], x[c[:, 2]]
        cr = np.cross(p1 - p0, p2 - p0)
        unit = cr / (2.0 * m)[:, None]
        g = (
            f[c[:, 0]][:, None] * np.cross(unit, p2 - p1)
            + f[c[:, 1]][:, None] * np.cross(unit, p0 - p2)
            + f[c[:, 2]][:, None] * np.cross(unit, p1 - p0)
        ) / (2.0 * m)[:, None]
    k = mesh.dim + 1
    out = np.zeros((nv, x.shape[1]))
    wsum = np.bincount(c.ravel(), weights=np.repeat(m, k), minlength=nv)
    for d in range(x.shape[1]):
        out[:, d] = np.bincount(c.ravel(), weights=np.repeat(g[:, d] * m, k), minlength=nv)
    out /= wsum[:, None]
    if mesh.normals is not None:
        nrm = mesh.normals
        out -= np.einsum("ij,ij->i", out, nrm)[:, None] * nrm
    return out


def tangential_gradient_norm(mesh: Hypersurface, f) -> np.ndarray:
    """Per-vertex ``|grad f|``; exactly zero for constant fields."""
    return np.linalg.norm(tangential_gradient(mesh, f), axis=1)


def second_fundamental_form_norm2(mesh: Hypersurface) -> np.ndarray:
    """``|A|^2`` as the sum of squared principal curvatures."""
    return np.sum(mesh.principal**2, axis=1)
