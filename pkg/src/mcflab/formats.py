"""Plain-text mesh files.

Surfaces use OFF: an ``OFF`` line, a ``V F 0`` counts line, ``V`` vertex
lines and ``F`` face lines ``3 i j k``. Curves use a closed-polyline file:
a ``POLY`` line, a vertex count, then one ``x y`` line per vertex in loop
order (the last vertex connects back to the first).

Coordinates are written with 17 significant digits so a round trip is
bit-exact.
"""

from pathlib import Path

import numpy as np

from .geometry import Hypersurface, _curve_neighbors

_FMT = "%.17g"


def write_off(mesh: Hypersurface, path):
    lines = ["OFF", f"{mesh.n_vertices} {len(mesh.cells)} 0"]
    lines += [" ".join(_FMT % c for c in row) for row in mesh.vertices]
    lines += ["3 " + " ".join(str(int(i)) for i in row) for row in mesh.cells]
    Path(path).write_text("\n".join(lines) + "\n")


def read_off(path) -> Hypersurface:
    tokens = [ln.split("#")[0].strip() for ln in Path(path).read_text().splitlines()]
    tokens = [t for t in tokens if t]
    if not tokens or tokens[0] != "OFF":
        raise ValueError(f"{path}: missing OFF header")
    nv, nf = (int(v) for v in tokens[1].split()[:2])
    verts = np.array([[float(c) for c in t.split()[:3]] for t in tokens[2:2 + nv]])
    faces = []
    for t in tokens[2 + nv:2 + nv + nf]:
        parts = [int(c) for c in t.split()]
        if parts[0] != 3:
            raise ValueError(f"{path}: only triangles are supported")
        faces.append(parts[1:4])
    return Hypersurface(verts.reshape(nv, 3), np.array(faces, dtype=np.int64).reshape(nf, 3))


def _loop_order(mesh):
    _, nxt = _curve_neighbors(mesh)
    order = [0]
    for _ in range(mesh.n_vertices - 1):
        order.append(int(nxt[order[-1]]))
    return np.array(order)


def write_polyline(mesh: Hypersurface, path):
    """Write a single closed loop; vertices are emitted in traversal order."""
    order = _loop_order(mesh)
    if len(set(order.tolist())) != mesh.n_vertices:
        raise ValueError("polyline format holds exactly one closed loop")
    lines = ["POLY", str(mesh.n_vertices)]
    lines += [" ".join(_FMT % c for c in mesh.vertices[i]) for i in order]
    Path(path).write_text("\n".join(lines) + "\n")


def read_polyline(path) -> Hypersurface:
    tokens = [ln.split("#")[0].strip() for ln in Path(path).read_text().splitlines()]
    tokens = [t for t in tokens if t]
    if not tokens or tokens[0] != "POLY":
        raise ValueError(f"{path}: missing POLY header")
    nv = int(tokens[1])
    verts = np.array([[float(c) for c in t.split()[:2]] for t in tokens[2:2 + nv]])
    i = np.arange(nv)
    return Hypersurface(verts.reshape(nv, 2), np.column_stack([i, (i + 1) % nv]))


def write_mesh(mesh: Hypersurface, path):
    (write_polyline if mesh.dim == 1 else write_off)(mesh, path)


def read_mesh(path) -> Hypersurface:
    path = Path(path)
    first = path.read_text().lstrip().split(None, 1)[0]
    return read_polyline(path) if first == "POLY" else read_off(path)


def mesh_suffix(dim: int) -> str:
    return ".poly" if dim == 1 else ".off"
