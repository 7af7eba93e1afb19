"""Explicit mean curvature flow on Lagrangian vertices, and the round-sphere
reference solution.

Each step moves every vertex by ``-H nu dt`` and recomputes the geometry;
connectivity never changes, so vertex ``v`` of every snapshot is the image
of vertex ``v`` of the initial mesh. The step size adapts to the shortest
edge and to the largest curvature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gamma

from .errors import DegenerateElementError, PastExtinctionError
from .formats import mesh_suffix, read_mesh, write_mesh
from .geometry import Hypersurface, compute_geometry
from .spacetime import FlowTrajectory, Termination

log = logging.getLogger(__name__)


def unit_sphere_area(n: int) -> float:
    """Area ``w_n`` of the unit sphere ``S^n`` in ``R^{n+1}``."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0)


@dataclass(frozen=True)
class ExactSphereSolution:
    """Round sphere ``S^n`` of initial radius ``R0`` shrinking under the flow.

    ``r(t) = sqrt(R0^2 - 2 n t)`` and ``H(t) = n / r(t)`` until the extinction
    time ``T = R0^2 / (2 n)``.
    """

    n: int
    R0: float = 1.0

    @property
    def T(self) -> float:
        return self.R0**2 / (2.0 * self.n)

    @property
    def w_n(self) -> float:
        return unit_sphere_area(self.n)

    def radius(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t >= self.T):
            raise PastExtinctionError(f"t >= T = {self.T}")
        return np.sqrt(self.R0**2 - 2.0 * self.n * t)

    def H(self, t):
        return self.n / self.radius(t)

    def area(self, t):
        return self.w_n * self.radius(t) ** self.n

    def time_at_curvature(self, H):
        """Time at which ``H(t)`` reaches the given value."""
        return (self.R0**2 - (self.n / np.asarray(H, dtype=float)) ** 2) / (2.0 * self.n)


def exact_sphere(n: int, R0: float, t: float):
    """Return ``(r(t), H(t))`` for the shrinking sphere."""
    sol = ExactSphereSolution(n, R0)
    r = float(sol.radius(t))
    return r, n / r


@dataclass(frozen=True)
class StopCriteria:
    max_time: float = math.inf
    max_steps: int = 10**9
    H_max: float = math.inf
    dt_floor: float = 1e-14

    def __post_init__(self):
        if not (self.max_time > 0 and self.H_max > 0 and self.dt_floor > 0):
            raise ValueError("stop criteria must be strictly positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be nonnegative")


def step(mesh: Hypersurface, dt: float) -> Hypersurface:
    """One forward Euler step ``x <- x - H nu dt``; returns a fresh snapshot."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not mesh.has_geometry:
        mesh = compute_geometry(mesh)
    x = mesh.vertices - dt * mesh.H[:, None] * mesh.normals
    return compute_geometry(mesh.with_vertices(x))


def min_edge_length(mesh: Hypersurface) -> float:
    # every undirected edge appears among the cell sides, so no dedup is needed
    c = mesh.cells
    x = mesh.vertices
    d = x[c] - x[np.roll(c, 1, axis=1)]
    return float(np.sqrt(np.min(np.einsum("...i,...i->...", d, d))))


def adaptive_dt(mesh: Hypersurface, safety: float = 0.1) -> float:
    """``safety * min(h_min^2, 1 / max(H^2 + 1))``."""
    if not mesh.has_geometry:
        mesh = compute_geometry(mesh)
    h = min_edge_length(mesh)
    return safety * min(h * h, 1.0 / float(np.max(mesh.H**2 + 1.0)))


def evolve(mesh0: Hypersurface, stop: StopCriteria, snapshot_stride: int = 1,
           safety: float = 0.1) -> FlowTrajectory:
    """Run the flow until a stop criterion fires.

    Every ``snapshot_stride``-th state is stored, and the final state is
    always stored. The last step is shortened to land exactly on
    ``stop.max_time``.

    Raises
    ------
    DegenerateElementError
        With the time of the offending step attached.
    """
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    if not safety > 0:
        raise ValueError("safety must be positive")
    mesh = mesh0 if mesh0.has_geometry else compute_geometry(mesh0)
    t = 0.0
    snaps, times, dts = [mesh], [0.0], [0.0]
    n_steps = 0
    last_dt = 0.0
    while True:
        if n_steps >= stop.max_steps:
            reason = Termination.MAX_STEPS
            break
        if t >= stop.max_time:
            reason = Termination.MAX_TIME
            break
        if float(np.max(np.abs(mesh.H))) >= stop.H_max:
            reason = Termination.CURVATURE_CEILING
            break
        dt = adaptive_dt(mesh, safety)
        if dt < stop.dt_floor:
            reason = Termination.STEP_FLOOR
            break
        dt = min(dt, stop.max_time - t)
        try:
            mesh = step(mesh, dt)
        except DegenerateElementError as exc:
            raise DegenerateElementError(str(exc.args[0]) if exc.args else "degenerate", time=t + dt) from exc
        n_steps += 1
        t_new = t + dt
        if t_new <= t:
            reason = Termination.STEP_FLOOR
            break
        t = t_new
        last_dt = dt
        if n_steps % snapshot_stride == 0:
            snaps.append(mesh)
            times.append(t)
            dts.append(dt)
    if times[-1] != t:
        snaps.append(mesh)
        times.append(t)
        dts.append(last_dt)
    log.info("evolve: %d steps, t = %.6g, reason %s", n_steps, t, reason.value)
    return FlowTrajectory(snaps, np.array(times), reason=reason.value, step_dts=np.array(dts))


# ----------------------------------------------------------------------------
# persistence

INDEX_NAME = "index.txt"


def save_trajectory(traj: FlowTrajectory, directory):
    """Write ``index.txt`` plus one mesh file per snapshot."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    suffix = mesh_suffix(traj.dim)
    lines = [f"# reason {traj.reason or 'none'}", "# index time dt maxH area"]
    for j, (snap, t, dt) in enumerate(zip(traj.snapshots, traj.times, traj.step_dts)):
        write_mesh(snap, d / f"snap_{j:06d}{suffix}")
        lines.append(f"{j} {t:.17g} {dt:.17g} {np.max(np.abs(snap.H)):.17g} {snap.total_area:.17g}")
    (d / INDEX_NAME).write_text("\n".join(lines) + "\n")


def load_trajectory(directory) -> FlowTrajectory:
    d = Path(directory)
    reason = ""
    rows = []
    for ln in (d / INDEX_NAME).read_text().splitlines():
        if ln.startswith("# reason"):
            reason = ln.split(None, 2)[2]
            reason = "" if reason == "none" else reason
        elif ln and not ln.startswith("#"):
            rows.append(ln.split())
    snaps, times, dts = [], [], []
    cells = None
    for idx, t, dt, *_ in rows:
        matches = sorted(d.glob(f"snap_{int(idx):06d}.*"))
        mesh = read_mesh(matches[0])
        if cells is None:
            cells = mesh.cells
        snaps.append(compute_geometry(Hypersurface(mesh.vertices, cells)))
        times.append(float(t))
        dts.append(float(dt))
    return FlowTrajectory(snaps, np.array(times), reason=reason, step_dts=np.array(dts))
