"""Spacetime quadrature over a flow trajectory.

A :class:`FlowTrajectory` is a list of vertex-corresponded snapshots and
their times; it is the discrete version of ``M x [0, T)``. Integrals use
the lumped vertex weights in space and the left-endpoint rule in time, so
that

    ||v||_p^p  =  sum_j  (t_{j+1} - t_j)  sum_v |v_{j,v}|^p  w_{j,v}

with the last snapshot carrying no time weight. Parabolic cylinders and the
cutoff functions used by the Moser iteration live in normalized time
``t in [0, 1]``.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import LastSnapshotError
from .geometry import Hypersurface, laplace_beltrami, tangential_gradient_norm

QUADRATURE_RULE = "left-endpoint/lumped-vertex"


class Termination(str, enum.Enum):
    MAX_TIME = "MaxTime"
    MAX_STEPS = "MaxSteps"
    CURVATURE_CEILING = "CurvatureCeiling"
    STEP_FLOOR = "StepFloor"
    NONE = ""


@dataclass(eq=False)
class FlowTrajectory:
    """Snapshots sharing one connectivity array, at strictly increasing times."""

    snapshots: List[Hypersurface]
    times: np.ndarray
    reason: str = Termination.NONE.value
    step_dts: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.snapshots) != len(self.times):
            raise ValueError("one time per snapshot required")
        if len(self.snapshots) == 0:
            raise ValueError("trajectory needs at least one snapshot")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        cells = self.snapshots[0].cells
        for s in self.snapshots[1:]:
            if s.cells is not cells and not np.array_equal(s.cells, cells):
                raise ValueError("all snapshots must share connectivity")
        if self.step_dts is None:
            self.step_dts = np.concatenate([[0.0], np.diff(self.times)])
        self.reason = Termination(self.reason).value if isinstance(self.reason, Termination) else self.reason

    def __len__(self):
        return len(self.snapshots)

    @property
    def dim(self) -> int:
        return self.snapshots[0].dim

    @property
    def cells(self):
        return self.snapshots[0].cells

    @property
    def intervals(self) -> np.ndarray:
        """Time weight of each snapshot under the left-endpoint rule."""
        return np.concatenate([np.diff(self.times), [0.0]])

    def series(self, name: str) -> List[np.ndarray]:
        """Per-snapshot values of a :class:`Hypersurface` attribute, e.g. ``"H"``."""
        return [getattr(s, name) for s in self.snapshots]

    def subset(self, indices) -> "FlowTrajectory":
        idx = list(indices)
        return FlowTrajectory(
            [self.snapshots[i] for i in idx],
            self.times[idx],
            reason=self.reason,
            step_dts=self.step_dts[idx],
        )


# ----------------------------------------------------------------------------
# parabolic cylinders


def cylinder_radius(k) -> float:
    return 0.5 + 2.0 ** (-(k + 1))


def cylinder_start(k) -> float:
    return (1.0 - 4.0 ** (-k)) / 12.0


def cylinder_rho(k) -> float:
    """``r_{k-1} - r_k``; also the square root of ``t_k - t_{k-1}``."""
    return 2.0 ** (-(k + 1))


@dataclass(frozen=True)
class ParabolicCylinder:
    """``D_k``: points of ``M_t`` within ``r_k`` of ``center`` for ``t_k <= t <= 1``.

    ``k = 0`` is the unit cylinder ``D``; ``k = math.inf`` is the inner
    cylinder ``D'`` (radius 1/2, start time 1/12).
    """

    center: tuple
    k: float = 0

    @property
    def radius(self) -> float:
        return cylinder_radius(self.k)

    @property
    def start(self) -> float:
        return cylinder_start(self.k)

    @property
    def end(self) -> float:
        return 1.0

    @property
    def label(self) -> str:
        return "D'" if math.isinf(self.k) else f"D{int(self.k)}"


def inner_cylinder(center) -> ParabolicCylinder:
    return ParabolicCylinder(tuple(np.asarray(center, dtype=float)), math.inf)


def cylinder_membership(cyl: ParabolicCylinder, mesh: Hypersurface, t: float) -> np.ndarray:
    """Vertices of ``mesh`` (at normalized time ``t``) that lie in ``cyl``."""
    if t < cyl.start or t > cyl.end:
        return np.zeros(mesh.n_vertices, dtype=bool)
    dist2 = np.sum((mesh.vertices - np.asarray(cyl.center)) ** 2, axis=1)
    return dist2 <= cyl.radius**2


def region_mask(traj: FlowTrajectory, region: Optional[ParabolicCylinder]) -> List[np.ndarray]:
    """Per-snapshot vertex masks of the samples that carry quadrature weight."""
    last = len(traj) - 1
    masks = []
    for j, (snap, t) in enumerate(zip(traj.snapshots, traj.times)):
        if j == last:
            masks.append(np.zeros(snap.n_vertices, dtype=bool))
        elif region is None:
            masks.append(np.ones(snap.n_vertices, dtype=bool))
        elif t >= region.end:
            # interval [t_j, t_{j+1}] starts at or after the cylinder's end
            masks.append(np.zeros(snap.n_vertices, dtype=bool))
        else:
            masks.append(cylinder_membership(region, snap, t))
    return masks


# ----------------------------------------------------------------------------
# norms


@dataclass
class NormReport:
    p: float
    value: float
    samples: int
    region: str = "S"
    k: Optional[float] = None
    rule: str = QUADRATURE_RULE

    @property
    def empty(self) -> bool:
        return self.samples == 0

    def as_row(self, experiment: str) -> dict:
        k = "" if self.k is None else ("inf" if math.isinf(self.k) else int(self.k))
        return dict(
            experiment=experiment,
            region=self.region,
            k=k,
            p=_fmt(self.p),
            value=_fmt(self.value),
            samples=self.samples,
        )


def _fmt(x) -> str:
    return "%.12g" % x


def _as_series(traj, values) -> List[np.ndarray]:
    if isinstance(values, str):
        return traj.series(values)
    if callable(values):
        return [np.asarray(values(s, t), dtype=float) for s, t in zip(traj.snapshots, traj.times)]
    if np.isscalar(values):
        return [np.full(s.n_vertices, float(values)) for s in traj.snapshots]
    out = [np.asarray(v, dtype=float) for v in values]
    if len(out) != len(traj):
        raise ValueError("field must provide values for every snapshot")
    return out


def spacetime_integral(traj: FlowTrajectory, values, region=None, masks=None):
    """``sum_j dt_j sum_v values * w`` over the region; returns (value, samples)."""
    series = _as_series(traj, values)
    if masks is None:
        masks = region_mask(traj, region)
    dts = traj.intervals
    total = 0.0
    samples = 0
    for snap, v, m, dt in zip(traj.snapshots, series, masks, dts):
        if dt == 0.0 or not m.any():
            continue
        total += dt * float(np.sum(v[m] * snap.area[m]))
        samples += int(m.sum())
    return total, samples


def spacetime_norm(traj: FlowTrajectory, values, p: float, region: Optional[ParabolicCylinder] = None,
                   masks=None) -> NormReport:
    """``(int_0^T int_{M_t} |v|^p dmu dt)^(1/p)``, optionally restricted to a cylinder.

    An empty region gives value 0 with zero samples.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    series = _as_series(traj, values)
    powered = [np.abs(v) ** p for v in series]
    integral, samples = spacetime_integral(traj, powered, region, masks)
    label = "S" if region is None else region.label
    k = None if region is None else region.k
    return NormReport(p=p, value=integral ** (1.0 / p), samples=samples, region=label, k=k)


def slice_norm(mesh: Hypersurface, values, p: float) -> float:
    """Single-snapshot ``(sum_v |f|^p w_v)^(1/p)``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    f = np.broadcast_to(np.asarray(values, dtype=float), (mesh.n_vertices,))
    return float(np.sum(np.abs(f) ** p * mesh.area)) ** (1.0 / p)


def append_norm_csv(path, experiment: str, reports: Sequence[NormReport]):
    path = Path(path)
    new = not path.exists()
    with path.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["experiment", "region", "k", "p", "value", "samples"])
        if new:
            w.writeheader()
        for r in reports:
            w.writerow(r.as_row(experiment))


# ----------------------------------------------------------------------------
# cutoff functions


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _smoothstep_slope(u):
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 6.0 * u * (1.0 - u), 0.0)


@dataclass(frozen=True)
class CutoffFunction:
    """``eta_k(t, x) = phi(t) psi(|x - x0|^2)``: 1 on ``D_k``, 0 outside ``D_{k-1}``.

    Both profiles are C^1 cubic smoothsteps, in time across
    ``[t_{k-1}, t_k]`` and in ``s = |x - x0|^2`` across ``[r_k^2, r_{k-1}^2]``.
    """

    center: tuple
    k: int = 1
    c_prof: float = 6.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("cutoff level must be >= 1")

    @property
    def rho(self) -> float:
        return cylinder_rho(self.k)

    def phi(self, t):
        t0, t1 = cylinder_start(self.k - 1), cylinder_start(self.k)
        return _smoothstep((np.asarray(t, dtype=float) - t0) / (t1 - t0))

    def dphi(self, t):
        t0, t1 = cylinder_start(self.k - 1), cylinder_start(self.k)
        return _smoothstep_slope((np.asarray(t, dtype=float) - t0) / (t1 - t0)) / (t1 - t0)

    def psi(self, s):
        a, b = cylinder_radius(self.k) ** 2, cylinder_radius(self.k - 1) ** 2
        return 1.0 - _smoothstep((np.asarray(s, dtype=float) - a) / (b - a))

    def dpsi(self, s):
        a, b = cylinder_radius(self.k) ** 2, cylinder_radius(self.k - 1) ** 2
        return -_smoothstep_slope((np.asarray(s, dtype=float) - a) / (b - a)) / (b - a)

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        s = np.sum((x - np.asarray(self.center)) ** 2, axis=-1)
        return self.phi(t) * self.psi(s)


def cutoff_eval(cut: CutoffFunction, t, x):
    return cut(t, x)


def cutoff_heat_operator(cut: CutoffFunction, traj: FlowTrajectory, j: int) -> np.ndarray:
    """Per-vertex ``(d/dt - Delta) eta`` at snapshot ``j``.

    The time derivative follows each vertex (forward difference to ``j+1``).
    """
    if j < 0 or j >= len(traj) - 1:
        raise LastSnapshotError(f"snapshot {j} has no forward neighbour")
    a, b = traj.snapshots[j], traj.snapshots[j + 1]
    ta, tb = traj.times[j], traj.times[j + 1]
    eta_a = cut(ta, a.vertices)
    eta_b = cut(tb, b.vertices)
    return (eta_b - eta_a) / (tb - ta) - laplace_beltrami(a, eta_a)


def cutoff_weight(cut: CutoffFunction, traj: FlowTrajectory) -> List[np.ndarray]:
    """Per-snapshot ``eta^2 + |grad eta|^2 + 2 eta |(d/dt - Delta) eta|``.

    The last snapshot carries no time weight and gets ``eta^2 + |grad eta|^2``.
    """
    out = []
    last = len(traj) - 1
    for j, (snap, t) in enumerate(zip(traj.snapshots, traj.times)):
        eta = cut(t, snap.vertices)
        g = tangential_gradient_norm(snap, eta)
        w = eta * eta + g * g
        if j < last:
            w = w + 2.0 * eta * np.abs(cutoff_heat_operator(cut, traj, j))
        out.append(w)
    return out


def cutoff_values(cut: CutoffFunction, traj: FlowTrajectory) -> List[np.ndarray]:
    return [cut(t, s.vertices) for s, t in zip(traj.snapshots, traj.times)]
