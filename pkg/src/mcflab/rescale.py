"""Parabolic rescaling and blow-up sequences.

A window ``[t_i - 1/Q^2, t_i]`` of a stored trajectory is mapped to
``[0, 1]`` by ``x -> Q x`` and ``t -> 1 + Q^2 (t - t_i)``. Nothing is
re-estimated: the rescaled snapshot carries ``H / Q``, principal curvatures
``/ Q`` and area weights ``* Q^n`` of the source samples, so the
``L^{n+2}`` norm of ``H`` is unchanged up to rounding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .diagnostics import max_H_series
from .errors import EmptyRegionError, HypothesisNotMetError, NoBlowupError, WindowOutOfRangeError
from .geometry import Hypersurface
from .ineqlab import MeanCurvatureBound, mean_curvature_bound_check
from .spacetime import FlowTrajectory, ParabolicCylinder, spacetime_norm


@dataclass(eq=False)
class RescaledTrajectory(FlowTrajectory):
    Q: float = 1.0
    t_i: float = 1.0
    source_indices: Optional[np.ndarray] = None
    max_time_offset: float = 0.0


def rescale_snapshot(mesh: Hypersurface, Q: float) -> Hypersurface:
    n = mesh.dim
    out = Hypersurface(
        mesh.vertices * Q,
        mesh.cells,
        normals=mesh.normals,
        H=mesh.H / Q,
        principal=mesh.principal / Q,
        area=mesh.area * Q**n,
        curvature_tol=mesh.curvature_tol / Q,
    )
    for name in ("vertices", "H", "principal", "area", "curvature_tol"):
        getattr(out, name).setflags(write=False)
    return out


def _nearest(times, t):
    j = int(np.searchsorted(times, t))
    if j == 0:
        return 0
    if j >= len(times):
        return len(times) - 1
    return j if abs(times[j] - t) < abs(times[j - 1] - t) else j - 1


def rescale_trajectory(traj: FlowTrajectory, Q: float, t_i: float) -> RescaledTrajectory:
    """Cut ``[t_i - 1/Q^2, t_i]`` from ``traj`` and map it to ``[0, 1]``.

    Both window ends snap to the nearest stored snapshot; the larger of the
    two snapping offsets (in source time) is recorded.

    Raises
    ------
    WindowOutOfRangeError
        If the window leaves ``[0, t_last]`` or holds fewer than two snapshots.
    """
    if not Q > 0:
        raise ValueError("Q must be positive")
    start = t_i - 1.0 / Q**2
    times = traj.times
    slack = 1e-12 * max(1.0, abs(times[-1]))
    if start < times[0] - slack or t_i > times[-1] + slack:
        raise WindowOutOfRangeError(
            f"window [{start:.6g}, {t_i:.6g}] leaves the trajectory span [{times[0]:.6g}, {times[-1]:.6g}]"
        )
    j0, j1 = _nearest(times, start), _nearest(times, t_i)
    if j1 <= j0:
        raise WindowOutOfRangeError("window holds fewer than two snapshots; store a finer stride")
    idx = np.arange(j0, j1 + 1)
    offset = max(abs(times[j0] - start), abs(times[j1] - t_i))
    snaps = [rescale_snapshot(traj.snapshots[j], Q) for j in idx]
    new_t = 1.0 + (times[idx] - t_i) * Q**2
    return RescaledTrajectory(
        snaps,
        new_t,
        reason=traj.reason,
        step_dts=traj.step_dts[idx] * Q**2,
        Q=float(Q),
        t_i=float(t_i),
        source_indices=idx,
        max_time_offset=float(offset),
    )


@dataclass
class NormalizedWindow:
    """A rescaled window plus the rescaled centre of its cylinders."""

    traj: RescaledTrajectory
    center: np.ndarray
    Q: float
    t_i: float
    vertex: Optional[int] = None  # marked vertex under the argmax policy
    source: Optional[FlowTrajectory] = None


def normalize_window(traj: FlowTrajectory, t_i: Optional[float] = None, Q: Optional[float] = None,
                     center=None) -> NormalizedWindow:
    """Rescale ``traj`` so that ``(x, t_i)`` becomes ``(Q x, 1)``.

    Defaults: ``t_i`` is the last stored time, ``Q`` the largest ``H`` on the
    snapshot nearest ``t_i``, and the centre is the vertex carrying that
    maximum. An explicit ``center`` is given in source coordinates.
    """
    t_i = float(traj.times[-1]) if t_i is None else float(t_i)
    j = _nearest(traj.times, t_i)
    snap = traj.snapshots[j]
    vertex = int(np.argmax(snap.H))
    Q = float(snap.H[vertex]) if Q is None else float(Q)
    w = rescale_trajectory(traj, Q, t_i)
    if center is None:
        c = Q * snap.vertices[vertex]
    else:
        c = Q * np.asarray(center, dtype=float)
        vertex = None
    return NormalizedWindow(w, c, Q, t_i, vertex, traj)


# ----------------------------------------------------------------------------
# blow-up sequences


@dataclass
class BlowupEntry:
    threshold: float
    Q: float
    t_i: float
    x_i: np.ndarray
    vertex: int
    snapshot: int
    window: RescaledTrajectory

    @property
    def center(self) -> np.ndarray:
        """``x_i`` in rescaled coordinates."""
        return self.Q * self.x_i

    @property
    def H_tilde_at_mark(self) -> float:
        return float(self.window.snapshots[-1].H[self.vertex])


@dataclass
class BlowupSequence:
    entries: List[BlowupEntry]
    skipped: List[float] = field(default_factory=list)  # thresholds whose window starts before t = 0

    def __len__(self):
        return len(self.entries)

    @property
    def Q(self) -> np.ndarray:
        return np.array([e.Q for e in self.entries])


def select_blowup_sequence(traj: FlowTrajectory, thresholds: Sequence[float]) -> BlowupSequence:
    """For each threshold, the first snapshot where the running maximum of
    ``H`` reaches it; ``(x_i, t_i)`` is the point realising that maximum.

    Raises
    ------
    NoBlowupError
        If the running maximum never reaches the smallest threshold.
    """
    thresholds = sorted(float(q) for q in thresholds)
    ms = max_H_series(traj)
    if ms.running_max[-1] < thresholds[0]:
        raise NoBlowupError(
            f"max H = {ms.running_max[-1]:.6g} never reaches the smallest threshold {thresholds[0]:.6g}"
        )
    entries, skipped = [], []
    for thr in thresholds:
        hit = np.flatnonzero(ms.running_max >= thr)
        if hit.size == 0:
            break
        j = int(hit[0])
        js = int(ms.running_snapshot[j])
        vert = int(ms.running_vertex[j])
        Q = float(ms.running_max[j])
        t_i = float(traj.times[js])
        if t_i - 1.0 / Q**2 < 0:
            skipped.append(thr)
            continue
        x_i = np.array(traj.snapshots[js].vertices[vert])
        window = rescale_trajectory(traj, Q, t_i)
        entries.append(BlowupEntry(thr, Q, t_i, x_i, vert, js, window))
    return BlowupSequence(entries, skipped)


@dataclass
class VanishingSeries:
    Q: np.ndarray
    H_terms: np.ndarray
    B_terms: np.ndarray
    slope: float

    @property
    def values(self) -> np.ndarray:
        return self.H_terms + self.B_terms

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) < 0))


def local_norm_terms(entry: BlowupEntry, B: float):
    w = entry.window
    n = w.dim
    D = ParabolicCylinder(tuple(entry.center), 0)
    hn = spacetime_norm(w, "H", n + 2.0, D)
    if hn.empty:
        raise EmptyRegionError(f"unit cylinder around entry Q = {entry.Q:.6g} holds no samples")
    one = spacetime_norm(w, 1.0, n + 2.0, D)
    return hn.value, (B / entry.Q) * one.value


def vanishing_local_norms(seq: BlowupSequence, B: float = 0.0) -> VanishingSeries:
    """``||H~||_{L^{n+2}(D~)} + (B/Q)||1||_{L^{n+2}(D~)}`` per entry, and the
    least-squares slope of its logarithm against ``log Q``."""
    if len(seq) == 0:
        raise NoBlowupError("empty blow-up sequence")
    terms = [local_norm_terms(e, B) for e in seq.entries]
    h = np.array([t[0] for t in terms])
    b = np.array([t[1] for t in terms])
    Q = seq.Q
    vals = h + b
    slope = float(np.polyfit(np.log(Q), np.log(vals), 1)[0]) if len(Q) >= 2 and np.all(vals > 0) else math.nan
    return VanishingSeries(Q, h, b, slope)


@dataclass
class WitnessRow:
    entry: int
    Q: float
    t_i: float
    x_i: np.ndarray
    local_sum: float
    sup_Hplus: float
    C_d: float
    hypothesis: bool

    @property
    def bound(self) -> float:
        return self.C_d * self.local_sum


@dataclass
class ContradictionWitness:
    rows: List[WitnessRow]

    @property
    def bound_decreasing(self) -> Optional[bool]:
        if len(self.rows) < 2:
            return None
        b = np.array([r.bound for r in self.rows])
        return bool(np.all(np.diff(b) < 0))


def contradiction_witness(seq: BlowupSequence, c_n: float, B: float = 0.0, mode: str = "proof",
                          strict: bool = False) -> ContradictionWitness:
    """Tabulate ``C_d`` times the local norm sum against ``sup_{D~'} H~^+`` per entry.

    With ``strict=True`` an entry whose smallness hypothesis fails raises
    :class:`HypothesisNotMetError`; otherwise the flag is recorded.
    """
    rows = []
    for i, e in enumerate(seq.entries):
        res: MeanCurvatureBound = mean_curvature_bound_check(e.window, B / e.Q, c_n, e.center, mode)
        if strict and not res.hypothesis:
            raise HypothesisNotMetError(
                f"entry {i}: local sum {res.local_sum:.6g} > delta2 = {res.delta2:.6g}"
            )
        rows.append(WitnessRow(i, e.Q, e.t_i, e.x_i, res.local_sum, res.sup_Hplus, res.C_d, res.hypothesis))
    return ContradictionWitness(rows)


BLOWUP_COLUMNS = ["entry", "Q", "t_i", "x_i", "localNormSum", "supHplus", "C_d", "hypothesisMet"]


def write_blowup_csv(path, witness: ContradictionWitness):
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BLOWUP_COLUMNS)
        w.writeheader()
        for r in witness.rows:
            w.writerow(dict(
                entry=r.entry,
                Q="%.12g" % r.Q,
                t_i="%.12g" % r.t_i,
                x_i=" ".join("%.12g" % c for c in r.x_i),
                localNormSum="%.12g" % r.local_sum,
                supHplus="%.12g" % r.sup_Hplus,
                C_d="%.12g" % r.C_d,
                hypothesisMet=int(r.hypothesis),
            ))
