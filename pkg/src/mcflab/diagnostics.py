"""Residual checks of the evolution identities plus pinching data.

Also fits how curvature integrals diverge near extinction.

Time derivatives are forward differences on the Lagrangian vertices of
consecutive snapshots, matching the explicit Euler integrator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import InsufficientTailError, LastSnapshotError, PinchingViolatedError
from .flow import ExactSphereSolution
from .geometry import Hypersurface, laplace_beltrami
from .spacetime import FlowTrajectory, _as_series


def A_norm2(mesh: Hypersurface) -> np.ndarray:
    """``|A|^2 = sum_i lambda_i^2`` per vertex."""
    return np.sum(mesh.principal**2, axis=1)


# ----------------------------------------------------------------------------
# evolution identities


def area_derivative_check(traj: FlowTrajectory) -> np.ndarray:
    """Relative residual of ``dArea/dt = -int H^2 dmu`` on every interval.

    Returns an array of length ``len(traj) - 1``.
    """
    out = []
    for j in range(len(traj) - 1):
        a, b = traj.snapshots[j], traj.snapshots[j + 1]
        dt = traj.times[j + 1] - traj.times[j]
        lhs = (b.total_area - a.total_area) / dt
        rhs = -float(np.sum(a.H**2 * a.area))
        out.append(abs(lhs - rhs) / abs(rhs) if rhs != 0 else abs(lhs))
    return np.array(out)


def heat_residual(traj: FlowTrajectory, values, source, j: int) -> np.ndarray:
    """Per-vertex ``(d/dt - Delta) v - source`` at snapshot ``j``."""
    if j < 0 or j >= len(traj) - 1:
        raise LastSnapshotError(f"snapshot {j} has no forward neighbour")
    v = _as_series(traj, values)
    s = _as_series(traj, source)
    a = traj.snapshots[j]
    dt = traj.times[j + 1] - traj.times[j]
    return (v[j + 1] - v[j]) / dt - laplace_beltrami(a, v[j]) - s[j]


@dataclass
class HResidual:
    """Per-interval summaries of ``(d/dt - Delta) H - |A|^2 H``."""

    times: np.ndarray
    max_abs: np.ndarray
    l2: np.ndarray
    scale: np.ndarray  # max |A|^2 |H| on the slice

    @property
    def relative(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.scale > 0, self.max_abs / self.scale, self.max_abs)


def h_evolution_residual(traj: FlowTrajectory, values="H", source=None) -> HResidual:
    """Residual of ``dH/dt = Delta H + |A|^2 H`` on every interval.

    ``values``/``source`` override the field and the reaction term, which is
    how the pipeline is exercised on fields other than ``H``.
    """
    if len(traj) < 2:
        raise LastSnapshotError("need at least two snapshots")
    if source is None:
        source = [A_norm2(s) * s.H for s in traj.snapshots]
    v = _as_series(traj, values)
    src = _as_series(traj, source)
    mx, l2, sc = [], [], []
    for j in range(len(traj) - 1):
        r = heat_residual(traj, v, src, j)
        a = traj.snapshots[j]
        mx.append(float(np.max(np.abs(r))))
        l2.append(float(np.sqrt(np.sum(r * r * a.area))))
        sc.append(float(np.max(np.abs(A_norm2(a) * a.H))))
    return HResidual(traj.times[:-1].copy(), np.array(mx), np.array(l2), np.array(sc))


def brakke_check(traj: FlowTrajectory, x0=None) -> np.ndarray:
    """Area-weighted mean of ``(d/dt - Delta)|x - x0|^2`` on every interval.

    The smooth identity gives ``-2n`` exactly.
    """
    dim = traj.dim
    x0 = np.zeros(dim + 1) if x0 is None else np.asarray(x0, dtype=float)
    sq = [np.sum((s.vertices - x0) ** 2, axis=1) for s in traj.snapshots]
    out = []
    for j in range(len(traj) - 1):
        r = heat_residual(traj, sq, 0.0, j)
        a = traj.snapshots[j]
        out.append(float(np.sum(r * a.area) / np.sum(a.area)))
    return np.array(out)


# ----------------------------------------------------------------------------
# pinching


@dataclass
class PinchingReport:
    B: float
    min_lambda: np.ndarray  # per snapshot

    @property
    def global_min(self) -> float:
        return float(np.min(self.min_lambda))


def pinching_constant(traj: Union[FlowTrajectory, Hypersurface]) -> PinchingReport:
    """Smallest ``B >= 0`` with every sampled principal curvature ``>= -B``."""
    snaps = [traj] if isinstance(traj, Hypersurface) else traj.snapshots
    mins = np.array([float(np.min(s.principal)) for s in snaps])
    return PinchingReport(B=max(0.0, -float(np.min(mins))), min_lambda=mins)


@dataclass
class HatFields:
    Hhat: np.ndarray
    f: np.ndarray
    upperA_slack: np.ndarray  # (Hhat^2 - 2 B Hhat + n B^2) - |A|^2, >= 0 up to tolerance

    @property
    def upperA_ok(self) -> bool:
        return bool(np.all(self.upperA_slack >= -1e-9 * (1.0 + np.abs(self.f))))


def hat_fields(traj: Union[FlowTrajectory, Hypersurface], B: float, tol: float = 1e-9) -> List[HatFields]:
    """``Hhat = H + n B`` and ``f = Hhat^2 + n B^2`` on every snapshot.

    Raises
    ------
    PinchingViolatedError
        If ``Hhat < -tol`` anywhere, i.e. ``B`` is below the true pinching.
    """
    if B < 0:
        raise ValueError("B must be nonnegative")
    snaps = [traj] if isinstance(traj, Hypersurface) else traj.snapshots
    out = []
    for j, s in enumerate(snaps):
        n = s.dim
        hh = s.H + n * B
        if np.any(hh < -tol):
            v = int(np.argmin(hh))
            raise PinchingViolatedError(
                f"Hhat = {hh[v]:.6g} < 0 at vertex {v} of snapshot {j}; B = {B} is too small"
            )
        slack = hh * hh - 2.0 * B * hh + n * B * B - A_norm2(s)
        out.append(HatFields(Hhat=hh, f=hh * hh + n * B * B, upperA_slack=slack))
    return out


def hypothesis_quantities(traj: FlowTrajectory, b: float = 0.0) -> dict:
    """Empirical ``l`` in ``H >= -l`` and ``C*`` in ``|A|^2 <= C* H^2 + b``.

    ``C*`` is the smallest constant valid at every sample with ``H != 0``;
    samples with ``H = 0`` need ``|A|^2 <= b`` and are reported separately.
    """
    l = 0.0
    c_star = 0.0
    zero_h_max = 0.0
    for s in traj.snapshots:
        l = max(l, -float(np.min(s.H)))
        a2 = A_norm2(s)
        h2 = s.H**2
        nz = h2 > 1e-14 * max(1.0, float(np.max(h2)))
        if np.any(nz):
            c_star = max(c_star, float(np.max((a2[nz] - b) / h2[nz])))
        if np.any(~nz):
            zero_h_max = max(zero_h_max, float(np.max(a2[~nz])))
    return dict(l=l, C_star=c_star, b=b, A2_where_H_zero=zero_h_max)


# ----------------------------------------------------------------------------
# maximum curvature


@dataclass
class MaxHSeries:
    times: np.ndarray
    max_H: np.ndarray
    argmax: np.ndarray
    running_max: np.ndarray
    running_snapshot: np.ndarray  # snapshot index where the running max was attained
    running_vertex: np.ndarray


def max_H_series(traj: FlowTrajectory) -> MaxHSeries:
    mx = np.array([float(np.max(s.H)) for s in traj.snapshots])
    am = np.array([int(np.argmax(s.H)) for s in traj.snapshots])
    run = np.maximum.accumulate(mx)
    snap = np.zeros(len(mx), dtype=int)
    best = 0
    for j in range(len(mx)):
        if mx[j] > mx[best]:
            best = j
        snap[j] = best
    return MaxHSeries(traj.times.copy(), mx, am, run, snap, am[snap])


def extinction_time_estimate(traj: FlowTrajectory, tail_fraction: float = 0.5) -> float:
    """Extrapolate ``1 / max(H)^2`` linearly to zero.

    For a shrinking round sphere ``n^2 / H^2 = r^2`` is exactly linear in
    time. The fit uses snapshots with ``t >= (1 - tail_fraction) t_last``.
    """
    t = traj.times
    mx = np.array([float(np.max(np.abs(s.H))) for s in traj.snapshots])
    sel = t >= (1.0 - tail_fraction) * t[-1]
    if sel.sum() < 2:
        sel = np.ones_like(t, dtype=bool)
    slope, icpt = np.polyfit(t[sel], 1.0 / mx[sel] ** 2, 1)
    if slope >= 0:
        raise InsufficientTailError("curvature is not growing; no extinction to extrapolate")
    return float(-icpt / slope)


# ----------------------------------------------------------------------------
# divergence of int int |H|^alpha near extinction


@dataclass
class DivergenceFit:
    n: int
    alpha: float
    T: float
    eps: np.ndarray
    I: np.ndarray
    regime: str  # "convergent", "logarithmic" or "power"
    slope: float  # fitted rate; nan for the convergent regime
    expected_slope: float
    cauchy_tail: float  # |I(eps_last) - I(eps_prev)| / I(eps_last)

    @property
    def relative_slope_error(self) -> float:
        if not np.isfinite(self.slope):
            return math.nan
        return abs(self.slope - self.expected_slope) / abs(self.expected_slope)


def default_eps_grid(T: float, m_min: int = 3, m_max: int = 10) -> np.ndarray:
    """``eps = 2^-m T`` for ``m = m_min .. m_max``."""
    return T * 2.0 ** -np.arange(m_min, m_max + 1, dtype=float)


def _trajectory_integral(traj: FlowTrajectory, alpha: float, t_end: float) -> float:
    """Left-endpoint integral of ``|H|^alpha`` up to ``t_end``; the last partial
    interval is cut at ``t_end``."""
    t = traj.times
    total = 0.0
    for j in range(len(traj) - 1):
        if t[j] >= t_end:
            break
        dt = min(t[j + 1], t_end) - t[j]
        s = traj.snapshots[j]
        total += dt * float(np.sum(np.abs(s.H) ** alpha * s.area))
    return total


def _sphere_integral(sol: ExactSphereSolution, alpha: float, t_end: float) -> float:
    n = sol.n

    def integrand(t):
        r = math.sqrt(sol.R0**2 - 2.0 * n * t)
        return sol.w_n * r**n * (n / r) ** alpha

    # substitute u = T - t so the quadrature sees the singular end at u = eps
    eps = sol.T - t_end
    val, _ = integrate.quad(lambda u: integrand(sol.T - u), eps, sol.T, limit=200,
                            epsabs=0.0, epsrel=1e-13)
    return val


def expected_tail_rate(n: int, alpha: float) -> float:
    """Round-sphere tail rate of ``int_0^{T-eps} int |H|^alpha``.

    For ``alpha = n + 2`` this is the coefficient ``w_n n^(n+1) / 2`` of
    ``ln(1/eps)`` (independent of the initial radius); above it, the exponent
    ``p`` in ``I ~ eps^-p``. Below it the integral converges and the rate is nan.
    """
    if math.isclose(alpha, n + 2):
        return ExactSphereSolution(n).w_n * n ** (n + 1) / 2.0
    if alpha > n + 2:
        return (alpha - n) / 2.0 - 1.0
    return math.nan


def divergence_exponent_fit(source, alpha: float, eps=None, T: Optional[float] = None,
                            min_samples: int = 4) -> DivergenceFit:
    """Measure how ``I(eps) = int_0^{T-eps} int |H|^alpha dmu dt`` behaves as eps -> 0.

    Parameters
    ----------
    source : FlowTrajectory or ExactSphereSolution
    alpha : float
    eps : array, optional
        Tail widths; defaults to ``2^-m T`` for ``m = 3..10``.
    T : float, optional
        Extinction time. For trajectories it defaults to the extrapolation of
        :func:`extinction_time_estimate`.

    Notes
    -----
    ``alpha > n + 2`` fits the log-slope of the increments ``I(eps_{k+1}) -
    I(eps_k)``, which follow a pure power law. ``alpha = n + 2`` fits ``I``
    linearly against ``ln(1/eps)``. ``alpha < n + 2`` reports the relative
    Cauchy difference of the last two samples.
    """
    exact = isinstance(source, ExactSphereSolution)
    n = source.n if exact else source.dim
    if T is None:
        T = source.T if exact else extinction_time_estimate(source)
    eps = default_eps_grid(T) if eps is None else np.sort(np.asarray(eps, dtype=float))[::-1]
    if not exact:
        resolved = (T - eps) <= source.times[-1]
        if resolved.sum() < min_samples:
            raise InsufficientTailError(
                f"only {int(resolved.sum())} of {len(eps)} tail widths are reached by the trajectory"
            )
        eps = eps[resolved]
    if len(eps) < min_samples:
        raise InsufficientTailError(f"need >= {min_samples} tail widths")
    if exact:
        I = np.array([_sphere_integral(source, alpha, T - e) for e in eps])
    else:
        I = np.array([_trajectory_integral(source, alpha, T - e) for e in eps])
    x = np.log(1.0 / eps)
    cauchy = abs(I[-1] - I[-2]) / abs(I[-1]) if I[-1] != 0 else 0.0
    crit = n + 2
    if math.isclose(alpha, crit):
        regime = "logarithmic"
        slope = float(np.polyfit(x, I, 1)[0])
    elif alpha > crit:
        regime = "power"
        dI = np.diff(I)
        slope = float(np.polyfit(x[1:], np.log(dI), 1)[0])
    else:
        regime = "convergent"
        slope = math.nan
    return DivergenceFit(n=n, alpha=alpha, T=T, eps=eps, I=I, regime=regime, slope=slope,
                         expected_slope=expected_tail_rate(n, alpha), cauchy_tail=cauchy)


# ----------------------------------------------------------------------------
# CSV

DIAG_COLUMNS = ["experiment", "t", "maxH", "argmax_id", "minLambda", "area", "areaResidual", "hResidualMax"]


def diagnostics_rows(traj: FlowTrajectory, experiment: str) -> List[dict]:
    ms = max_H_series(traj)
    area_res = area_derivative_check(traj)
    h_res = h_evolution_residual(traj).max_abs if len(traj) > 1 else np.array([])
    rows = []
    for j, s in enumerate(traj.snapshots):
        rows.append(dict(
            experiment=experiment,
            t="%.12g" % traj.times[j],
            maxH="%.12g" % ms.max_H[j],
            argmax_id=int(ms.argmax[j]),
            minLambda="%.12g" % float(np.min(s.principal)),
            area="%.12g" % s.total_area,
            areaResidual="%.6g" % area_res[j] if j < len(area_res) else "",
            hResidualMax="%.6g" % h_res[j] if j < len(h_res) else "",
        ))
    return rows


def write_diagnostics_csv(path, rows: Sequence[dict], append: bool = False):
    path = Path(path)
    new = not (append and path.exists())
    with path.open("a" if append else "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=DIAG_COLUMNS)
        if new:
            w.writeheader()
        w.writerows(rows)
