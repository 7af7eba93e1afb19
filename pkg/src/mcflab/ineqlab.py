"""Numerical checks of the Sobolev, reverse Hölder and Moser iteration
inequalities on discrete hypersurfaces and flow trajectories.

Every check returns both sides of the inequality it tests. Constants are
computed explicitly by :func:`constants_table` from the dimensional constant
``c_n`` (an empirical pin, see :mod:`mcflab.pins`) and the data norms ``C0``
and ``C1``.

Two values of the reverse Hölder constant are carried. ``C_a`` is the closed
form ``(2 c_n C0 C1)^(1+nu)``. ``C_a_proof = C_a + 2 c_n C1`` is what the
absorption argument yields before the cutoff term ``2 c_n C1 Lambda`` is
dropped. It stays positive as ``C0 -> 0``, which is necessary: with
``f = 0`` a nonzero caloric ``v`` still has a nonzero left-hand side.
``ConstantsTable.mode`` selects which one feeds ``C_z``, ``C_b`` and ``C_d``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .diagnostics import h_evolution_residual, heat_residual
from .errors import (
    LadderUnderresolvedError,
    NegativeFunctionError,
    NotSubsolutionError,
    SubcriticalExponentError,
    ZeroRightHandSideError,
)
from .geometry import Hypersurface, tangential_gradient_norm
from .spacetime import (
    QUADRATURE_RULE,
    CutoffFunction,
    FlowTrajectory,
    ParabolicCylinder,
    _as_series,
    cutoff_values,
    cutoff_weight,
    cylinder_membership,
    inner_cylinder,
    slice_norm,
    spacetime_integral,
    spacetime_norm,
)

MODES = ("proof", "remark")


# ----------------------------------------------------------------------------
# constants


def Lambda(beta: float) -> float:
    return 100.0 * beta


@dataclass
class ConstantsTable:
    n: int
    q: float
    beta: float
    C0: float
    C1: float
    c_n: float
    mode: str = "proof"
    nu: float = math.nan
    lam: float = math.nan
    Lambda: float = math.nan
    C_a: float = math.nan
    C_a_proof: float = math.nan
    C_z: float = math.nan
    C_b: float = math.nan
    C_c: float = math.nan
    C_d: float = math.nan
    delta1: float = math.nan
    delta2: float = math.nan
    critical: bool = False

    @property
    def C_a_used(self) -> float:
        return self.C_a_proof if self.mode == "proof" else self.C_a

    def as_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(self).items()}


def constants_table(n: int, q: float, beta: float, C0: float, C1: float, c_n: float,
                    mode: str = "proof") -> ConstantsTable:
    """Evaluate the explicit constant chain.

    ``q = (n + 2) / 2`` is the critical exponent: ``nu`` and the constants
    built on it are undefined and left as nan, while ``C_c``, ``delta1`` and
    ``delta2`` remain available.

    Raises
    ------
    SubcriticalExponentError
        If ``q < (n + 2) / 2``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    crit = (n + 2) / 2.0
    if q < crit and not math.isclose(q, crit):
        raise SubcriticalExponentError(f"q = {q} < (n+2)/2 = {crit}")
    if min(C0, 0.0) < 0 or C1 <= 0 or c_n <= 0 or beta <= 1:
        raise ValueError("need C0 >= 0, C1 > 0, c_n > 0, beta > 1")
    lam = (n + 2) / n
    Lam = Lambda(beta)
    t = ConstantsTable(n=n, q=q, beta=beta, C0=C0, C1=C1, c_n=c_n, mode=mode, lam=lam, Lambda=Lam)
    t.C_c = (c_n * C1 * Lam) ** (1.0 / beta)
    t.delta1 = 1.0 / (2.0 * c_n * C1 * Lam)
    t.delta2 = math.sqrt(t.delta1 / c_n)
    if math.isclose(q, crit):
        t.critical = True
        return t
    nu = (n + 2) / (2.0 * q - (n + 2))
    t.nu = nu
    t.C_a = (2.0 * c_n * C0 * C1) ** (1.0 + nu)
    t.C_a_proof = t.C_a + 2.0 * c_n * C1
    t.C_z = 16.0 * 100.0 ** (1.0 + nu) * c_n * t.C_a_used
    t.C_b = (4.0 * lam ** (1.0 + nu) * t.C_z * beta ** (1.0 + nu)) ** (n * n / beta)
    t.C_d = n * t.C_b * t.C_c
    return t


def C3_constant(n: int, C_c: float, H_norm: float, B: float, one_np2: float, one_q: float) -> float:
    """``2 C_c^2 (||H||^2 + n^2 B^2 ||1||^2 + n B^2 ||1||_{(n+2)^2/(2n)})`` on ``D``."""
    return 2.0 * C_c**2 * (H_norm**2 + n * n * B * B * one_np2**2 + n * B * B * one_q)


def mean_curvature_constants(n: int, C1: float, C3: float, c_n: float, mode: str = "proof") -> ConstantsTable:
    """Constants of the mean-curvature bound: ``beta = n + 2``,
    ``q = (n+2)^2 / (2n)`` and ``C3`` in the role of ``C0``.

    ``C_c`` and ``delta1`` are those of ``beta = n + 2``; the returned
    ``C_d = n C_b C_c`` combines them.
    """
    q = (n + 2) ** 2 / (2.0 * n)
    return constants_table(n, q, n + 2, C3, C1, c_n, mode)


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0.0:
        if lhs == 0.0:
            return 0.0
        raise ZeroRightHandSideError(f"lhs = {lhs} but rhs = 0")
    return lhs / rhs


@dataclass
class CheckResult:
    check: str
    lhs: float
    rhs: float
    ratio: float
    certified: Optional[bool] = None
    extra: dict = field(default_factory=dict)

    def record(self, **more) -> dict:
        rec = dict(check=self.check, lhs=self.lhs, rhs=self.rhs, ratio=self.ratio,
                   certified=self.certified, rule=QUADRATURE_RULE)
        rec.update(self.extra)
        rec.update(more)
        return rec


# ----------------------------------------------------------------------------
# slice inequalities (n = 2)


def _require_n2(mesh_or_traj):
    if mesh_or_traj.dim != 2:
        raise ValueError("the Sobolev-inequality checks are implemented for n = 2 only")


def michael_simon_check(mesh: Hypersurface, f) -> CheckResult:
    """``(int f^{n/(n-1)})^{(n-1)/n}`` against ``int (|grad f| + |H| f)``.

    The ratio ``lhs / rhs`` is an empirical lower bound for the Michael-Simon
    constant.
    """
    _require_n2(mesh)
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise NegativeFunctionError("f must be nonnegative")
    n = mesh.dim
    p = n / (n - 1.0)
    lhs = float(np.sum(f**p * mesh.area)) ** (1.0 / p)
    g = tangential_gradient_norm(mesh, f)
    rhs = float(np.sum((g + np.abs(mesh.H) * f) * mesh.area))
    return CheckResult("michael_simon", lhs, rhs, _ratio(lhs, rhs))


def lemma31_check(mesh: Hypersurface, v, Q_exp: float = 3.0) -> CheckResult:
    """``||v||_{2Q}^2`` against ``||grad v||_2^2 + ||H||_{n+2}^{n+2} ||v||_2^2``.

    The reported right-hand side excludes ``c_n``, so ``ratio`` is the
    smallest ``c_n`` for which this sample satisfies the inequality. Only
    ``|v|`` enters.
    """
    _require_n2(mesh)
    if not Q_exp > 1:
        raise ValueError("Q_exp must exceed 1")
    v = np.abs(np.asarray(v, dtype=float))
    n = mesh.dim
    lhs = slice_norm(mesh, v, 2.0 * Q_exp) ** 2
    grad = tangential_gradient_norm(mesh, v)
    rhs = slice_norm(mesh, grad, 2.0) ** 2 + slice_norm(mesh, mesh.H, n + 2.0) ** (n + 2) * slice_norm(mesh, v, 2.0) ** 2
    return CheckResult("lemma31", lhs, rhs, _ratio(lhs, rhs), extra=dict(Q_exp=Q_exp))


def interpolation_exponent(t_exp: float, r_exp: float, s_exp: float) -> float:
    return (1.0 / t_exp - 1.0 / r_exp) / (1.0 / r_exp - 1.0 / s_exp)


def interpolation_check(mesh: Hypersurface, u, t_exp: float, r_exp: float, s_exp: float,
                        eps: float) -> CheckResult:
    """``||u||_r <= eps ||u||_s + eps^-mu ||u||_t`` on the lumped measure."""
    if not (1 <= t_exp < r_exp < s_exp) or not eps > 0:
        raise ValueError("need 1 <= t < r < s and eps > 0")
    mu = interpolation_exponent(t_exp, r_exp, s_exp)
    lhs = slice_norm(mesh, u, r_exp)
    rhs = eps * slice_norm(mesh, u, s_exp) + eps ** (-mu) * slice_norm(mesh, u, t_exp)
    # the inequality is exact; allow only floating-point slack
    ok = lhs <= rhs * (1.0 + 1e-12) + 1e-300
    return CheckResult("interpolation", lhs, rhs, _ratio(lhs, rhs), certified=bool(ok),
                       extra=dict(t=t_exp, r=r_exp, s=s_exp, eps=eps, mu=mu))


# ----------------------------------------------------------------------------
# spacetime inequalities


def prop32_check(traj: FlowTrajectory, v) -> CheckResult:
    """``||v||_beta^beta`` with ``beta = 2(n+2)/n`` against the right-hand side
    without ``c_n``; the ratio is the smallest admissible ``c_n``."""
    _require_n2(traj)
    n = traj.dim
    vs = _as_series(traj, v)
    if any(np.any(x < 0) for x in vs):
        raise NegativeFunctionError("v must be nonnegative")
    beta = 2.0 * (n + 2) / n
    lhs = spacetime_norm(traj, vs, beta).value ** beta
    sup_l2 = max(slice_norm(s, x, 2.0) for s, x in zip(traj.snapshots, vs))
    grads = [tangential_gradient_norm(s, x) for s, x in zip(traj.snapshots, vs)]
    grad2 = spacetime_norm(traj, grads, 2.0).value ** 2
    Hn = spacetime_norm(traj, "H", n + 2.0).value ** (n + 2)
    rhs = sup_l2 ** (4.0 / n) * (grad2 + sup_l2**2 * Hn)
    return CheckResult("prop32", lhs, rhs, _ratio(lhs, rhs))


def data_constants(traj: FlowTrajectory, f, q: float):
    """``C0 = ||f||_{L^q(S)}`` and ``C1 = (1 + ||H||^{n+2}_{L^{n+2}(S)})^{n/(n+2)}``."""
    n = traj.dim
    C0 = spacetime_norm(traj, f, q).value
    C1 = (1.0 + spacetime_norm(traj, "H", n + 2.0).value ** (n + 2)) ** (n / (n + 2.0))
    return C0, C1


def subsolution_tolerance(traj: FlowTrajectory, factor: float = 10.0) -> float:
    """``factor`` times the largest residual of the mean-curvature evolution
    equation on the same trajectory."""
    return factor * float(np.max(h_evolution_residual(traj).max_abs))


def check_subsolution(traj: FlowTrajectory, v, f, tol: Optional[float] = None) -> float:
    """Verify ``(d/dt - Delta) v - f v <= tol`` at every vertex-time sample.

    Returns the largest residual.

    Raises
    ------
    NegativeFunctionError
    NotSubsolutionError
        Carrying ``(snapshot, vertex, residual)`` of the worst sample.
    """
    vs = _as_series(traj, v)
    fs = _as_series(traj, f)
    if any(np.any(x < 0) for x in vs):
        raise NegativeFunctionError("v must be nonnegative")
    if tol is None:
        tol = subsolution_tolerance(traj)
    worst = (-1, -1, -np.inf)
    src = [fv * vv for fv, vv in zip(fs, vs)]
    for j in range(len(traj) - 1):
        r = heat_residual(traj, vs, src, j)
        i = int(np.argmax(r))
        if r[i] > worst[2]:
            worst = (j, i, float(r[i]))
    if worst[2] > tol:
        raise NotSubsolutionError(
            f"(d/dt - Delta) v - f v = {worst[2]:.6g} > tol = {tol:.6g} at snapshot {worst[0]}, vertex {worst[1]}",
            worst=worst,
        )
    return worst[2]


def reverse_holder_check(traj: FlowTrajectory, v, f, beta: float, k: int, constants: ConstantsTable,
                         center, tol: Optional[float] = None) -> CheckResult:
    """``||eta_k^2 v^beta||_{(n+2)/n} <= C_a Lambda^{1+nu} ||v^beta W||_1`` with
    ``W = eta^2 + |grad eta|^2 + 2 eta |(d/dt - Delta) eta|``.
    """
    if constants.critical:
        raise SubcriticalExponentError("the reverse Hölder check needs q > (n+2)/2")
    if beta < 2:
        raise ValueError("beta must be >= 2")
    worst = check_subsolution(traj, v, f, tol)
    n = traj.dim
    cut = CutoffFunction(tuple(np.asarray(center, dtype=float)), k)
    eta = cutoff_values(cut, traj)
    vs = _as_series(traj, v)
    lam = (n + 2.0) / n
    lhs_field = [(e * e * x**beta) for e, x in zip(eta, vs)]
    lhs = spacetime_norm(traj, lhs_field, lam).value
    W = cutoff_weight(cut, traj)
    integral, samples = spacetime_integral(traj, [x**beta * w for x, w in zip(vs, W)])
    rhs = constants.C_a_used * Lambda(beta) ** (1.0 + constants.nu) * integral
    ratio = _ratio(lhs, rhs)
    return CheckResult("reverse_holder", lhs, rhs, ratio, certified=bool(lhs <= rhs),
                       extra=dict(beta=beta, k=k, samples=samples, max_subsolution_residual=worst))


@dataclass
class LadderRung:
    k: int
    exponent: float
    value: float
    samples: int
    bound: float  # right-hand side of the one-step estimate (nan for k = 0)
    certified: Optional[bool]


@dataclass
class MoserLadder:
    rungs: List[LadderRung]
    sup_inner: float
    final_bound: float
    final_certified: bool

    @property
    def certified(self) -> bool:
        return self.final_certified and all(r.certified for r in self.rungs if r.certified is not None)

    def records(self) -> List[dict]:
        out = [dict(check="moser_rung", k=r.k, exponent=r.exponent, lhs=r.value, rhs=r.bound,
                    samples=r.samples, certified=r.certified, rule=QUADRATURE_RULE) for r in self.rungs]
        out.append(dict(check="moser_final", lhs=self.sup_inner, rhs=self.final_bound,
                        certified=self.final_certified, rule=QUADRATURE_RULE))
        return out


def region_sup(traj: FlowTrajectory, values, region: ParabolicCylinder) -> float:
    """Max of ``values`` over every snapshot sample in ``region``, including
    the final snapshot (``-inf`` if none)."""
    best = -np.inf
    for s, t, x in zip(traj.snapshots, traj.times, _as_series(traj, values)):
        m = cylinder_membership(region, s, t)
        if m.any():
            best = max(best, float(np.max(x[m])))
    return best


def moser_ladder(traj: FlowTrajectory, v, f, beta: float, k_max: int, constants: ConstantsTable,
                 center, tol: Optional[float] = None, min_samples: int = 100) -> MoserLadder:
    """Norms ``s_k = ||v||_{L^{beta lambda^k}(D_k)}`` and their one-step bounds.

    Rung ``k`` is certified when
    ``s_k <= C_z^{1/b} 4^{(k-1)/b} b^{(1+nu)/b} s_{k-1}`` with
    ``b = beta lambda^{k-1}``; the final check is
    ``max_{D'} v <= C_b ||v||_{L^beta(D)}``.
    """
    if constants.critical:
        raise SubcriticalExponentError("the Moser ladder needs q > (n+2)/2")
    check_subsolution(traj, v, f, tol)
    n = traj.dim
    lam = (n + 2.0) / n
    nu = constants.nu
    c = tuple(np.asarray(center, dtype=float))
    vs = _as_series(traj, v)
    rungs = []
    for k in range(k_max + 1):
        p = beta * lam**k
        rep = spacetime_norm(traj, vs, p, ParabolicCylinder(c, k))
        if k == 0:
            rungs.append(LadderRung(0, p, rep.value, rep.samples, math.nan, None))
            continue
        b = beta * lam ** (k - 1)
        bound = constants.C_z ** (1 / b) * 4.0 ** ((k - 1) / b) * b ** ((1 + nu) / b) * rungs[-1].value
        rungs.append(LadderRung(k, p, rep.value, rep.samples, bound, bool(rep.value <= bound)))
    if rungs[-1].samples < min_samples:
        raise LadderUnderresolvedError(
            f"D_{k_max} holds {rungs[-1].samples} samples (< {min_samples}); refine the mesh or the stride"
        )
    sup_inner = region_sup(traj, vs, inner_cylinder(c))
    final_bound = constants.C_b * rungs[0].value
    return MoserLadder(rungs, sup_inner, final_bound, bool(sup_inner <= final_bound))


@dataclass
class SmallnessResult:
    small: bool
    certified: Optional[bool]
    f_norm: float
    delta1: float
    lhs: float = math.nan
    rhs: float = math.nan

    def record(self) -> dict:
        return dict(check="critical_smallness", small=self.small, certified=self.certified,
                    f_norm=self.f_norm, delta1=self.delta1, lhs=self.lhs, rhs=self.rhs,
                    rule=QUADRATURE_RULE)


def critical_smallness_check(traj: FlowTrajectory, v, f, beta: float, constants: ConstantsTable,
                             center, tol: Optional[float] = None) -> SmallnessResult:
    """If ``||f||_{L^{(n+2)/2}(D)} <= delta1``, test
    ``||v||_{L^{beta (n+2)/n}(D_1)} <= C_c ||v||_{L^beta(D)}``.

    The left exponent is ``beta (n+2)/n``, the one used when the estimate is
    applied to the mean curvature.
    """
    n = traj.dim
    if not math.isclose(constants.q, (n + 2) / 2.0):
        raise ValueError("critical_smallness_check needs constants with q = (n+2)/2")
    check_subsolution(traj, v, f, tol)
    c = tuple(np.asarray(center, dtype=float))
    D = ParabolicCylinder(c, 0)
    f_norm = spacetime_norm(traj, f, (n + 2) / 2.0, D).value
    small = f_norm <= constants.delta1
    if not small:
        return SmallnessResult(False, None, f_norm, constants.delta1)
    lhs = spacetime_norm(traj, v, beta * (n + 2.0) / n, ParabolicCylinder(c, 1)).value
    rhs = constants.C_c * spacetime_norm(traj, v, beta, D).value
    return SmallnessResult(True, bool(lhs <= rhs), f_norm, constants.delta1, lhs, rhs)


@dataclass
class MeanCurvatureBound:
    hypothesis: bool
    bound_holds: Optional[bool]
    C_d: float
    local_sum: float
    delta2: float
    sup_Hplus: float
    H_norm: float
    one_norm: float
    C1: float
    C3: float
    constants: ConstantsTable

    def record(self) -> dict:
        return dict(check="mean_curvature_bound", hypothesis=self.hypothesis, certified=self.bound_holds,
                    lhs=self.sup_Hplus, rhs=self.C_d * self.local_sum, local_sum=self.local_sum,
                    delta2=self.delta2, C_d=self.C_d, C1=self.C1, C3=self.C3, rule=QUADRATURE_RULE)


def mean_curvature_bound_check(traj: FlowTrajectory, B: float, c_n: float, center,
                               mode: str = "proof") -> MeanCurvatureBound:
    """Smallness hypothesis and the ``L^infty`` bound of ``H^+`` on ``D'``.

    ``C1`` is measured on the whole trajectory and ``C3`` on ``D``; the
    bound is tested only when the hypothesis holds.
    """
    n = traj.dim
    c = tuple(np.asarray(center, dtype=float))
    D = ParabolicCylinder(c, 0)
    p = n + 2.0
    Hn = spacetime_norm(traj, "H", p, D).value
    one = spacetime_norm(traj, 1.0, p, D).value
    one_q = spacetime_norm(traj, 1.0, (n + 2.0) ** 2 / (2.0 * n), D).value
    C1 = (1.0 + spacetime_norm(traj, "H", p).value ** (n + 2)) ** (n / p)
    Cc = (c_n * C1 * Lambda(p)) ** (1.0 / p)
    C3 = C3_constant(n, Cc, Hn, B, one, one_q)
    tab = mean_curvature_constants(n, C1, C3, c_n, mode)
    local_sum = Hn + B * one
    hyp = local_sum <= tab.delta2
    sup = region_sup(traj, [np.maximum(s.H, 0.0) for s in traj.snapshots], inner_cylinder(c))
    holds = bool(sup <= tab.C_d * local_sum) if hyp else None
    return MeanCurvatureBound(bool(hyp), holds, tab.C_d, local_sum, tab.delta2, sup, Hn, one, C1, C3, tab)


def cutoff_sup_constant(traj: FlowTrajectory, center, k: int) -> float:
    """``sup (eta_k^2 + |grad eta_k|^2 + 2 eta_k |(d/dt - Delta) eta_k|) / 4^{k+1}``
    over the samples with ``t <= 1``; an empirical value of the
    cutoff-function constant."""
    cut = CutoffFunction(tuple(np.asarray(center, dtype=float)), k)
    W = cutoff_weight(cut, traj)
    best = 0.0
    for t, w in zip(traj.times, W):
        if t <= 1.0:
            best = max(best, float(np.max(w)))
    return best / 4.0 ** (k + 1)


# ----------------------------------------------------------------------------
# report


def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if not math.isfinite(v) else float("%.12g" % v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, tuple):
        return [_clean(x) for x in v]
    return v


def write_certification_json(path, records: Sequence[dict], constants: Optional[dict] = None):
    """Flat records plus the constants they reference, 12 significant digits."""
    doc = dict(
        constants={k: _clean(v) for k, v in (constants or {}).items()},
        records=[{k: _clean(v) for k, v in r.items()} for r in records],
    )
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
