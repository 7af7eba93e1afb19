import math

import numpy as np
import pytest

from mcflab import flow
from mcflab.diagnostics import extinction_time_estimate
from mcflab.errors import DegenerateElementError, PastExtinctionError
from mcflab.flow import (
    ExactSphereSolution,
    StopCriteria,
    adaptive_dt,
    evolve,
    exact_sphere,
    load_trajectory,
    save_trajectory,
    step,
    unit_sphere_area,
)
from mcflab.geometry import compute_geometry
from mcflab.shapes import circle, icosphere


# ---------------------------------------------------------------- exact solution


@pytest.mark.parametrize("n, R0, t, r, H", [
    (1, 1.0, 0.0, 1.0, 1.0),
    (2, 1.0, 0.1875, 0.5, 4.0),
    (2, 2.0, 0.5, math.sqrt(2.0), 2.0 / math.sqrt(2.0)),
    (3, 1.0, 0.1, 0.6324555320336759, 3 / 0.6324555320336759),
])
def test_exact_sphere_values(n, R0, t, r, H):
    got = exact_sphere(n, R0, t)
    assert got == pytest.approx((r, H), rel=1e-14)


@pytest.mark.parametrize("n, t", [(1, 0.5), (1, 0.7), (2, 0.25)])
def test_exact_sphere_past_extinction(n, t):
    with pytest.raises(PastExtinctionError):
        exact_sphere(n, 1.0, t)


@pytest.mark.parametrize("n, w", [(1, 2 * math.pi), (2, 4 * math.pi), (3, 2 * math.pi**2)])
def test_unit_sphere_area(n, w):
    assert unit_sphere_area(n) == pytest.approx(w, rel=1e-14)


def test_exact_solution_extinction_time_and_inverse():
    sol = ExactSphereSolution(2, 3.0)
    assert sol.T == pytest.approx(9.0 / 4.0)
    t = 1.3
    assert sol.time_at_curvature(sol.H(t)) == pytest.approx(t, rel=1e-13)


# ---------------------------------------------------------------- stepping


def test_single_step_circle():
    m = compute_geometry(circle(1024))
    out = step(m, 1e-4)
    r = np.linalg.norm(out.vertices, axis=1)
    assert np.allclose(r, math.sqrt(1 - 2e-4), atol=1e-7)


def test_single_step_sphere():
    m = compute_geometry(icosphere(4))
    out = step(m, 1e-4)
    r = np.linalg.norm(out.vertices, axis=1)
    assert np.allclose(r, math.sqrt(1 - 4e-4), atol=1e-6)


def test_single_step_large_sphere_displacement():
    m = compute_geometry(icosphere(3, radius=100.0))
    out = step(m, 1e-4)
    disp = np.linalg.norm(out.vertices - m.vertices, axis=1)
    assert np.allclose(disp, 2e-6, rtol=1e-4)


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        step(compute_geometry(circle(16)), 0.0)


def test_adaptive_dt_circle():
    m = compute_geometry(circle(128))
    h = 2 * math.sin(math.pi / 128)
    assert adaptive_dt(m, 0.1) == pytest.approx(0.1 * h * h, rel=1e-12)


def test_adaptive_dt_small_sphere_is_curvature_limited():
    m = compute_geometry(icosphere(1, radius=0.01))
    expect = 0.1 / (np.max(m.H**2) + 1.0)
    assert adaptive_dt(m, 0.1) == pytest.approx(expect, rel=1e-12)
    assert expect == pytest.approx(0.1 / 40001, rel=1e-3)


def test_adaptive_dt_zero_safety_rejected_by_evolve():
    assert adaptive_dt(compute_geometry(circle(16)), 0.0) == 0.0
    with pytest.raises(ValueError):
        evolve(circle(16), StopCriteria(max_time=0.1), safety=0.0)


# ---------------------------------------------------------------- evolve


def test_evolve_circle_curvature_ceiling():
    traj = evolve(circle(128), StopCriteria(H_max=50.0), snapshot_stride=100)
    assert traj.reason == "CurvatureCeiling"
    target = 0.5 * (1 - 1 / 50.0**2)
    assert traj.times[-1] == pytest.approx(target, rel=0.02)
    assert np.max(traj.snapshots[-1].H) >= 50.0


def test_evolve_sphere_max_time(sphere3_flow):
    assert sphere3_flow.reason == "MaxTime"
    assert sphere3_flow.times[-1] == 0.2
    r = np.linalg.norm(sphere3_flow.snapshots[-1].vertices, axis=1)
    assert np.mean(r) == pytest.approx(math.sqrt(1 - 0.8), rel=0.01)


def test_evolve_zero_steps():
    traj = evolve(circle(32), StopCriteria(max_steps=0))
    assert len(traj) == 1
    assert traj.reason == "MaxSteps"


def test_evolve_step_floor():
    traj = evolve(circle(32), StopCriteria(dt_floor=1.0))
    assert traj.reason == "StepFloor" and len(traj) == 1


def test_evolve_keeps_final_state_and_connectivity(small_circle_flow):
    t = small_circle_flow
    assert t.times[-1] == pytest.approx(0.3, abs=0)
    assert np.all(np.diff(t.times) > 0)
    c0 = t.snapshots[0].cells
    assert all(np.array_equal(s.cells, c0) for s in t.snapshots)


def test_round_sphere_shape_preserved(sphere3_flow):
    cv = []
    for s in sphere3_flow.snapshots:
        r = np.linalg.norm(s.vertices, axis=1)
        cv.append(r.std() / r.mean())
    assert max(cv) < 1e-3


def test_circle_radius_tracks_exact(small_circle_flow):
    for s, t in zip(small_circle_flow.snapshots, small_circle_flow.times):
        r = np.linalg.norm(s.vertices, axis=1)
        # a 64-gon moves slightly faster than the circle: H r = (pi/N) / sin(pi/N)
        assert np.max(np.abs(r - math.sqrt(1 - 2 * t))) < 2e-3


def _discrete_ngon_extinction(N, safety=0.1):
    """Extinction time of the Euler-stepped regular N-gon.

    The polygon stays regular: with s = sin(pi/N) every vertex has
    H r = c = (pi/N)/s and the step dt = safety (2 r s)^2 scales the radius by
    q = 1 - 4 safety c s^2. Summing the geometric series of steps gives
    T_N = 4 safety s^2 / (1 - q^2).
    """
    s = math.sin(math.pi / N)
    c = (math.pi / N) / s
    q = 1 - 4 * safety * c * s * s
    return 4 * safety * s * s / (1 - q * q)


def test_extinction_time_approaches_half_monotonically():
    Ns = (16, 32, 64)
    Ts = []
    for N in Ns:
        traj = evolve(circle(N), StopCriteria(H_max=30.0), snapshot_stride=10)
        Ts.append(extinction_time_estimate(traj))
    gaps = [abs(T - 0.5) for T in Ts]
    assert gaps[0] > gaps[1] > gaps[2]
    assert Ts == pytest.approx([_discrete_ngon_extinction(N) for N in Ns], rel=1e-5)


def test_degenerate_step_reports_time(monkeypatch):
    calls = {"n": 0}
    real = flow.step

    def flaky(mesh, dt):
        calls["n"] += 1
        if calls["n"] == 3:
            raise DegenerateElementError("collapsed")
        return real(mesh, dt)

    monkeypatch.setattr(flow, "step", flaky)
    with pytest.raises(DegenerateElementError) as info:
        evolve(circle(32), StopCriteria(max_time=1.0))
    assert info.value.time is not None and info.value.time > 0


@pytest.mark.parametrize("kw", [dict(max_time=0.0), dict(H_max=-1.0), dict(dt_floor=0.0), dict(max_steps=-1)])
def test_stop_criteria_validation(kw):
    with pytest.raises(ValueError):
        StopCriteria(**kw)


@pytest.mark.parametrize("mesh", [circle(24), icosphere(1)], ids=["curve", "surface"])
def test_trajectory_round_trip(mesh, tmp_path):
    traj = evolve(mesh, StopCriteria(max_time=0.02), snapshot_stride=3)
    save_trajectory(traj, tmp_path / "traj")
    back = load_trajectory(tmp_path / "traj")
    assert back.reason == traj.reason
    assert np.array_equal(back.times, traj.times)
    for a, b in zip(traj.snapshots, back.snapshots):
        assert np.array_equal(a.vertices, b.vertices)
        assert np.array_equal(a.H, b.H)
    index = (tmp_path / "traj" / "index.txt").read_text().splitlines()
    assert index[1] == "# index time dt maxH area"
    assert len(index) == len(traj) + 2
