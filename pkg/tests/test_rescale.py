import csv
import math

import numpy as np
import pytest

from mcflab.errors import HypothesisNotMetError, NoBlowupError, WindowOutOfRangeError
from mcflab.flow import StopCriteria, evolve
from mcflab.rescale import (
    BLOWUP_COLUMNS,
    BlowupSequence,
    contradiction_witness,
    normalize_window,
    rescale_snapshot,
    rescale_trajectory,
    select_blowup_sequence,
    vanishing_local_norms,
    write_blowup_csv,
)
from mcflab.shapes import circle, neck_mask, torus
from mcflab.spacetime import ParabolicCylinder, spacetime_norm
from mcflab import suites

THRESHOLDS = (2.0, 4.0, 8.0, 16.0)


@pytest.fixture(scope="module")
def circle_sequence(circle_to_ceiling):
    return select_blowup_sequence(circle_to_ceiling, THRESHOLDS)


# ---------------------------------------------------------------------------
# single windows


def test_identity_rescale():
    traj = evolve(circle(64, 2.0), StopCriteria(max_time=1.0), snapshot_stride=10)
    w = rescale_trajectory(traj, 1.0, float(traj.times[-1]))
    assert w.times[0] == pytest.approx(0.0, abs=traj.step_dts.max())
    for a, b in zip(w.snapshots, traj.snapshots):
        assert np.array_equal(a.vertices, b.vertices)
        assert np.array_equal(a.H, b.H)
        assert np.array_equal(a.area, b.area)


def test_sphere_window_closed_form(sphere3_flow):
    Q, t_i = 4.0, 0.125
    w = rescale_trajectory(sphere3_flow, Q, t_i)
    for s, t in zip(w.snapshots, w.times):
        r = Q * math.sqrt(1.0 - 4.0 * (t_i + (t - 1.0) / Q**2))
        radius = np.linalg.norm(s.vertices, axis=1)
        np.testing.assert_allclose(radius, r, rtol=0.01)
        np.testing.assert_allclose(s.H, 2.0 / r, rtol=0.02)
    # H~ at the final slice is H(t_i) / Q
    np.testing.assert_allclose(w.snapshots[-1].H, 2.0 / math.sqrt(0.5) / Q, rtol=0.01)


def test_half_extinction_window_with_Q2_is_out_of_range(sphere3_flow):
    # the window [T/2 - 1/4, T/2] starts before t = 0
    with pytest.raises(WindowOutOfRangeError):
        rescale_trajectory(sphere3_flow, 2.0, 0.125)


def test_window_past_the_end(sphere3_flow):
    with pytest.raises(WindowOutOfRangeError):
        rescale_trajectory(sphere3_flow, 10.0, 0.3)


def test_window_needs_two_snapshots(circle_to_ceiling):
    t = float(circle_to_ceiling.times[3])
    with pytest.raises(WindowOutOfRangeError):
        rescale_trajectory(circle_to_ceiling, 1e6, t)


def test_rescaling_is_pure_arithmetic(moser_window):
    w = moser_window.traj
    src = moser_window.source
    for s, j in zip(w.snapshots, w.source_indices):
        assert np.array_equal(s.H * w.Q, src.snapshots[j].H)
        assert not s.H.flags.writeable


def test_critical_norm_invariant(moser_window):
    w = moser_window.traj
    src = moser_window.source
    idx = w.source_indices
    from mcflab.spacetime import FlowTrajectory

    cut = FlowTrajectory([src.snapshots[j] for j in idx], src.times[idx])
    a = spacetime_norm(cut, "H", 4.0).value
    b = spacetime_norm(w, "H", 4.0).value
    assert b == pytest.approx(a, rel=1e-12)


@pytest.mark.parametrize("alpha", [2.0, 3.0, 6.0])
def test_noncritical_norm_scaling(moser_window, alpha):
    w = moser_window.traj
    src = moser_window.source
    idx = w.source_indices
    from mcflab.spacetime import FlowTrajectory

    cut = FlowTrajectory([src.snapshots[j] for j in idx], src.times[idx])
    a = spacetime_norm(cut, "H", alpha).value
    b = spacetime_norm(w, "H", alpha).value
    assert b == pytest.approx(a * w.Q ** (4.0 / alpha - 1.0), rel=1e-12)


def test_rescale_snapshot_areas():
    from mcflab.geometry import compute_geometry

    g = compute_geometry(circle(32))
    s = rescale_snapshot(g, 3.0)
    assert s.total_area == pytest.approx(3.0 * g.total_area, rel=1e-14)


def test_normalize_window_defaults(moser_window):
    assert moser_window.t_i == pytest.approx(0.1875)
    assert moser_window.Q == pytest.approx(4.0, rel=0.01)
    last = moser_window.traj.snapshots[-1]
    assert last.H[moser_window.vertex] == 1.0
    np.testing.assert_array_equal(moser_window.center, last.vertices[moser_window.vertex])
    assert moser_window.traj.times[-1] == pytest.approx(1.0, abs=1e-12)


def test_normalize_window_explicit_center(sphere3_flow):
    w = normalize_window(sphere3_flow, 0.125, 4.0, center=(0.0, 0.0, 1.0))
    assert w.vertex is None
    np.testing.assert_array_equal(w.center, [0.0, 0.0, 4.0])


# ---------------------------------------------------------------------------
# blow-up sequences


def test_circle_blowup_times(circle_sequence):
    seq = circle_sequence
    assert len(seq) == len(THRESHOLDS)
    assert np.all(np.diff(seq.Q) > 0)
    for e in seq.entries:
        assert e.Q >= e.threshold
        assert e.t_i == pytest.approx((1.0 - 1.0 / e.Q**2) / 2.0, rel=0.01)
        assert e.H_tilde_at_mark == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.norm(e.x_i) == pytest.approx(1.0 / e.Q, rel=0.01)


def test_no_blowup_on_relaxing_torus():
    traj = evolve(torus(2.0, 1.0, 32, 16), StopCriteria(max_time=0.02), snapshot_stride=10)
    assert float(max(s.H.max() for s in traj.snapshots)) < 2.0
    with pytest.raises(NoBlowupError):
        select_blowup_sequence(traj, [10.0, 20.0])


def test_dumbbell_blowup_points_on_neck(dumbbell_flow):
    seq = select_blowup_sequence(dumbbell_flow, [4.0, 6.0, 8.0])
    # H = 4 is reached at t ~ 0.04 < 1/16, too early for a full window
    assert seq.skipped == [4.0]
    assert len(seq) == 2
    for e in seq.entries:
        assert neck_mask(dumbbell_flow.snapshots[e.snapshot])[e.vertex]


def test_early_thresholds_are_skipped(circle_to_ceiling):
    # max H = 1.0001 is reached at t ~ 1e-4, long before a window of width ~1 fits
    seq = select_blowup_sequence(circle_to_ceiling, [1.0001, 4.0])
    assert seq.skipped == [1.0001]
    assert len(seq) == 1


def test_vanishing_terms_self_similar_circle(circle_sequence):
    van = vanishing_local_norms(circle_sequence, 0.0)
    assert np.all(van.B_terms == 0.0)
    # the shrinking circle is self-similar, so the local norm barely moves
    np.testing.assert_allclose(van.H_terms, van.H_terms[0], rtol=1e-3)
    assert abs(van.slope) < 1e-3


def test_vanishing_B_term_decays(circle_sequence):
    van = vanishing_local_norms(circle_sequence, 1.0)
    assert np.all(np.diff(van.B_terms) < 0)
    for e, b in zip(circle_sequence.entries, van.B_terms):
        one = spacetime_norm(e.window, 1.0, 3.0, ParabolicCylinder(tuple(e.center), 0)).value
        assert b * e.Q == pytest.approx(one, rel=1e-12)


def test_vanishing_needs_entries():
    with pytest.raises(NoBlowupError):
        vanishing_local_norms(BlowupSequence([]))


def test_circle_witness(circle_sequence, pins):
    wit = contradiction_witness(circle_sequence, pins["c_n"])
    assert len(wit.rows) == len(THRESHOLDS)
    for r in wit.rows:
        assert r.sup_Hplus == pytest.approx(1.0, abs=1e-9)
        # the normalized circle window is never small
        assert not r.hypothesis


def test_witness_strict_mode(circle_sequence, pins):
    with pytest.raises(HypothesisNotMetError):
        contradiction_witness(circle_sequence, pins["c_n"], strict=True)


def test_single_entry_witness(circle_to_ceiling, pins):
    seq = select_blowup_sequence(circle_to_ceiling, [8.0])
    wit = contradiction_witness(seq, pins["c_n"])
    assert len(wit.rows) == 1
    assert wit.bound_decreasing is None


def test_blowup_csv(tmp_path, circle_sequence, pins):
    path = tmp_path / "blowup.csv"
    write_blowup_csv(path, contradiction_witness(circle_sequence, pins["c_n"]))
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == BLOWUP_COLUMNS
    assert [int(r["entry"]) for r in rows] == [0, 1, 2, 3]
    assert len(rows[0]["x_i"].split()) == 2
