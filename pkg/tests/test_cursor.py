import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazebench import nnmap
from gazebench.cursor import (
    CursorConfig,
    CursorEventKind,
    CursorState,
    GazeSample,
    RollingWindow,
    Target,
    TargetLayout,
    apply_angle_step,
    apply_pixel_threshold,
    nearest_target,
    run_engine,
    smooth,
    step,
)
from gazebench.errors import EmptyWindow, InvalidInput, NotReady
from gazebench.geometry import HeadPose, synthetic_eye_vectors

LAYOUT = TargetLayout([Target(1, (200, 150), 80), Target(2, (400, 300), 80), Target(3, (600, 450), 80)])


def fixation(model, point, seconds=0.3, hz=100, seed=0, noise=0.0, pose_sd=0.0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(int(round(seconds * hz))):
        pose = HeadPose(*rng.normal(0, pose_sd, 3)) if pose_sd else HeadPose()
        left, right = synthetic_eye_vectors(model.world_point(point), pose)
        if noise:
            left = left + rng.normal(0, noise, 3)
            right = right + rng.normal(0, noise, 3)
            left, right = left / np.linalg.norm(left), right / np.linalg.norm(right)
        out.append((GazeSample(i / hz, left, right), pose))
    return out


def test_smooth_examples():
    assert np.array_equal(smooth([(t / 100, [3.0, 4.0]) for t in range(30)], 0.2), [3.0, 4.0])
    alternating = [(t / 100, [(-1.0) ** t]) for t in range(20)]
    assert smooth(alternating, 0.2) == [0.0]
    assert np.array_equal(smooth([(1.0, [7.0])], 0.2), [7.0])


def test_smooth_window_is_trailing_and_half_open():
    samples = [(0.0, [100.0]), (0.1, [1.0]), (0.2, [3.0])]
    # 0.0 lies exactly one window before 0.2 and is excluded.
    assert smooth(samples, 0.2) == [2.0]
    with pytest.raises(EmptyWindow):
        smooth(samples, 0.05, now=0.5)
    with pytest.raises(EmptyWindow):
        smooth([], 0.2)


def test_rolling_window_matches_batch_smoothing():
    rng = np.random.default_rng(0)
    win, seen = RollingWindow(0.2), []
    for i in range(100):
        t, v = i / 100, rng.normal(size=2)
        win.push(t, v)
        seen.append((t, v))
        assert np.allclose(win.mean(), smooth(seen, 0.2), atol=1e-12)
    assert len(win.buf) == 20


def test_pixel_threshold_examples():
    assert apply_pixel_threshold((100, 100), (110, 100), 15) == (100, 100)
    assert apply_pixel_threshold((100, 100), (120, 100), 15) == (120, 100)
    assert apply_pixel_threshold((100, 100), (100.5, 100), 0) == (100.5, 100)
    assert apply_pixel_threshold((100, 100), (900, 900), math.inf) == (100, 100)


def test_angle_step_examples():
    assert apply_angle_step(HeadPose(), HeadPose(1, 0, 0), 2).yaw_deg == 0
    assert apply_angle_step(HeadPose(), HeadPose(3, 0, 0), 2).yaw_deg == 3
    assert apply_angle_step(HeadPose(), HeadPose(0.1, 0, 0), 0).yaw_deg == 0.1
    # Per axis, and measured across the +-180 seam.
    assert apply_angle_step(HeadPose(0, 0, 179), HeadPose(5, 1, -179), 2).as_tuple() == (5, 0, 179)


def test_nearest_target_examples():
    assert nearest_target((400, 300), LAYOUT) == 2
    layout = TargetLayout([Target(5, (100, 0), 10), Target(2, (-100, 0), 10)])
    assert nearest_target((0, 0), layout) == 2
    assert nearest_target((0, 80), TargetLayout([Target(1, (0, 0), 10)]), snap_radius_px=50) is None
    with pytest.raises(InvalidInput):
        nearest_target((0, 0), TargetLayout([]))


@given(st.lists(st.tuples(st.integers(0, 800), st.integers(0, 600)), min_size=1, max_size=12, unique=True),
       st.tuples(st.floats(-100, 900), st.floats(-100, 700)))
def test_nearest_target_is_the_argmin(centres, point):
    layout = TargetLayout([Target(i, c, 10) for i, c in enumerate(centres)])
    chosen = layout.by_id(nearest_target(point, layout))
    best = min(math.dist(point, c) for c in centres)
    assert math.dist(point, chosen.center_px) == best


def test_layout_validation():
    with pytest.raises(InvalidInput):
        TargetLayout([Target(1, (0, 0), 10), Target(1, (5, 5), 10)])
    with pytest.raises(InvalidInput):
        TargetLayout([Target(1, (0, 0), 0)])
    with pytest.raises(InvalidInput):
        CursorConfig(window_s=0)


def test_untrained_net_is_not_ready(gaze_model):
    net = nnmap.init_network(nnmap.NetworkSpec(6, (4,), 2))
    g, p = fixation(gaze_model, (400, 300), seconds=0.01)[0]
    with pytest.raises(NotReady):
        step(CursorState(), g, p, net, CursorConfig())


def test_stationary_gaze_snaps_to_target(regressor, gaze_model):
    for target in LAYOUT:
        events = run_engine(fixation(gaze_model, target.center_px), regressor, CursorConfig(adaptive=True), LAYOUT)
        assert events[-1].kind is CursorEventKind.SNAPPED and events[-1].target_id == target.id


def test_steady_gaze_is_held_after_first_move(regressor, gaze_model):
    events = run_engine(fixation(gaze_model, (600, 450)), regressor, CursorConfig())
    assert events[0].kind is CursorEventKind.MOVED
    assert all(e.kind is CursorEventKind.HELD for e in events[1:])
    assert math.dist(events[-1].cursor_px, (600, 450)) < 40


def test_infinite_threshold_never_moves_zero_threshold_tracks(regressor, gaze_model):
    trace = fixation(gaze_model, (200, 150), noise=1e-3, seed=3)
    frozen = run_engine(trace, regressor, CursorConfig(pixel_threshold=math.inf))
    assert all(e.kind is CursorEventKind.HELD and e.cursor_px == (400, 300) for e in frozen)
    tracking = run_engine(trace, regressor, CursorConfig(pixel_threshold=0))
    assert all(e.kind is CursorEventKind.MOVED for e in tracking)


def test_cursor_is_clamped_to_screen(regressor, gaze_model):
    events = run_engine(fixation(gaze_model, (-400, -300)), regressor, CursorConfig())
    x, y = events[-1].cursor_px
    assert 0 <= x <= 800 and 0 <= y <= 600


def test_engine_is_deterministic(regressor, gaze_model):
    trace = fixation(gaze_model, (400, 300), seconds=1.0, noise=2e-3, pose_sd=4.0, seed=9)
    cfg = CursorConfig(adaptive=True)
    assert run_engine(trace, regressor, cfg, LAYOUT) == run_engine(trace, regressor, cfg, LAYOUT)
