"""Gaze-driven pointer engine.

Per sample the engine filters the head pose with an angle-step threshold,
compensates the eye vectors, averages inputs over a trailing time window,
maps them to the screen with a trained regressor, averages the predictions
over the same window and moves the cursor only when the smoothed prediction
has drifted past a pixel threshold.  In adaptive mode the target nearest to
the cursor is activated on every sample.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyWindow, InvalidInput, NotReady
from .geometry import HeadPose, compensate, wrap_degrees
from .nnmap import TrainedNet, forward

_WINDOW_EPS = 1e-9


@dataclass
class CursorConfig:
    window_s: float = 0.2
    pixel_threshold: float = 15.0
    angle_step_deg: float = 2.0
    snap_radius_px: float = math.inf
    adaptive: bool = False

    def __post_init__(self):
        if not self.window_s > 0:
            raise InvalidInput("window_s must be positive")
        if self.pixel_threshold < 0 or self.angle_step_deg < 0 or self.snap_radius_px < 0:
            raise InvalidInput("thresholds must be non-negative")


@dataclass(frozen=True)
class Target:
    id: int
    center_px: tuple
    width_px: float


class TargetLayout:
    def __init__(self, targets):
        self.targets = list(targets)
        ids = [t.id for t in self.targets]
        if len(set(ids)) != len(ids):
            raise InvalidInput("target ids must be unique")
        if any(not t.width_px > 0 for t in self.targets):
            raise InvalidInput("target widths must be positive")

    def __len__(self):
        return len(self.targets)

    def __iter__(self):
        return iter(self.targets)

    def by_id(self, target_id) -> Target:
        for t in self.targets:
            if t.id == target_id:
                return t
        raise KeyError(target_id)


def smooth(samples, window_s: float, now: float | None = None) -> np.ndarray:
    """Mean of the ``(t, vector)`` samples with ``now - window_s < t <= now``.

    ``now`` defaults to the newest timestamp.  Raises :class:`EmptyWindow`
    when no sample qualifies.
    """
    samples = list(samples)
    if not samples:
        raise EmptyWindow("no samples")
    if now is None:
        now = max(t for t, _ in samples)
    lo = now - window_s + _WINDOW_EPS
    inside = [np.asarray(v, dtype=float) for t, v in samples if lo < t <= now + _WINDOW_EPS]
    if not inside:
        raise EmptyWindow(f"no samples in ({now - window_s}, {now}]")
    return np.mean(inside, axis=0)


class RollingWindow:
    """Time-stamped buffer that forgets samples older than ``window_s``."""

    def __init__(self, window_s: float):
        self.window_s = window_s
        self.buf = deque()

    def push(self, t: float, value) -> None:
        self.buf.append((t, np.asarray(value, dtype=float)))
        while self.buf and self.buf[0][0] <= t - self.window_s + _WINDOW_EPS:
            self.buf.popleft()

    def mean(self) -> np.ndarray:
        return smooth(self.buf, self.window_s)


def apply_pixel_threshold(current_px, predicted_px, pixel_threshold: float):
    """Return ``predicted_px`` if it is more than the threshold away, else ``current_px``."""
    dist = math.hypot(predicted_px[0] - current_px[0], predicted_px[1] - current_px[1])
    if dist > pixel_threshold:
        return (float(predicted_px[0]), float(predicted_px[1]))
    return (float(current_px[0]), float(current_px[1]))


def apply_angle_step(accepted: HeadPose, incoming: HeadPose, angle_step_deg: float) -> HeadPose:
    """Adopt each incoming angle only when it differs by more than the step."""
    out = []
    for old, new in zip(accepted.as_tuple(), incoming.as_tuple()):
        out.append(new if abs(wrap_degrees(new - old)) > angle_step_deg else old)
    return HeadPose(*out)


def nearest_target(point_px, layout, snap_radius_px: float = math.inf):
    """Id of the target centre nearest ``point_px`` within the snap radius, or None.

    Equal distances resolve to the lowest id.
    """
    best = None
    for t in layout:
        d2 = (t.center_px[0] - point_px[0]) ** 2 + (t.center_px[1] - point_px[1]) ** 2
        key = (d2, t.id)
        if best is None or key < best[0]:
            best = (key, t)
    if best is None:
        raise InvalidInput("layout is empty")
    if math.sqrt(best[0][0]) > snap_radius_px:
        return None
    return best[1].id


@dataclass
class GazeSample:
    t_s: float
    eye_l: np.ndarray
    eye_r: np.ndarray
    gp: tuple | None = None


class CursorEventKind(enum.Enum):
    MOVED = "moved"
    HELD = "held"
    SNAPPED = "snapped"


@dataclass
class CursorEvent:
    kind: CursorEventKind
    t_s: float
    cursor_px: tuple
    target_id: int | None = None


@dataclass
class CursorState:
    screen_w: float = 800
    screen_h: float = 600
    cursor_px: tuple = None
    pose: HeadPose = field(default_factory=HeadPose)
    window_s: float = 0.2
    inputs: RollingWindow = None
    predictions: RollingWindow = None

    def __post_init__(self):
        if self.cursor_px is None:
            self.cursor_px = (self.screen_w / 2.0, self.screen_h / 2.0)
        self.inputs = self.inputs or RollingWindow(self.window_s)
        self.predictions = self.predictions or RollingWindow(self.window_s)


def step(state: CursorState, gaze: GazeSample, pose: HeadPose, net: TrainedNet,
         cfg: CursorConfig, layout: TargetLayout | None = None) -> CursorEvent:
    """Advance the engine by one gaze sample and report what the cursor did."""
    if not net.trained:
        raise NotReady("cursor engine needs a trained regressor")
    state.pose = apply_angle_step(state.pose, pose, cfg.angle_step_deg)
    state.inputs.window_s = state.predictions.window_s = cfg.window_s
    state.inputs.push(gaze.t_s, compensate(state.pose, gaze.eye_l, gaze.eye_r))
    pred = forward(net, state.inputs.mean())
    pred = (min(max(pred[0], 0.0), state.screen_w), min(max(pred[1], 0.0), state.screen_h))
    state.predictions.push(gaze.t_s, pred)
    smoothed = state.predictions.mean()
    previous = state.cursor_px
    state.cursor_px = apply_pixel_threshold(previous, smoothed, cfg.pixel_threshold)
    if cfg.adaptive and layout is not None and len(layout):
        tid = nearest_target(state.cursor_px, layout, cfg.snap_radius_px)
        if tid is not None:
            return CursorEvent(CursorEventKind.SNAPPED, gaze.t_s, state.cursor_px, tid)
    kind = CursorEventKind.MOVED if state.cursor_px != previous else CursorEventKind.HELD
    return CursorEvent(kind, gaze.t_s, state.cursor_px)


def run_engine(samples, net: TrainedNet, cfg: CursorConfig, layout: TargetLayout | None = None,
               state: CursorState | None = None) -> list[CursorEvent]:
    """Drive :func:`step` over ``(GazeSample, HeadPose)`` pairs."""
    state = state or CursorState(window_s=cfg.window_s)
    return [step(state, g, p, net, cfg, layout) for g, p in samples]
