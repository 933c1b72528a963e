"""Calibration routines driven by a synthetic gaze model.

Two procedures are simulated:

* the 9-point shrinking-square routine: a marker square starts at 90 px and
  shrinks while the user's compensated gaze is steady, snapping back to full
  size when the gaze wanders; once it reaches 10 px the last steady window of
  samples is recorded against the marker's screen position;
* the smooth-pursuit block sweep: a marker glides through the centres of a
  3x3 grid of screen blocks and every sample is labelled with the block the
  marker is in.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationTimeout, InvalidInput
from .geometry import HeadPose, compensate, synthetic_eye_vectors

SQUARE_MAX_PX = 90
SQUARE_MIN_PX = 10


@dataclass(frozen=True)
class CalibrationPoint:
    index: int
    center_px: tuple[float, float]


def marker_sequence(screen_w: float, screen_h: float, margin: float = 0.1) -> list[CalibrationPoint]:
    """Nine markers on a 3x3 grid inset by ``margin`` of each screen edge, row-major."""
    if not (screen_w > 0 and screen_h > 0):
        raise InvalidInput(f"screen dimensions must be positive, got {screen_w}x{screen_h}")
    xs = [screen_w * margin, screen_w * 0.5, screen_w * (1.0 - margin)]
    ys = [screen_h * margin, screen_h * 0.5, screen_h * (1.0 - margin)]
    return [CalibrationPoint(3 * r + c, (xs[c], ys[r])) for r in range(3) for c in range(3)]


@dataclass
class SyntheticGazeModel:
    """Pinhole user: eyes at the origin looking at a flat screen straight ahead.

    The screen centre sits ``distance_cm`` along +x.  Screen u grows to the
    user's right (-y) and v grows downward (-z).  ``cm_per_px`` defaults to an
    80-inch 4:3 surface showing 800x600 pixels.  Noise passed to the sampling
    methods is expressed in screen pixels and converted to a per-component
    standard deviation of ``noise_px * cm_per_px / distance_cm``.
    """

    screen_w: int = 800
    screen_h: int = 600
    distance_cm: float = 320.0
    cm_per_px: float = 80 * 2.54 * 0.8 / 800
    head_pose_std_deg: float = 5.0

    def world_point(self, point_px) -> np.ndarray:
        u, v = point_px
        return np.array([
            self.distance_cm,
            -(u - self.screen_w / 2.0) * self.cm_per_px,
            -(v - self.screen_h / 2.0) * self.cm_per_px,
        ])

    def ideal_vector(self, point_px) -> np.ndarray:
        p = self.world_point(point_px)
        return p / np.linalg.norm(p)

    def component_sigma(self, noise_px: float) -> float:
        return noise_px * self.cm_per_px / self.distance_cm

    def random_pose(self, rng: np.random.Generator) -> HeadPose:
        yaw, pitch, roll = rng.normal(0.0, self.head_pose_std_deg, size=3)
        return HeadPose(yaw, pitch, roll)

    def sample(self, point_px, pose: HeadPose, noise_px: float, rng: np.random.Generator) -> np.ndarray:
        """One compensated 6-vector for a user fixating ``point_px`` with ``pose``."""
        eye_l, eye_r = synthetic_eye_vectors(self.world_point(point_px), pose)
        if noise_px > 0:
            sigma = self.component_sigma(noise_px)
            eye_l = eye_l + rng.normal(0.0, sigma, 3)
            eye_r = eye_r + rng.normal(0.0, sigma, 3)
            eye_l /= np.linalg.norm(eye_l)
            eye_r /= np.linalg.norm(eye_r)
        return compensate(pose, eye_l, eye_r)


class FocusEvent(enum.Enum):
    PENDING = "pending"
    SHRINK = "shrink"
    RESET = "reset"
    COMPLETE = "complete"


@dataclass
class FocusState:
    window_len: int = 30
    std_threshold: float = 0.02
    shrink_step: int = 8
    square_px: int = SQUARE_MAX_PX
    window: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.window_len < 2:
            raise InvalidInput("window_len must be at least 2")
        if not SQUARE_MIN_PX <= self.square_px <= SQUARE_MAX_PX:
            raise InvalidInput(f"square_px must lie in [{SQUARE_MIN_PX}, {SQUARE_MAX_PX}]")


def focus_update(state: FocusState, sample) -> FocusEvent:
    """Feed one gaze sample to the shrinking-square focus detector.

    The decision is taken each time the window fills.  A steady window shrinks
    the square (or completes the marker when it is already at the minimum); an
    unsteady one restores the full size.  The window is cleared after every
    decision so each shrink step needs a fresh steady window.
    """
    state.window.append(np.asarray(sample, dtype=float))
    if len(state.window) < state.window_len:
        return FocusEvent.PENDING
    spread = float(np.max(np.std(np.stack(state.window), axis=0)))
    if spread >= state.std_threshold:
        state.square_px = SQUARE_MAX_PX
        state.window.clear()
        return FocusEvent.RESET
    if state.square_px <= SQUARE_MIN_PX:
        return FocusEvent.COMPLETE
    state.square_px = max(SQUARE_MIN_PX, state.square_px - state.shrink_step)
    state.window.clear()
    return FocusEvent.SHRINK


@dataclass
class CalibrationDataset:
    """Rows of gaze features with either screen targets or block labels."""

    inputs: np.ndarray
    targets: np.ndarray
    kind: str = "regression"
    markers: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        if self.kind == "regression":
            targets = np.asarray(self.targets, dtype=float)
            width = targets.shape[-1] if targets.ndim > 1 else (targets.size // max(len(self.inputs), 1))
            self.targets = targets.reshape(len(self.inputs), width)
        elif self.kind == "classification":
            self.targets = np.asarray(self.targets, dtype=np.int64).reshape(-1)
            if len(self.targets) and self.targets.min() < 0:
                raise InvalidInput("class labels must be non-negative")
        else:
            raise InvalidInput(f"unknown dataset kind {self.kind!r}")
        if len(self.targets) != len(self.inputs):
            raise InvalidInput("inputs and targets differ in length")
        if self.markers is None:
            self.markers = np.full(len(self.inputs), -1, dtype=np.int64)
        self.markers = np.asarray(self.markers, dtype=np.int64).reshape(-1)

    def __len__(self):
        return len(self.inputs)

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "CalibrationDataset":
        return CalibrationDataset(self.inputs[idx], self.targets[idx], self.kind, self.markers[idx])


def split_dataset(ds: CalibrationDataset, fractions=(0.7, 0.15, 0.15), seed: int = 0):
    """Shuffle and cut ``ds`` into train/validation/test parts."""
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidInput("fractions must be three non-negative numbers summing to 1")
    n = len(ds)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = min(n - n_train, int(round(fractions[1] * n)))
    return (
        ds.subset(order[:n_train]),
        ds.subset(order[n_train:n_train + n_val]),
        ds.subset(order[n_train + n_val:]),
    )


def run_calibration_sim(
    model: SyntheticGazeModel,
    noise_std: float = 0.0,
    seed: int = 0,
    window_len: int = 30,
    std_threshold: float = 0.02,
    shrink_step: int = 8,
    max_samples_per_marker: int = 3000,
) -> CalibrationDataset:
    """Simulate the 9-point routine; ``noise_std`` is in screen-pixel units.

    Each marker contributes the ``window_len`` samples of the window that
    completed it.  A marker that has not completed after
    ``max_samples_per_marker`` samples raises :class:`CalibrationTimeout`.
    """
    if noise_std < 0:
        raise InvalidInput("noise_std must be non-negative")
    rng = np.random.default_rng(seed)
    inputs, targets, markers = [], [], []
    for point in marker_sequence(model.screen_w, model.screen_h):
        pose = model.random_pose(rng)
        state = FocusState(window_len=window_len, std_threshold=std_threshold, shrink_step=shrink_step)
        for _ in range(max_samples_per_marker):
            event = focus_update(state, model.sample(point.center_px, pose, noise_std, rng))
            if event is FocusEvent.COMPLETE:
                break
        else:
            raise CalibrationTimeout(
                f"marker {point.index} did not converge within {max_samples_per_marker} samples"
            )
        inputs.extend(state.window)
        targets.extend([point.center_px] * len(state.window))
        markers.extend([point.index] * len(state.window))
    return CalibrationDataset(np.array(inputs), np.array(targets), "regression", np.array(markers))


def block_index(point_px, screen_w: float, screen_h: float, blocks=(3, 3)) -> int:
    rows, cols = blocks
    col = min(int(point_px[0] // (screen_w / cols)), cols - 1)
    row = min(int(point_px[1] // (screen_h / rows)), rows - 1)
    return row * cols + col


def block_centers(screen_w: float, screen_h: float, blocks=(3, 3)) -> list[tuple[float, float]]:
    rows, cols = blocks
    return [((c + 0.5) * screen_w / cols, (r + 0.5) * screen_h / rows) for r in range(rows) for c in range(cols)]


def pursuit_path(screen_w: float, screen_h: float, blocks=(3, 3)) -> list[tuple[float, float]]:
    """Block centres in boustrophedon order (left-to-right, then right-to-left, ...)."""
    rows, cols = blocks
    centers = block_centers(screen_w, screen_h, blocks)
    path = []
    for r in range(rows):
        order = range(cols) if r % 2 == 0 else range(cols - 1, -1, -1)
        path.extend(centers[r * cols + c] for c in order)
    return path


def block_calibration_sweep(
    model: SyntheticGazeModel,
    blocks=(3, 3),
    seed: int = 0,
    noise_std: float = 0.0,
    samples_per_segment: int = 40,
    dwell_samples: int = 20,
) -> CalibrationDataset:
    """Simulate the smooth-pursuit sweep and label each sample by block.

    Inputs are single 3-component gaze vectors (the mean of the two
    compensated eye vectors, renormalised).
    """
    if noise_std < 0:
        raise InvalidInput("noise_std must be non-negative")
    rng = np.random.default_rng(seed)
    pose = model.random_pose(rng)
    path = pursuit_path(model.screen_w, model.screen_h, blocks)
    positions = []
    for i, center in enumerate(path):
        positions.extend([center] * dwell_samples)
        if i + 1 < len(path):
            a, b = np.asarray(center), np.asarray(path[i + 1])
            for k in range(1, samples_per_segment):
                positions.append(tuple(a + (b - a) * k / samples_per_segment))
    inputs, labels = [], []
    for pos in positions:
        hc = model.sample(pos, pose, noise_std, rng)
        g = hc[:3] + hc[3:]
        inputs.append(g / np.linalg.norm(g))
        labels.append(block_index(pos, model.screen_w, model.screen_h, blocks))
    labels = np.array(labels)
    return CalibrationDataset(np.array(inputs), labels, "classification", labels.copy())
