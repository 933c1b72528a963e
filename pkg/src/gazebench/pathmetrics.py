"""Cursor path efficiency measures relative to the task axis.

Coordinates are first mapped into an axis frame with the movement source at
the origin and the target centre on +x'.  y' is positive to the left of the
direction of travel (for a y-up plane).  From those coordinates:

MV   sample standard deviation of y'
ME   mean |y'|
MO   mean y'
ODC  sign changes between consecutive y' steps
MDC  sign changes between consecutive x' steps
TAC  sign changes of y' itself (crossings of the axis)
RE   entries into the target disc after the first one

Exact zeros are skipped when looking for sign changes.  Sums use
``math.fsum`` so results do not depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInput

METRIC_NAMES = ("MV", "ME", "MO", "ODC", "MDC", "TAC", "RE")


@dataclass(frozen=True)
class TaskAxis:
    source_px: tuple
    target_center_px: tuple
    target_width_px: float

    def __post_init__(self):
        if tuple(self.source_px) == tuple(self.target_center_px):
            raise InvalidInput("task axis source and target coincide")
        if not self.target_width_px > 0:
            raise InvalidInput("target width must be positive")


@dataclass(frozen=True)
class EfficiencyReport:
    MV: float
    ME: float
    MO: float
    ODC: int
    MDC: int
    TAC: int
    RE: int

    def as_dict(self) -> dict:
        return asdict(self)


def to_axis_coords(xy, axis: TaskAxis) -> np.ndarray:
    """Rigidly move points ``xy`` (n x 2) into the task-axis frame."""
    pts = np.asarray(xy, dtype=float).reshape(-1, 2)
    sx, sy = (float(v) for v in axis.source_px)
    dx = float(axis.target_center_px[0]) - sx
    dy = float(axis.target_center_px[1]) - sy
    length = math.hypot(dx, dy)
    if length == 0.0:
        raise InvalidInput("degenerate task axis")
    rx = pts[:, 0] - sx
    ry = pts[:, 1] - sy
    along = (rx * dx + ry * dy) / length
    across = (dx * ry - dy * rx) / length
    return np.column_stack([along, across])


def count_sign_changes(values) -> int:
    """Sign changes in a sequence, ignoring exact zeros."""
    signs = np.sign(np.asarray(values, dtype=float))
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def target_reentries(xy, center, width: float) -> int:
    pts = np.asarray(xy, dtype=float).reshape(-1, 2)
    inside = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1]) <= width / 2.0
    entries = int(inside[0]) + int(np.count_nonzero(inside[1:] & ~inside[:-1]))
    return max(0, entries - 1)


def efficiency_metrics(xy, axis: TaskAxis) -> EfficiencyReport:
    """All seven efficiency measures for one trace of cursor positions."""
    pts = np.asarray(xy, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise InvalidInput("efficiency metrics need at least two samples")
    ax = to_axis_coords(pts, axis)
    xp, yp = ax[:, 0], ax[:, 1]
    mean_y = math.fsum(yp) / n
    mv = math.sqrt(math.fsum((yp - mean_y) ** 2) / (n - 1))
    me = math.fsum(np.abs(yp)) / n
    return EfficiencyReport(
        MV=mv,
        ME=me,
        MO=mean_y,
        ODC=count_sign_changes(np.diff(yp)),
        MDC=count_sign_changes(np.diff(xp)),
        TAC=count_sign_changes(yp),
        RE=target_reentries(pts, axis.target_center_px, axis.target_width_px),
    )


def mean_reports(reports) -> dict:
    """Per-metric mean over several traces (counts become fractional)."""
    reports = list(reports)
    if not reports:
        raise InvalidInput("no reports to average")
    return {name: math.fsum(getattr(r, name) for r in reports) / len(reports) for name in METRIC_NAMES}
