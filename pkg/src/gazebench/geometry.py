"""Head-pose rotations and head compensation of per-eye gaze vectors.

Frame convention (right handed): +x forward out of the face, +y to the
user's left, +z up.  Yaw turns about z, pitch about y, roll about x, and the
head-to-reference transform is ``T = Tz(yaw) @ Ty(pitch) @ Tx(roll)``
(intrinsic z-y-x).  Positive yaw therefore turns the nose toward +y (left).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

UNIT_TOL = 1e-3


def wrap_degrees(angle: float) -> float:
    """Map an angle in degrees onto (-180, 180]."""
    a = math.fmod(float(angle), 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


@dataclass(frozen=True)
class HeadPose:
    yaw_deg: float = 0.0
    pitch_deg: float = 0.0
    roll_deg: float = 0.0

    def __post_init__(self):
        for name in ("yaw_deg", "pitch_deg", "roll_deg"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidInput(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, wrap_degrees(value))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.yaw_deg, self.pitch_deg, self.roll_deg)


def rotation_matrix(axis: str, angle_deg: float) -> np.ndarray:
    """Elementary rotation about ``axis`` ('x', 'y' or 'z') by ``angle_deg``."""
    if not math.isfinite(angle_deg):
        raise InvalidInput(f"angle must be finite, got {angle_deg!r}")
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    raise InvalidInput(f"axis must be one of 'x', 'y', 'z', got {axis!r}")


def compose_head_transform(pose: HeadPose) -> np.ndarray:
    """Head-frame to reference-frame rotation for ``pose``."""
    return (
        rotation_matrix("z", pose.yaw_deg)
        @ rotation_matrix("y", pose.pitch_deg)
        @ rotation_matrix("x", pose.roll_deg)
    )


def _unit_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise InvalidInput(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite components")
    if abs(np.linalg.norm(arr) - 1.0) > UNIT_TOL:
        raise InvalidInput(f"{name} is not unit length (norm {np.linalg.norm(arr):.6g})")
    return arr


def compensate(pose: HeadPose, eye_l, eye_r) -> np.ndarray:
    """Rotate both eye vectors into the reference frame and stack them.

    Returns a 6-vector: the compensated left vector followed by the right one.
    """
    left = _unit_vector(eye_l, "eye_l")
    right = _unit_vector(eye_r, "eye_r")
    t = compose_head_transform(pose)
    return np.concatenate([t @ left, t @ right])


def uncompensate(pose: HeadPose, compensated) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`compensate`: map a 6-vector back into the head frame."""
    c = np.asarray(compensated, dtype=float)
    if c.shape != (6,):
        raise InvalidInput(f"compensated gaze must have 6 components, got {c.shape}")
    tt = compose_head_transform(pose).T
    return tt @ c[:3], tt @ c[3:]


def synthetic_eye_vectors(world_point, pose: HeadPose, ipd_cm: float = 0.0):
    """Head-frame unit gaze vectors of a user fixating ``world_point``.

    The head rotates about the reference origin.  Eyes sit at ``(0, +ipd/2, 0)``
    (left) and ``(0, -ipd/2, 0)`` (right) in the head frame, so with the
    default ``ipd_cm=0`` both eyes are at the origin and the compensated gaze
    is independent of head pose.
    """
    p = np.asarray(world_point, dtype=float)
    if p.shape != (3,):
        raise InvalidInput("world_point must have 3 components")
    t = compose_head_transform(pose)
    out = []
    for side in (1.0, -1.0):
        eye_head = np.array([0.0, side * ipd_cm / 2.0, 0.0])
        ray = p - t @ eye_head
        n = np.linalg.norm(ray)
        if n == 0.0:
            raise InvalidInput("world point coincides with an eye position")
        out.append(t.T @ (ray / n))
    return out[0], out[1]
