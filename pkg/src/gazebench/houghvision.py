"""Scene-video measurement: find the gaze marker and the target circle,
then report their separation in pixels, centimetres and visual angle.

Pipeline: gray -> Gaussian blur -> adaptive mean threshold (inverse binary,
dark outlines become foreground) -> 3x3 opening -> gradient Hough.

The Hough stage is a two-step variant: every edge pixel votes for centres
along its gradient line over the radius range, then each accepted centre gets
its radius from a circumference-normalised histogram of foreground distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidParams, MissingRole

CM_PER_PX = 2.2 / 59


@dataclass(frozen=True)
class Circle:
    cx_px: float
    cy_px: float
    r_px: float
    score: float = 0.0


@dataclass(frozen=True)
class DistanceResult:
    euclid_px: float
    manhattan_px: float
    euclid_cm: float
    visual_angle_deg: float
    gaze: Circle | None = None
    target: Circle | None = None


@dataclass(frozen=True)
class PreprocessParams:
    gauss_ksize: int = 5
    gauss_sigma: float = 1.0
    block_size: int = 11
    offset: float = 20.0
    morph_size: int = 3


def to_gray(image) -> np.ndarray:
    """uint8 grayscale; RGB input uses Rec.601 luma weights."""
    arr = np.asarray(image)
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        arr = arr[..., :3].astype(np.float64) @ np.array([0.299, 0.587, 0.114])
        arr = np.rint(arr)
    elif arr.ndim != 2:
        raise InvalidParams(f"expected a 2-D gray or HxWx3 image, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidParams("image has no pixels")
    return np.clip(arr, 0, 255).astype(np.uint8)


def gaussian_blur(gray, ksize: int = 5, sigma: float = 1.0) -> np.ndarray:
    if ksize < 1 or ksize % 2 == 0 or sigma <= 0:
        raise InvalidParams("Gaussian kernel size must be odd and positive, sigma > 0")
    radius = ksize // 2
    return ndimage.gaussian_filter(np.asarray(gray, dtype=np.float64), sigma,
                                   mode="mirror", truncate=radius / sigma)


def adaptive_threshold(img, block_size: int = 11, offset: float = 20.0) -> np.ndarray:
    """Inverse-binary mean threshold: 255 where ``pixel <= local_mean - offset``."""
    if block_size < 3 or block_size % 2 == 0:
        raise InvalidParams("block size must be odd and >= 3")
    img = np.asarray(img, dtype=np.float64)
    local = ndimage.uniform_filter(img, block_size, mode="nearest")
    return np.where(img <= local - offset, 255, 0).astype(np.uint8)


def morph_open(binary, size: int = 3) -> np.ndarray:
    if size < 1:
        raise InvalidParams("morphology size must be positive")
    fg = np.asarray(binary) > 0
    opened = ndimage.binary_opening(fg, structure=np.ones((size, size), bool), border_value=0)
    # binary_erosion with border 0 would eat foreground touching the frame edge;
    # restore it with a replicated-border opening there.
    padded = np.pad(fg, size, mode="edge")
    opened_edge = ndimage.binary_opening(padded, structure=np.ones((size, size), bool))[size:-size, size:-size]
    return np.where(opened | opened_edge, 255, 0).astype(np.uint8)


def preprocess(image, params: PreprocessParams | None = None) -> np.ndarray:
    p = params or PreprocessParams()
    gray = to_gray(image)
    if max(p.gauss_ksize, p.block_size, p.morph_size) > min(gray.shape):
        raise InvalidParams("kernel larger than image")
    blurred = gaussian_blur(gray, p.gauss_ksize, p.gauss_sigma)
    return morph_open(adaptive_threshold(blurred, p.block_size, p.offset), p.morph_size)


def _sobel(img):
    gx = ndimage.sobel(img, axis=1, mode="nearest")
    gy = ndimage.sobel(img, axis=0, mode="nearest")
    return gx, gy


def hough_accumulator(binary, radius_min: int, radius_max: int) -> np.ndarray:
    """Centre votes cast by edge pixels along their gradient lines."""
    fg = (np.asarray(binary) > 0).astype(np.float64)
    h, w = fg.shape
    smooth = ndimage.gaussian_filter(fg, 1.0, mode="nearest")
    gx, gy = _sobel(smooth)
    mag = np.hypot(gx, gy)
    edges = mag > 0.25 * mag.max() if mag.max() > 0 else np.zeros_like(fg, bool)
    ys, xs = np.nonzero(edges)
    acc = np.zeros(h * w, dtype=np.int64)
    if xs.size == 0:
        return acc.reshape(h, w)
    ux = gx[ys, xs] / mag[ys, xs]
    uy = gy[ys, xs] / mag[ys, xs]
    radii = np.arange(radius_min, radius_max + 1, dtype=np.float64)
    for sign in (1.0, -1.0):
        cx = np.rint(xs[:, None] + sign * radii[None, :] * ux[:, None]).astype(np.int64)
        cy = np.rint(ys[:, None] + sign * radii[None, :] * uy[:, None]).astype(np.int64)
        ok = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
        acc += np.bincount((cy[ok] * w + cx[ok]), minlength=h * w)
    return acc.reshape(h, w)


def _fit_circle(xs, ys):
    """Algebraic (Kasa) least-squares circle through points."""
    a = np.column_stack([xs, ys, np.ones_like(xs)])
    b = xs * xs + ys * ys
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy = sol[0] / 2, sol[1] / 2
    r2 = sol[2] + cx * cx + cy * cy
    return cx, cy, math.sqrt(r2) if r2 > 0 else 0.0


def _radius_for_centre(fg_xs, fg_ys, cx, cy, radius_min, radius_max):
    d = np.hypot(fg_xs - cx, fg_ys - cy)
    sel = (d >= radius_min - 1.5) & (d < radius_max + 1.5)
    counts = np.bincount(np.rint(d[sel]).astype(np.int64), minlength=radius_max + 3)
    radii = np.arange(counts.size, dtype=np.float64)
    band = np.convolve(counts, np.ones(3), mode="same")
    support = np.zeros_like(band, dtype=np.float64)
    support[1:] = band[1:] / (2 * math.pi * radii[1:])
    lo, hi = radius_min, min(radius_max, counts.size - 1)
    if hi < lo:
        return None, 0.0
    best = lo + int(np.argmax(support[lo:hi + 1]))
    return best, float(support[best])


def detect_circles(image, radius_min: int, radius_max: int, acc_threshold: float = 20.0,
                   min_dist: float = 20.0, min_support: float = 1.5) -> list[Circle]:
    """Circles in a binary (or already thresholded) image, strongest first.

    ``acc_threshold`` is the minimum number of centre votes (summed over a
    3x3 neighbourhood); ``min_support`` the minimum foreground pixels per unit
    circumference at the chosen radius; ``min_dist`` the suppression distance
    between accepted centres.
    """
    if radius_min < 1 or radius_max < radius_min:
        raise InvalidParams("need 1 <= radius_min <= radius_max")
    if min_dist <= 0:
        raise InvalidParams("min_dist must be positive")
    binary = np.asarray(image)
    if binary.ndim != 2:
        binary = to_gray(binary)
    acc = hough_accumulator(binary, int(radius_min), int(radius_max))
    votes = ndimage.uniform_filter(acc.astype(np.float64), 3, mode="constant") * 9
    peaks = (votes == ndimage.maximum_filter(votes, 5, mode="constant")) & (votes >= acc_threshold)
    pys, pxs = np.nonzero(peaks)
    order = np.lexsort((pxs, pys, -votes[pys, pxs]))
    fy, fx = np.nonzero(binary > 0)
    fxs, fys = fx.astype(np.float64), fy.astype(np.float64)
    found: list[Circle] = []
    for k in order:
        # Vote-weighted sub-pixel centre from the 3x3 neighbourhood.
        y0, x0 = pys[k], pxs[k]
        ys_, xs_ = slice(max(y0 - 1, 0), y0 + 2), slice(max(x0 - 1, 0), x0 + 2)
        win = acc[ys_, xs_].astype(np.float64)
        gy, gx = np.mgrid[ys_, xs_]
        cx, cy = (win * gx).sum() / win.sum(), (win * gy).sum() / win.sum()
        if any(math.hypot(cx - c.cx_px, cy - c.cy_px) < min_dist for c in found):
            continue
        r, support = _radius_for_centre(fxs, fys, cx, cy, radius_min, radius_max)
        if r is None or support < 0.5 * min_support:
            continue
        # Refine on the ring pixels around the chosen radius; the vote peak
        # can sit a few pixels off under noise, so support is scored after.
        for _ in range(3):
            d = np.hypot(fxs - cx, fys - cy)
            ring = np.abs(d - r) <= 3.0
            if ring.sum() < 8:
                break
            ncx, ncy, nr = _fit_circle(fxs[ring], fys[ring])
            if not (math.isfinite(nr) and math.hypot(ncx - cx, ncy - cy) < max(3.0, 0.25 * r)):
                break
            cx, cy, r = ncx, ncy, nr
        if not radius_min - 1 <= r <= radius_max + 1:
            continue
        _, support = _radius_for_centre(fxs, fys, cx, cy, max(radius_min, int(round(r))),
                                        max(radius_min, int(round(r))))
        if support < min_support:
            continue
        h, w = binary.shape
        if not (0 <= cx < w and 0 <= cy < h and r > 0):
            continue
        if any(math.hypot(cx - c.cx_px, cy - c.cy_px) < min_dist for c in found):
            continue
        found.append(Circle(float(cx), float(cy), float(r), float(votes[y0, x0])))
    return found


def classify_circles(circles, gaze_r_max: float = 20.0, target_r_min: float = 40.0):
    """Split detections into (gaze, target); a missing role is ``None``.

    Gaze candidates have ``r < gaze_r_max``, target candidates
    ``r >= target_r_min``.  Among several candidates for a role the highest
    score wins; equal scores fall back to the smallest (gaze) or largest
    (target) radius.
    """
    if not gaze_r_max < target_r_min:
        raise InvalidParams("gaze_r_max must be below target_r_min")
    gaze = [c for c in circles if c.r_px < gaze_r_max]
    target = [c for c in circles if c.r_px >= target_r_min]
    g = max(gaze, key=lambda c: (c.score, -c.r_px), default=None)
    t = max(target, key=lambda c: (c.score, c.r_px), default=None)
    return g, t


def gaze_target_distance(gaze: Circle | None, target: Circle | None) -> tuple[float, float]:
    if gaze is None or target is None:
        missing = [n for n, c in (("gaze", gaze), ("target", target)) if c is None]
        raise MissingRole(f"missing circle role(s): {', '.join(missing)}")
    dx = target.cx_px - gaze.cx_px
    dy = target.cy_px - gaze.cy_px
    return math.hypot(dx, dy), abs(dx) + abs(dy)


def px_to_cm(d_px: float, scale_cm_per_px: float | None = None) -> float:
    """Pixels to centimetres; the default scale is 59 px per 2.2 cm."""
    if scale_cm_per_px is None:
        # Multiply before dividing so whole multiples of 59 px land exactly.
        return d_px * 2.2 / 59
    if not scale_cm_per_px > 0:
        raise InvalidParams("scale must be positive")
    return d_px * scale_cm_per_px


def visual_angle(d_cm: float, eye_distance_cm: float) -> float:
    """Angle subtended by an extent ``d_cm`` seen from ``eye_distance_cm``, in degrees."""
    if not eye_distance_cm > 0:
        raise InvalidParams("eye distance must be positive")
    return math.degrees(2.0 * math.atan(d_cm / (2.0 * eye_distance_cm)))


def render_scene(circles, noise_std: float = 0.0, seed: int = 0, width: int = 320, height: int = 240,
                 background: int = 200, foreground: int = 40, stroke_px: float = 3.0) -> np.ndarray:
    """Anti-aliased circle outlines on a flat background, with optional Gaussian noise."""
    if width < 1 or height < 1:
        raise InvalidParams("image size must be positive")
    if noise_std < 0:
        raise InvalidParams("noise_std must be non-negative")
    img = np.full((height, width), float(background))
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    half = stroke_px / 2.0
    for c in circles:
        cx, cy, r = (c.cx_px, c.cy_px, c.r_px) if isinstance(c, Circle) else c
        if r <= 0 or cx - r - half < 0 or cy - r - half < 0 or cx + r + half > width - 1 or cy + r + half > height - 1:
            raise InvalidParams(f"circle ({cx}, {cy}, r={r}) does not fit in {width}x{height}")
        dist = np.abs(np.hypot(xx - cx, yy - cy) - r)
        cover = np.clip(half + 0.5 - dist, 0.0, 1.0)
        img = img + (foreground - img) * cover
    if noise_std > 0:
        img = img + np.random.default_rng(seed).normal(0.0, noise_std, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def contour_radius(binary) -> float:
    """Radius of the largest ring in a binary image, from the areas it encloses.

    Outer radius comes from the hole-filled area, inner radius from the
    enclosed hole; the outline's centreline radius is their mean.
    """
    fg = np.asarray(binary) > 0
    labels, n = ndimage.label(fg)
    if n == 0:
        raise InvalidParams("no foreground contour")
    best_area, best = -1, None
    for k in range(1, n + 1):
        filled = ndimage.binary_fill_holes(labels == k)
        area = int(filled.sum())
        if area > best_area:
            best_area, best = area, (filled, labels == k)
    filled, ring = best
    hole = int(filled.sum() - ring.sum())
    return 0.5 * (math.sqrt(filled.sum() / math.pi) + math.sqrt(max(hole, 0) / math.pi))


def measure_distance(image, radius_min: int = 5, radius_max: int = 80, gaze_r_max: float = 20.0,
                     target_r_min: float = 40.0, acc_threshold: float = 20.0, min_dist: float = 20.0,
                     scale_cm_per_px: float | None = None, eye_distance_cm: float = 320.0,
                     params: PreprocessParams | None = None) -> DistanceResult:
    """Full pipeline on one scene image; raises MissingRole if a circle is absent."""
    binary = preprocess(image, params)
    circles = detect_circles(binary, radius_min, radius_max, acc_threshold, min_dist)
    gaze, target = classify_circles(circles, gaze_r_max, target_r_min)
    e, m = gaze_target_distance(gaze, target)
    cm = px_to_cm(e, scale_cm_per_px)
    return DistanceResult(e, m, cm, visual_angle(cm, eye_distance_cm), gaze, target)
