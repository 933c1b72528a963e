"""Data-loss audit for wearable eye-tracker recordings.

The raw gaze stream (about 100 Hz, one ``gidx`` per sample, status ``s`` with
0 meaning valid) is aligned with the eye-camera frames (about 50 Hz) by
presentation timestamp: each frame owns the gaze samples whose timestamps
fall in ``(previous frame, this frame]``.  Frames are then categorised:

* Category1: every owned sample is valid;
* Category2: every owned sample is invalid;
* Mixed: both kinds (left out of the intensity comparison);
* Empty: no samples.

Invalid samples of Category2 frames are grouped into clusters of consecutive
``gidx``.  A cluster is flagged when one of its nearest valid neighbours
(up to three on each side) looks toward the edge of the tracking range, i.e.
has a normalised gaze coordinate outside ``[lo, hi]``.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyCategory, InvalidInput


@dataclass(frozen=True)
class RawGazeRecord:
    pts_us: int
    gidx: int
    s: int
    gp: tuple = (0.0, 0.0)
    gd_l: tuple | None = None
    gd_r: tuple | None = None
    head: tuple | None = None

    @property
    def valid(self) -> bool:
        return self.s == 0


@dataclass(frozen=True)
class EyeFrameRecord:
    pts_us: int
    frame_ref: str


@dataclass
class SyncPair:
    frame: EyeFrameRecord
    gaze: list = field(default_factory=list)


class Category(enum.Enum):
    CATEGORY1 = "category1"
    CATEGORY2 = "category2"
    MIXED = "mixed"
    EMPTY = "empty"


@dataclass(frozen=True)
class Cluster:
    first_gidx: int
    last_gidx: int
    count: int
    flagged: bool = False
    boundary: tuple = ()


def _check_sorted(values, strict: bool, name: str) -> None:
    for a, b in zip(values, values[1:]):
        if b < a or (strict and b == a):
            raise InvalidInput(f"{name} must be sorted by pts_us{' (strictly)' if strict else ''}")


def sync_streams(gaze, frames) -> list[SyncPair]:
    """Assign every gaze record to the frame whose window contains its timestamp.

    Frame ``i`` owns timestamps in ``(frames[i-1].pts, frames[i].pts]``; the
    first frame owns only its own timestamp.  Records before the first frame
    or after the last are left out (see :func:`unassigned_counts`).
    """
    gaze = list(gaze)
    frames = list(frames)
    frame_pts = [f.pts_us for f in frames]
    _check_sorted(frame_pts, True, "frames")
    _check_sorted([g.pts_us for g in gaze], False, "gaze records")
    pairs = [SyncPair(f) for f in frames]
    for rec in gaze:
        i = bisect.bisect_left(frame_pts, rec.pts_us)
        if i < len(frames) and (i > 0 or rec.pts_us == frame_pts[0]):
            pairs[i].gaze.append(rec)
    return pairs


def unassigned_counts(gaze, frames) -> tuple[int, int]:
    """Number of gaze records (before the first frame, after the last frame)."""
    frames = list(frames)
    if not frames:
        return len(list(gaze)), 0
    first, last = frames[0].pts_us, frames[-1].pts_us
    before = sum(1 for g in gaze if g.pts_us < first)
    after = sum(1 for g in gaze if g.pts_us > last)
    return before, after


def categorize_frames(pairs) -> list[Category]:
    out = []
    for pair in pairs:
        statuses = [g.s for g in pair.gaze]
        if not statuses:
            out.append(Category.EMPTY)
        elif all(s == 0 for s in statuses):
            out.append(Category.CATEGORY1)
        elif all(s != 0 for s in statuses):
            out.append(Category.CATEGORY2)
        else:
            out.append(Category.MIXED)
    return out


def status_violations(gaze) -> int:
    """Invalid records whose gaze point is not the documented [0, 0]."""
    return sum(1 for g in gaze if g.s != 0 and tuple(g.gp) != (0.0, 0.0))


def mean_intensity(image) -> float:
    arr = np.asarray(image)
    if arr.size == 0:
        raise InvalidInput("image has no pixels")
    return float(arr.mean(dtype=np.float64))


@dataclass
class Histogram:
    counts: np.ndarray
    edges: np.ndarray
    n: int
    threshold: float | None = None
    frac_below: float | None = None
    frac_above: float | None = None


def intensity_histogram(values_by_category: dict, bins: int = 32, threshold: float | None = None,
                        value_range=(0.0, 255.0)) -> dict:
    """Histogram per category plus the share of frames below/at-or-above ``threshold``."""
    out = {}
    for name, values in values_by_category.items():
        v = np.asarray(list(values), dtype=float)
        if v.size == 0:
            raise EmptyCategory(f"category {name!r} has no frames")
        counts, edges = np.histogram(v, bins=bins, range=value_range)
        h = Histogram(counts, edges, int(v.size), threshold)
        if threshold is not None:
            h.frac_below = float(np.count_nonzero(v < threshold)) / v.size
            h.frac_above = 1.0 - h.frac_below
        out[name] = h
    return out


def cluster_category2(pairs, categories=None) -> list[Cluster]:
    """Maximal runs of consecutive gidx among the samples of Category2 frames."""
    pairs = list(pairs)
    categories = categories if categories is not None else categorize_frames(pairs)
    ids = sorted({g.gidx for p, c in zip(pairs, categories) if c is Category.CATEGORY2 for g in p.gaze})
    clusters = []
    start = prev = None
    for gidx in ids:
        if start is None:
            start = prev = gidx
        elif gidx == prev + 1:
            prev = gidx
        else:
            clusters.append(Cluster(start, prev, prev - start + 1))
            start = prev = gidx
    if start is not None:
        clusters.append(Cluster(start, prev, prev - start + 1))
    return clusters


def is_extreme(gp, lo: float = 0.2, hi: float = 0.8, criterion: str = "either") -> bool:
    """Whether a normalised gaze point lies outside ``[lo, hi]``.

    ``criterion='either'`` needs one coordinate outside the band, ``'both'``
    needs both.
    """
    x_out = gp[0] < lo or gp[0] > hi
    y_out = gp[1] < lo or gp[1] > hi
    if criterion == "either":
        return x_out or y_out
    if criterion == "both":
        return x_out and y_out
    raise InvalidInput(f"criterion must be 'either' or 'both', got {criterion!r}")


def flag_clusters(clusters, stream, boundary_count: int = 3, lo: float = 0.2, hi: float = 0.8,
                  criterion: str = "either") -> list[Cluster]:
    """Attach boundary records to each cluster and flag out-of-band ones.

    Boundary records are the nearest ``boundary_count`` valid records on each
    side of the cluster in gidx order; a side with fewer available records
    contributes what it has.
    """
    if not lo <= hi:
        raise InvalidInput("lo must not exceed hi")
    records = sorted(stream, key=lambda g: g.gidx)
    keys = [g.gidx for g in records]
    out = []
    for c in clusters:
        boundary = []
        i = bisect.bisect_left(keys, c.first_gidx) - 1
        found = 0
        while i >= 0 and found < boundary_count:
            if records[i].valid:
                boundary.append(records[i])
                found += 1
            i -= 1
        boundary.reverse()
        j = bisect.bisect_right(keys, c.last_gidx)
        found = 0
        while j < len(records) and found < boundary_count:
            if records[j].valid:
                boundary.append(records[j])
                found += 1
            j += 1
        flagged = any(is_extreme(b.gp, lo, hi, criterion) for b in boundary)
        out.append(replace(c, flagged=flagged, boundary=tuple(boundary)))
    return out


@dataclass
class AuditReport:
    n_frames: int = 0
    n_gaze: int = 0
    n_unassigned_before: int = 0
    n_unassigned_after: int = 0
    raw_error_fraction: float = 0.0
    status_violations: int = 0
    counts: dict = field(default_factory=lambda: {c.value: 0 for c in Category})
    n_clusters: int = 0
    n_cluster_records: int = 0
    n_flagged: int = 0
    intensity_threshold: float | None = None
    histograms: dict = field(default_factory=dict)
    flagged_intensity_range: tuple | None = None
    criterion: str = "either"
    band: tuple = (0.2, 0.8)

    def percent(self, category) -> float:
        key = category.value if isinstance(category, Category) else category
        return 100.0 * self.counts[key] / self.n_frames if self.n_frames else 0.0

    @property
    def flagged_fraction(self) -> float:
        return self.n_flagged / self.n_clusters if self.n_clusters else 0.0


def audit_report(gaze, frames, load_image=None, intensity_threshold: float | None = None,
                 bins: int = 32, boundary_count: int = 3, lo: float = 0.2, hi: float = 0.8,
                 criterion: str = "either") -> AuditReport:
    """Run the full audit.  ``load_image(frame_ref)`` enables the intensity part."""
    gaze = list(gaze)
    frames = list(frames)
    report = AuditReport(intensity_threshold=intensity_threshold, criterion=criterion, band=(lo, hi))
    report.n_frames = len(frames)
    report.n_gaze = len(gaze)
    if gaze:
        report.raw_error_fraction = sum(1 for g in gaze if g.s != 0) / len(gaze)
    report.status_violations = status_violations(gaze)
    report.n_unassigned_before, report.n_unassigned_after = unassigned_counts(gaze, frames)
    pairs = sync_streams(gaze, frames)
    cats = categorize_frames(pairs)
    for c in cats:
        report.counts[c.value] += 1
    clusters = flag_clusters(cluster_category2(pairs, cats), gaze, boundary_count, lo, hi, criterion)
    report.n_clusters = len(clusters)
    report.n_cluster_records = sum(c.count for c in clusters)
    report.n_flagged = sum(c.flagged for c in clusters)

    if load_image is not None:
        cache = {}

        def intensity(ref):
            if ref not in cache:
                cache[ref] = mean_intensity(load_image(ref))
            return cache[ref]

        groups = {Category.CATEGORY1.value: [], Category.CATEGORY2.value: []}
        for pair, cat in zip(pairs, cats):
            if cat.value in groups:
                groups[cat.value].append(intensity(pair.frame.frame_ref))
        groups = {k: v for k, v in groups.items() if v}
        if groups:
            report.histograms = intensity_histogram(groups, bins, intensity_threshold)
        flagged_ids = set()
        for c in clusters:
            if c.flagged:
                flagged_ids.update(range(c.first_gidx, c.last_gidx + 1))
        flagged_values = [intensity(p.frame.frame_ref) for p in pairs
                          if any(g.gidx in flagged_ids for g in p.gaze)]
        if flagged_values:
            report.flagged_intensity_range = (min(flagged_values), max(flagged_values))
    return report


def _num(x) -> str:
    return format(float(x), ".17g")


def format_report(report: AuditReport) -> str:
    """Deterministic ``key = value`` text rendering of an audit report."""
    lines = ["[streams]",
             f"frames = {report.n_frames}",
             f"gaze_records = {report.n_gaze}",
             f"unassigned_before_first_frame = {report.n_unassigned_before}",
             f"unassigned_after_last_frame = {report.n_unassigned_after}",
             f"raw_error_fraction = {_num(report.raw_error_fraction)}",
             f"status_violations = {report.status_violations}",
             "", "[categories]"]
    for c in Category:
        lines.append(f"{c.value} = {report.counts[c.value]}")
        lines.append(f"{c.value}_percent = {report.percent(c):.4f}")
    lines += ["", "[clusters]",
              f"criterion = {report.criterion}",
              f"band = {_num(report.band[0])} {_num(report.band[1])}",
              f"clusters = {report.n_clusters}",
              f"cluster_records = {report.n_cluster_records}",
              f"flagged = {report.n_flagged}",
              f"flagged_percent = {100.0 * report.flagged_fraction:.4f}"]
    if report.histograms:
        lines += ["", "[intensity]"]
        if report.intensity_threshold is not None:
            lines.append(f"threshold = {_num(report.intensity_threshold)}")
        for name, h in report.histograms.items():
            lines.append(f"{name}_frames = {h.n}")
            if h.frac_below is not None:
                lines.append(f"{name}_percent_below = {100.0 * h.frac_below:.4f}")
                lines.append(f"{name}_percent_at_or_above = {100.0 * h.frac_above:.4f}")
            lines.append(f"{name}_histogram = " + " ".join(str(int(c)) for c in h.counts))
        lines.append("histogram_edges = " + " ".join(_num(e) for e in next(iter(report.histograms.values())).edges))
        if report.flagged_intensity_range is not None:
            lo, hi = report.flagged_intensity_range
            lines.append(f"flagged_intensity_range = {_num(lo)} {_num(hi)}")
    return "\n".join(lines) + "\n"


@dataclass
class Recording:
    gaze: list
    frames: list
    intensities: dict
    categories: list
    flagged_clusters: int


def synthesize_recording(n_cat1: int, n_cat2: int, n_mixed: int, n_clusters: int, n_flagged: int = 0,
                         seed: int = 0, samples_per_frame: int = 2, frame_period_us: int = 20000,
                         start_pts_us: int = 1_000_000, lead_in: int = 3,
                         intensity_means=(100.0, 140.0, 115.0), intensity_sd: float = 15.0) -> Recording:
    """Build a recording with an exactly known composition.

    Category2 frames form ``n_clusters`` contiguous blocks separated by
    Category1/Mixed frames.  For ``n_flagged`` of the clusters the nearest
    valid record looks off the tracking range; every other valid record
    stays well inside the band.  Frame intensities are drawn per category
    from ``intensity_means`` (Category1, Category2, Mixed).
    """
    if min(n_cat1, n_cat2, n_mixed, n_clusters, n_flagged) < 0 or n_flagged > n_clusters:
        raise InvalidInput("composition counts must be non-negative with n_flagged <= n_clusters")
    if (n_cat2 == 0) != (n_clusters == 0) or n_clusters > n_cat2:
        raise InvalidInput("need 1 <= n_clusters <= n_cat2 Category2 frames (or both zero)")
    if samples_per_frame < 2 and n_mixed:
        raise InvalidInput("mixed frames need at least two samples per frame")
    rng = np.random.default_rng(seed)

    sizes = [n_cat2 // n_clusters + (1 if k < n_cat2 % n_clusters else 0) for k in range(n_clusters)]
    sizes = [int(x) for x in rng.permutation(sizes)] if sizes else []
    fillers = np.array([Category.CATEGORY1] * n_cat1 + [Category.MIXED] * n_mixed, dtype=object)
    fillers = list(fillers[rng.permutation(len(fillers))])
    n_gaps = n_clusters + 1
    gaps = [fillers[k::n_gaps] for k in range(n_gaps)]
    valid_per = {Category.CATEGORY1: samples_per_frame, Category.MIXED: 1}
    for k in range(1, n_clusters):
        if sum(valid_per[c] for c in gaps[k]) < 4:
            raise InvalidInput("too few Category1/Mixed frames to separate the clusters")
    flagged = set(int(k) for k in rng.choice(n_clusters, size=n_flagged, replace=False)) if n_flagged else set()

    layout = []
    for k in range(n_clusters):
        layout.extend(gaps[k])
        layout.extend([Category.CATEGORY2] * sizes[k])
    layout.extend(gaps[-1])

    def inband():
        return (float(rng.uniform(0.3, 0.7)), float(rng.uniform(0.3, 0.7)))

    def extreme():
        x, y = inband()
        side = int(rng.integers(4))
        v = float(rng.uniform(0.02, 0.15)) if side % 2 == 0 else float(rng.uniform(0.85, 0.98))
        return (v, y) if side < 2 else (x, v)

    gaze, frames, intensities = [], [], {}
    gidx = 0
    for k in range(lead_in):
        pts = start_pts_us - (lead_in - k) * frame_period_us // samples_per_frame
        gaze.append(RawGazeRecord(pts, gidx, 0, inband()))
        gidx += 1
    means = {Category.CATEGORY1: intensity_means[0], Category.CATEGORY2: intensity_means[1],
             Category.MIXED: intensity_means[2]}
    for i, cat in enumerate(layout):
        pts = start_pts_us + i * frame_period_us
        ref = f"frame_{i:07d}.pgm"
        frames.append(EyeFrameRecord(pts, ref))
        intensities[ref] = float(np.clip(round(rng.normal(means[cat], intensity_sd)), 0, 255))
        if cat is Category.CATEGORY1:
            statuses = [0] * samples_per_frame
        elif cat is Category.CATEGORY2:
            statuses = [int(rng.integers(1, 8)) for _ in range(samples_per_frame)]
        else:
            statuses = [0] + [int(rng.integers(1, 8)) for _ in range(samples_per_frame - 1)]
            statuses = [statuses[j] for j in rng.permutation(samples_per_frame)]
        for j, s in enumerate(statuses):
            # The first frame owns only its own timestamp.
            offset = 0 if i == 0 else frame_period_us * (samples_per_frame - j - 1) // samples_per_frame
            gp = inband() if s == 0 else (0.0, 0.0)
            gaze.append(RawGazeRecord(pts - offset, gidx, s, gp))
            gidx += 1

    # Turn the nearest valid neighbour of each flagged cluster into an edge look.
    pairs = sync_streams(gaze, frames)
    clusters = cluster_category2(pairs)
    pos = {g.gidx: n for n, g in enumerate(gaze)}
    for k in sorted(flagged):
        c = clusters[k]
        n = pos[c.first_gidx] - 1
        while n >= 0 and not gaze[n].valid:
            n -= 1
        if n < 0:
            n = pos[c.last_gidx] + 1
            while not gaze[n].valid:
                n += 1
        gaze[n] = replace(gaze[n], gp=extreme())
    return Recording(gaze, frames, intensities, layout, len(flagged))


def eye_image(intensity: float, size: int = 16) -> np.ndarray:
    """Flat 8-bit eye-camera stand-in whose mean equals ``round(intensity)``."""
    return np.full((size, size), int(round(intensity)), dtype=np.uint8)
