import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from gazebench import tracelab
from gazebench.errors import EmptyCategory, InvalidInput
from gazebench.tracelab import Category, Cluster, EyeFrameRecord, RawGazeRecord


def frames_at(*pts):
    return [EyeFrameRecord(p, f"f{p}.pgm") for p in pts]


def gaze_at(*pts, s=0):
    return [RawGazeRecord(p, i, s, (0.5, 0.5) if s == 0 else (0.0, 0.0)) for i, p in enumerate(pts)]


def test_sync_interval_example():
    pairs = tracelab.sync_streams(gaze_at(10_000, 20_000, 50_000), frames_at(0, 40_000, 80_000))
    assert [len(p.gaze) for p in pairs] == [0, 2, 1]


def test_sync_boundary_and_outside_records():
    gaze = gaze_at(-5, 0, 40_000, 40_001, 90_000)
    frames = frames_at(0, 40_000, 80_000)
    pairs = tracelab.sync_streams(gaze, frames)
    assert [[g.pts_us for g in p.gaze] for p in pairs] == [[0], [40_000], [40_001]]
    assert tracelab.unassigned_counts(gaze, frames) == (1, 1)


def test_sync_empty_gaze_and_unsorted_input():
    assert [p.gaze for p in tracelab.sync_streams([], frames_at(0, 10))] == [[], []]
    with pytest.raises(InvalidInput):
        tracelab.sync_streams([], frames_at(10, 0))
    with pytest.raises(InvalidInput):
        tracelab.sync_streams(gaze_at(5, 3), frames_at(0, 10))


@given(st.lists(st.integers(0, 1000), max_size=60).map(sorted),
       st.lists(st.integers(0, 1000), min_size=1, max_size=20, unique=True).map(sorted))
def test_sync_matches_linear_scan(gaze_pts, frame_pts):
    pairs = tracelab.sync_streams(gaze_at(*gaze_pts), frames_at(*frame_pts))
    owner = {}
    for i, p in enumerate(pairs):
        for g in p.gaze:
            assert g.gidx not in owner
            owner[g.gidx] = i
    assert [owner.get(i) for i in range(len(gaze_pts))] == oracles.sync(gaze_pts, frame_pts)


def test_categories():
    frames = frames_at(0, 10, 20, 30, 40)
    gaze = [RawGazeRecord(0, 0, 0), RawGazeRecord(5, 1, 0), RawGazeRecord(10, 2, 0),
            RawGazeRecord(15, 3, 7), RawGazeRecord(20, 4, 7), RawGazeRecord(25, 5, 0), RawGazeRecord(30, 6, 7)]
    cats = tracelab.categorize_frames(tracelab.sync_streams(gaze, frames))
    assert cats == [Category.CATEGORY1, Category.CATEGORY1, Category.CATEGORY2, Category.MIXED, Category.EMPTY]


def test_mean_intensity():
    assert tracelab.mean_intensity(np.zeros((4, 4), np.uint8)) == 0
    assert tracelab.mean_intensity(np.full((3, 5), 255, np.uint8)) == 255
    assert tracelab.mean_intensity(np.array([[0, 255], [255, 0]], np.uint8)) == 127.5
    with pytest.raises(InvalidInput):
        tracelab.mean_intensity(np.zeros((0, 4)))


def test_intensity_histogram_examples():
    h = tracelab.intensity_histogram({"c1": [10.0] * 50}, threshold=131)["c1"]
    assert h.frac_below == 1.0 and np.count_nonzero(h.counts) == 1 and h.n == 50
    h = tracelab.intensity_histogram({"c1": [60.0] * 93 + [200.0] * 7}, threshold=131)["c1"]
    assert h.frac_below == 0.93 and h.frac_above == pytest.approx(0.07)
    single = tracelab.intensity_histogram({"c2": [131.0]})["c2"]
    assert np.count_nonzero(single.counts) == 1 and single.counts.sum() == 1
    assert len(single.edges) == 33 and single.edges[0] == 0 and single.edges[-1] == 255
    with pytest.raises(EmptyCategory):
        tracelab.intensity_histogram({"c2": []})


def cat2_pairs(ids):
    """One Category2 frame per gidx."""
    gaze = [RawGazeRecord(10 * i, g, 3) for i, g in enumerate(ids)]
    return tracelab.sync_streams(gaze, frames_at(*[10 * i for i in range(len(ids))]))


def test_cluster_examples():
    clusters = tracelab.cluster_category2(cat2_pairs([5, 6, 7, 12, 20, 21]))
    assert [(c.first_gidx, c.last_gidx, c.count) for c in clusters] == [(5, 7, 3), (12, 12, 1), (20, 21, 2)]
    assert tracelab.cluster_category2(cat2_pairs([])) == []
    assert len(tracelab.cluster_category2(cat2_pairs(list(range(3, 30))))) == 1


@given(st.sets(st.integers(0, 200), max_size=60))
def test_clusters_partition_category2_records(ids):
    ids = sorted(ids)
    clusters = tracelab.cluster_category2(cat2_pairs(ids))
    assert [(c.first_gidx, c.last_gidx) for c in clusters] == oracles.runs(ids)
    covered = [g for c in clusters for g in range(c.first_gidx, c.last_gidx + 1)]
    assert covered == ids


def stream(gps):
    """Valid records with the given gaze points, plus an invalid run at gidx 3-4."""
    recs = []
    for i, gp in enumerate(gps):
        recs.append(RawGazeRecord(i, i, 0 if gp is not None else 2, gp if gp is not None else (0.0, 0.0)))
    return recs


def test_flag_examples():
    mid = (0.5, 0.5)
    cluster = [Cluster(3, 4, 2)]
    edge = stream([mid, mid, (0.85, 0.5), None, None, mid, mid, mid])
    assert tracelab.flag_clusters(cluster, edge)[0].flagged
    calm = stream([mid, mid, mid, None, None, mid, mid, mid])
    out = tracelab.flag_clusters(cluster, calm)[0]
    assert not out.flagged and len(out.boundary) == 6
    # A cluster at the very start only sees what follows it.
    start = stream([None, None, mid, (0.5, 0.1), mid, mid])
    out = tracelab.flag_clusters([Cluster(0, 1, 2)], start)[0]
    assert out.flagged and [b.gidx for b in out.boundary] == [2, 3, 4]


def test_boundary_skips_invalid_records_and_stops_at_three():
    mid, far = (0.5, 0.5), (0.95, 0.95)
    recs = stream([far, mid, None, mid, None, mid, None, None, mid, mid, mid, mid, far])
    out = tracelab.flag_clusters([Cluster(6, 7, 2)], recs)[0]
    assert [b.gidx for b in out.boundary] == [1, 3, 5, 8, 9, 10] and not out.flagged


def test_either_versus_both():
    assert tracelab.is_extreme((0.9, 0.5)) and not tracelab.is_extreme((0.9, 0.5), criterion="both")
    assert tracelab.is_extreme((0.9, 0.1), criterion="both")
    assert not tracelab.is_extreme((0.2, 0.8))
    with pytest.raises(InvalidInput):
        tracelab.is_extreme((0.5, 0.5), criterion="any")


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=8, max_size=30),
       st.floats(0, 0.5), st.floats(0.5, 1), st.floats(0, 0.2), st.floats(0, 0.2))
def test_widening_the_band_never_adds_flags(gps, lo, hi, dlo, dhi):
    recs = [RawGazeRecord(i, i, 0 if i % 4 else 5, gp if i % 4 else (0.0, 0.0)) for i, gp in enumerate(gps)]
    clusters = [Cluster(i, i, 1) for i in range(0, len(gps), 4)]
    for crit in ("either", "both"):
        narrow = sum(c.flagged for c in tracelab.flag_clusters(clusters, recs, lo=lo, hi=hi, criterion=crit))
        wide = sum(c.flagged for c in tracelab.flag_clusters(clusters, recs, lo=lo - dlo, hi=hi + dhi,
                                                             criterion=crit))
        assert wide <= narrow


def test_status_violations_are_counted():
    gaze = [RawGazeRecord(0, 0, 0, (0.4, 0.4)), RawGazeRecord(1, 1, 3, (0.0, 0.0)), RawGazeRecord(2, 2, 3, (0.2, 0.1))]
    assert tracelab.status_violations(gaze) == 1
    assert tracelab.audit_report(gaze, frames_at(0, 2)).status_violations == 1


def test_empty_streams_give_zero_report():
    rep = tracelab.audit_report([], [])
    assert rep.n_frames == 0 and rep.n_clusters == 0 and all(v == 0 for v in rep.counts.values())
    assert rep.percent("category2") == 0.0 and rep.flagged_fraction == 0.0
    assert "frames = 0" in tracelab.format_report(rep)


@given(st.integers(0, 40), st.integers(1, 20), st.integers(0, 20), st.integers(0, 2**16))
def test_fixture_composition_is_exact(n1, n2, nm, seed):
    n_clusters = max(1, min(n2, (n1 * 2 + nm) // 4))
    try:
        rec = tracelab.synthesize_recording(n1, n2, nm, n_clusters, n_flagged=n_clusters // 2, seed=seed)
    except InvalidInput:
        return
    rep = tracelab.audit_report(rec.gaze, rec.frames)
    assert rep.counts == {"category1": n1, "category2": n2, "mixed": nm, "empty": 0}
    assert sum(rep.counts.values()) == rep.n_frames
    assert rep.n_clusters == n_clusters and rep.n_flagged == n_clusters // 2
    assert rep.n_unassigned_before == 3 and rep.n_unassigned_after == 0


def test_report_with_images_and_text():
    rec = tracelab.synthesize_recording(60, 30, 10, n_clusters=5, n_flagged=2, seed=4)
    rep = tracelab.audit_report(rec.gaze, rec.frames, lambda ref: tracelab.eye_image(rec.intensities[ref]),
                                intensity_threshold=120)
    c1 = [rec.intensities[f.frame_ref] for f, c in zip(rec.frames, rec.categories) if c is Category.CATEGORY1]
    assert rep.histograms["category1"].frac_below == sum(v < 120 for v in c1) / len(c1)
    assert set(rep.histograms) == {"category1", "category2"}
    lo, hi = rep.flagged_intensity_range
    assert 0 <= lo <= hi <= 255
    text = tracelab.format_report(rep)
    assert text == tracelab.format_report(rep)
    for key in ("category2 = 30", "clusters = 5", "flagged = 2", "threshold = 120", "category1_percent_below"):
        assert key in text
