import math
import statistics
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gazebench import fitts, pathmetrics
from gazebench.errors import InvalidInput, UndefinedStatistic
from gazebench.fitts import OperatorModel, TrialSpec

NOISELESS = OperatorModel(sigma_ms=0.0, jitter_px=0.0, click_spread=0.0)


def test_index_of_difficulty_examples():
    assert fitts.index_of_difficulty(240, 80) == 2.0
    assert fitts.index_of_difficulty(50, 50) == 1.0
    assert round(fitts.index_of_difficulty(200, 70), 4) == 1.9475
    for bad in ((0, 10), (10, 0), (-5, 10)):
        with pytest.raises(InvalidInput):
            fitts.index_of_difficulty(*bad)


@given(st.floats(1, 1e4), st.floats(1, 1e4), st.floats(1.01, 10))
def test_id_monotone_in_width_and_distance(d, w, k):
    assert fitts.index_of_difficulty(d, w * k) < fitts.index_of_difficulty(d, w)
    assert fitts.index_of_difficulty(d * k, w) > fitts.index_of_difficulty(d, w)


def test_throughput_examples():
    assert fitts.throughput(2.0, 4.0) == 0.5
    assert fitts.throughput(0.0, 3.0) == 0.0
    with pytest.raises(InvalidInput):
        fitts.throughput(1.0, 0.0)


def test_trial_sequence_shape_and_determinism():
    seq = fitts.generate_trial_sequence(5)
    assert len(seq) == 18
    assert set(Counter((t.width_px, t.distance_px) for t in seq).values()) == {2}
    assert seq == fitts.generate_trial_sequence(5)
    orders = {tuple((t.width_px, t.distance_px) for t in fitts.generate_trial_sequence(s)) for s in range(100)}
    assert len(orders) == 100


def test_transport_geometry_scales_to_pixels():
    seq = fitts.transport_trial_set(px_per_cm=10.0)
    assert len(seq) == 6 * 2 * 2
    assert {t.width_px for t in seq} == {19.0, 17.0, 15.0, 13.0, 11.0, 9.0}
    assert {t.distance_px for t in seq} == {50.0, 80.0}


def test_noiseless_trace_timing_and_shape():
    res = fitts.synthesize_trace(NOISELESS, TrialSpec(80, 240, angle_deg=30), seed=0)
    assert res.movement_time_ms == 2200.0 and res.arrival_ms == 1800.0
    assert np.allclose(res.xy[0], res.source_px) and np.allclose(res.xy[-1], res.target_px)
    assert res.source_px == (400.0, 300.0)
    assert np.all(np.diff(res.t_ms) > 0) and res.t_ms[-1] == 2200.0
    assert not res.error
    axis = pathmetrics.TaskAxis(res.source_px, res.target_px, 80)
    assert pathmetrics.efficiency_metrics(res.xy, axis).ME < 1e-12


def test_trace_determinism_and_jitter():
    spec = TrialSpec(70, 200, angle_deg=200)
    a = fitts.synthesize_trace(OperatorModel(), spec, seed=3)
    b = fitts.synthesize_trace(OperatorModel(), spec, seed=3)
    assert np.array_equal(a.xy, b.xy) and a.movement_time_ms == b.movement_time_ms
    axis = pathmetrics.TaskAxis(a.source_px, a.target_px, 70)
    assert pathmetrics.efficiency_metrics(a.xy, axis).ME > 1.0


def test_click_error_rate_tracks_spread():
    results = fitts.simulate_session(OperatorModel(), seed=1, repetitions=30, adaptive=False)
    rate = sum(r.error for r in results) / len(results)
    # Spread 0.2 W puts the radius W/2 at 2.5 sigma of a 2D Gaussian: P(out) = exp(-2.5^2/2).
    assert abs(rate - math.exp(-3.125)) < 0.03


def test_adaptive_replay_is_never_later():
    results = fitts.simulate_session(OperatorModel(), seed=2, repetitions=4)
    half = len(results) // 2
    for base, fast in zip(results[:half], results[half:]):
        assert fast.spec.modality == "adaptive" and fast.spec.width_px == base.spec.width_px
        assert fast.movement_time_ms <= base.movement_time_ms


def test_pearson_examples():
    assert fitts.pearson_r([1, 2, 3], [2, 4, 6]) == 1.0
    assert fitts.pearson_r([1, 2, 3], [6, 4, 2]) == -1.0
    assert fitts.pearson_r([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(UndefinedStatistic):
        fitts.pearson_r([1, 1, 1], [1, 2, 3])


@given(st.lists(st.tuples(st.integers(-100, 100), st.integers(-100, 100)), min_size=3, max_size=30))
def test_pearson_matches_statistics_module(pairs):
    xs, ys = zip(*pairs)
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return
    assert fitts.pearson_r(xs, ys) == pytest.approx(statistics.correlation(xs, ys), abs=1e-12)


def test_paired_t_examples():
    res = fitts.paired_t_test([2, 4], [0, 0])
    assert res.t == pytest.approx(3.0, abs=1e-15) and res.df == 1
    assert round(res.cohens_d, 4) == 2.1213
    assert fitts.paired_t_test([0, 0], [2, 4]).t == -res.t
    with pytest.raises(UndefinedStatistic):
        fitts.paired_t_test([1, 2, 3], [1, 2, 3])


def test_paired_t_matches_scipy():
    rng = np.random.default_rng(0)
    a, b = rng.normal(3000, 400, 12), rng.normal(4400, 500, 12)
    mine = fitts.paired_t_test(a, b)
    ref = stats.ttest_rel(a, b)
    assert mine.t == pytest.approx(ref.statistic, rel=1e-12) and mine.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_noiseless_session_is_exactly_linear():
    summary = fitts.summarize_session(fitts.simulate_session(NOISELESS, seed=0, adaptive=False))
    assert abs(summary.pearson_r - 1.0) <= 1e-9
    assert summary.slope_ms_per_bit == pytest.approx(900.0, abs=1e-9)
    assert summary.intercept_ms == pytest.approx(400.0, abs=1e-9)
    for row in summary.rows:
        assert abs(row.throughput_bps * row.mean_mt_ms / 1000 - row.id_bits) <= 1e-12


def test_adaptive_replay_lowers_correlation():
    results = fitts.simulate_session(OperatorModel(), seed=0, repetitions=6)
    half = len(results) // 2
    base, adapt = fitts.summarize_session(results[:half]), fitts.summarize_session(results[half:])
    assert adapt.pearson_r < base.pearson_r


def test_two_point_session_line_passes_through_both():
    results = [fitts.synthesize_trace(OperatorModel(), TrialSpec(w, 200), seed=i) for i, w in enumerate((70, 90))]
    s = fitts.summarize_session(results)
    for row in s.rows:
        assert s.slope_ms_per_bit * row.id_bits + s.intercept_ms == pytest.approx(row.mean_mt_ms, abs=1e-9)


def test_single_id_session_is_undefined():
    results = [fitts.synthesize_trace(OperatorModel(), TrialSpec(80, 240), seed=i) for i in range(3)]
    with pytest.raises(UndefinedStatistic):
        fitts.summarize_session(results)


def sse(xs, ys, slope, intercept):
    return math.fsum((y - slope * x - intercept) ** 2 for x, y in zip(xs, ys))


@given(st.integers(0, 10_000))
def test_fitted_line_beats_every_grid_neighbour(seed):
    results = fitts.simulate_session(OperatorModel(), seed=seed, repetitions=1, adaptive=False)
    s = fitts.summarize_session(results)
    xs, ys = [r.id_bits for r in s.rows], [r.mean_mt_ms for r in s.rows]
    best = sse(xs, ys, s.slope_ms_per_bit, s.intercept_ms)
    for ds in np.linspace(-5, 5, 11):
        for di in np.linspace(-5, 5, 11):
            assert best <= sse(xs, ys, s.slope_ms_per_bit + ds, s.intercept_ms + di) + 1e-6


def test_exact_line_fit_on_small_rational_data():
    xs, ys = [1, 2, 4], [3, 2, 7]
    n = len(xs)
    mx, my = Fraction(sum(xs), n), Fraction(sum(ys), n)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)
    got = fitts.fit_line(xs, ys)
    assert got[0] == pytest.approx(float(slope), abs=1e-15)
    assert got[1] == pytest.approx(float(my - slope * mx), abs=1e-14)


def test_trial_spec_validation():
    with pytest.raises(InvalidInput):
        TrialSpec(0, 200)
    with pytest.raises(InvalidInput):
        TrialSpec(70, 200, modality="mouse")
