import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazebench import calib, fitts, formats, tracelab
from gazebench.errors import MalformedRecord
from gazebench.tracelab import EyeFrameRecord, RawGazeRecord

finite = st.floats(allow_nan=False, allow_infinity=False)
unit = st.floats(0, 1)
vec3 = st.tuples(finite, finite, finite)
gaze_records = st.builds(RawGazeRecord, st.integers(0, 2**53), st.integers(0, 2**40), st.integers(0, 255),
                         st.tuples(unit, unit), st.none() | vec3, st.none() | vec3)


@given(st.lists(gaze_records, max_size=20))
def test_gaze_round_trip(records):
    assert formats.loads_gaze(formats.dumps_gaze(records)) == records


@given(st.lists(st.builds(EyeFrameRecord, st.integers(0, 2**53), st.text("abc_./0123456789", min_size=1)),
                max_size=20))
def test_manifest_round_trip(frames):
    assert formats.loads_manifest(formats.dumps_manifest(frames)) == frames


@pytest.mark.parametrize("line, needle", [
    ('{"pts_us": 1, "gidx": 2, "s": 0}', "gp"),
    ('{"pts_us": 1.5, "gidx": 2, "s": 0, "gp": [0, 0]}', "pts_us"),
    ('{"pts_us": 1, "gidx": 2, "s": 0, "gp": [0]}', "gp"),
    ('[1, 2, 3]', "object"),
    ('{"pts_us": 1,', "JSON"),
])
def test_malformed_gaze_reports_line(line, needle):
    text = '{"pts_us": 0, "gidx": 1, "s": 0, "gp": [0.5, 0.5]}\n' + line + "\n"
    with pytest.raises(MalformedRecord) as err:
        formats.loads_gaze(text, "g.jsonl")
    assert err.value.line == 2 and needle in str(err.value)


def test_manifest_needs_file_field():
    with pytest.raises(MalformedRecord):
        formats.loads_manifest('{"pts_us": 3}\n')


@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 2**16))
def test_pgm_round_trip(w, h, seed):
    img = np.random.default_rng(seed).integers(0, 256, (h, w), dtype=np.uint8)
    assert np.array_equal(formats.decode_pgm(formats.encode_pgm(img)), img)


def test_pgm_header_comments_and_errors():
    body = bytes(range(6))
    img = formats.decode_pgm(b"P5\n# made by hand\n3 2\n# depth\n255\n" + body)
    assert img.tolist() == [[0, 1, 2], [3, 4, 5]]
    for bad in (b"P2\n3 2\n255\n" + body, b"P5\n3 2\n255\n" + body[:4], b"P5\n3 2\n65535\n" + body, b"P5\n3"):
        with pytest.raises(MalformedRecord):
            formats.decode_pgm(bad)


def test_pgm_file_io(tmp_path):
    img = tracelab.eye_image(123.4, size=5)
    formats.write_pgm(tmp_path / "sub" / "a.pgm", img)
    assert np.array_equal(formats.read_pgm(tmp_path / "sub" / "a.pgm"), img)
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.pgm"]


def test_csv_row_width_checked():
    with pytest.raises(MalformedRecord) as err:
        formats.loads_csv("a,b\n1,2\n3\n")
    assert err.value.line == 3
    with pytest.raises(MalformedRecord):
        formats.loads_csv("a,b\n1,2\n", required=("c",))
    with pytest.raises(MalformedRecord):
        formats.loads_csv("")


@given(st.lists(finite, min_size=1, max_size=20))
def test_numbers_survive_csv_exactly(values):
    _, rows = formats.loads_csv(formats.dumps_csv(["v"], [[v] for v in values]))
    assert [float(r["v"]) for r in rows] == values


def test_dataset_round_trip_both_kinds():
    model = calib.SyntheticGazeModel()
    for ds in (calib.run_calibration_sim(model, 0.5, seed=1), calib.block_calibration_sweep(model, seed=1)):
        back = formats.loads_dataset(formats.dumps_dataset(ds))
        assert back.kind == ds.kind
        assert np.array_equal(back.inputs, ds.inputs) and np.array_equal(back.targets, ds.targets)
        assert np.array_equal(back.markers, ds.markers)


def test_dataset_errors():
    with pytest.raises(MalformedRecord):
        formats.loads_dataset("kind,marker,x0,y0\nregression,0,zz,1\n")
    with pytest.raises(MalformedRecord):
        formats.loads_dataset("kind,marker,x0,label\nclassification,0,1,1\nregression,0,1,1\n")
    with pytest.raises(MalformedRecord):
        formats.loads_dataset("kind,marker,x0\n")


def test_trace_round_trip_is_exact():
    results = fitts.simulate_session(fitts.OperatorModel(), seed=3)
    back = formats.loads_traces(formats.dumps_traces(results))
    assert len(back) == len(results)
    for a, b in zip(results, back):
        assert a.spec == b.spec and a.movement_time_ms == b.movement_time_ms and a.error == b.error
        assert np.array_equal(a.t_ms, b.t_ms) and np.array_equal(a.xy, b.xy)
        assert a.click_px == b.click_px and a.arrival_ms == b.arrival_ms


def test_trace_with_bad_modality():
    text = formats.dumps_traces(fitts.simulate_session(fitts.OperatorModel(), seed=0, repetitions=1,
                                                       adaptive=False)[:1])
    with pytest.raises(MalformedRecord):
        formats.loads_traces(text.replace("nonadaptive", "telepathy"))


def test_summary_table():
    results = fitts.simulate_session(fitts.OperatorModel(), seed=0)
    s = fitts.summarize_session(results[:18])
    header, rows = formats.loads_csv(formats.dumps_summary({"nonadaptive": s}))
    assert len(rows) == len(s.rows) and header[0] == "modality"
    assert float(rows[0]["pearson_r"]) == s.pearson_r
