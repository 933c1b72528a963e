"""On-disk formats: line-delimited gaze records and frame manifests, binary
PGM images, and CSV tables for datasets, traces, metrics and summaries.

Writers are atomic (temp file in the target directory, then rename) and
floats in CSV are written with 17 significant digits so reads are exact.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .calib import CalibrationDataset
from .errors import MalformedRecord
from .fitts import SessionSummary, TrialResult, TrialSpec
from .tracelab import EyeFrameRecord, RawGazeRecord


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def fmt_num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


# -- line-delimited records ------------------------------------------------

def _vec(value, n, line, path, name):
    if not isinstance(value, list) or len(value) != n:
        raise MalformedRecord(f"field {name!r} must be a list of {n} numbers", line, path)
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise MalformedRecord(f"field {name!r} must hold numbers", line, path) from None
    return out


def _int(obj, key, line, path):
    if key not in obj:
        raise MalformedRecord(f"missing field {key!r}", line, path)
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise MalformedRecord(f"field {key!r} must be an integer", line, path)
    return v


def _json_lines(text, path):
    for n, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"not a JSON record: {exc.msg}", n, path) from None
        if not isinstance(obj, dict):
            raise MalformedRecord("record must be a JSON object", n, path)
        yield n, obj


def gaze_record_to_json(rec: RawGazeRecord) -> str:
    obj = {"pts_us": rec.pts_us, "gidx": rec.gidx, "s": rec.s, "gp": list(rec.gp)}
    for key in ("gd_l", "gd_r", "head"):
        value = getattr(rec, key)
        if value is not None:
            obj[key] = list(value)
    return json.dumps(obj, separators=(",", ":"))


def dumps_gaze(records) -> str:
    return "".join(gaze_record_to_json(r) + "\n" for r in records)


def loads_gaze(text: str, path=None) -> list[RawGazeRecord]:
    out = []
    for n, obj in _json_lines(text, path):
        if "gp" not in obj:
            raise MalformedRecord("missing field 'gp'", n, path)
        extra = {k: _vec(obj[k], 3, n, path, k) for k in ("gd_l", "gd_r", "head") if obj.get(k) is not None}
        out.append(RawGazeRecord(_int(obj, "pts_us", n, path), _int(obj, "gidx", n, path),
                                 _int(obj, "s", n, path), _vec(obj["gp"], 2, n, path, "gp"), **extra))
    return out


def dumps_manifest(frames) -> str:
    return "".join(json.dumps({"pts_us": f.pts_us, "file": f.frame_ref}, separators=(",", ":")) + "\n"
                   for f in frames)


def loads_manifest(text: str, path=None) -> list[EyeFrameRecord]:
    out = []
    for n, obj in _json_lines(text, path):
        ref = obj.get("file")
        if not isinstance(ref, str) or not ref:
            raise MalformedRecord("field 'file' must be a non-empty string", n, path)
        out.append(EyeFrameRecord(_int(obj, "pts_us", n, path), ref))
    return out


def read_gaze(path) -> list[RawGazeRecord]:
    return loads_gaze(Path(path).read_text(encoding="utf-8"), str(path))


def read_manifest(path) -> list[EyeFrameRecord]:
    return loads_manifest(Path(path).read_text(encoding="utf-8"), str(path))


# -- PGM --------------------------------------------------------------------

def encode_pgm(image) -> bytes:
    arr = np.asarray(image)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("PGM needs a non-empty 2-D image")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("pixel values must lie in 0..255")
        arr = arr.astype(np.uint8)
    h, w = arr.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(arr).tobytes()


def decode_pgm(data: bytes, path=None) -> np.ndarray:
    """Binary (P5) 8-bit PGM; header comments are allowed."""
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MalformedRecord("truncated PGM header", None, path)
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise MalformedRecord("not a binary PGM (P5)", None, path)
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise MalformedRecord("non-numeric PGM header field", None, path) from None
    if w < 1 or h < 1 or not 0 < maxval <= 255:
        raise MalformedRecord("unsupported PGM size or maxval", None, path)
    pos += 1  # single whitespace byte after maxval
    body = data[pos:pos + w * h]
    if len(body) != w * h:
        raise MalformedRecord("PGM pixel data truncated", None, path)
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, image) -> None:
    atomic_write_bytes(path, encode_pgm(image))


def read_pgm(path) -> np.ndarray:
    return decode_pgm(Path(path).read_bytes(), str(path))


# -- CSV --------------------------------------------------------------------

def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt_num(v) for v in row])
    return buf.getvalue()


def loads_csv(text: str, path=None, required=()) -> tuple[list, list]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRecord("empty CSV, header row expected", 1, path) from None
    missing = [c for c in required if c not in header]
    if missing:
        raise MalformedRecord(f"missing column(s): {', '.join(missing)}", 1, path)
    rows = []
    for n, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRecord(f"expected {len(header)} fields, got {len(row)}", n, path)
        rows.append(dict(zip(header, row)))
    return header, rows


def _float(row, key, n, path):
    try:
        return float(row[key])
    except ValueError:
        raise MalformedRecord(f"column {key!r} is not a number: {row[key]!r}", n, path) from None


def _intval(row, key, n, path):
    try:
        return int(row[key])
    except ValueError:
        raise MalformedRecord(f"column {key!r} is not an integer: {row[key]!r}", n, path) from None


def dumps_dataset(ds: CalibrationDataset) -> str:
    d = ds.input_dim
    if ds.kind == "regression":
        tcols = [f"y{j}" for j in range(ds.targets.shape[1])]
    else:
        tcols = ["label"]
    header = ["kind", "marker"] + [f"x{j}" for j in range(d)] + tcols
    rows = []
    for i in range(len(ds)):
        t = list(ds.targets[i]) if ds.kind == "regression" else [int(ds.targets[i])]
        rows.append([ds.kind, int(ds.markers[i])] + list(ds.inputs[i]) + t)
    return dumps_csv(header, rows)


def loads_dataset(text: str, path=None) -> CalibrationDataset:
    header, rows = loads_csv(text, path, required=("kind", "marker"))
    xcols = [c for c in header if c.startswith("x")]
    ycols = [c for c in header if c.startswith("y")]
    if not xcols:
        raise MalformedRecord("no input columns x0..", 1, path)
    if not rows:
        raise MalformedRecord("dataset has no rows", 2, path)
    kinds = {r["kind"] for r in rows}
    if len(kinds) != 1 or kinds - {"regression", "classification"}:
        raise MalformedRecord(f"inconsistent or unknown dataset kind(s): {sorted(kinds)}", 2, path)
    kind = kinds.pop()
    if kind == "classification" and "label" not in header:
        raise MalformedRecord("classification dataset needs a 'label' column", 1, path)
    inputs, targets, markers = [], [], []
    for n, r in enumerate(rows, start=2):
        inputs.append([_float(r, c, n, path) for c in xcols])
        markers.append(_intval(r, "marker", n, path))
        if kind == "regression":
            targets.append([_float(r, c, n, path) for c in ycols])
        else:
            targets.append(_intval(r, "label", n, path))
    return CalibrationDataset(np.array(inputs), np.array(targets), kind, np.array(markers))


TRACE_COLUMNS = ["trial", "modality", "width_px", "distance_px", "rep", "angle_deg", "movement_time_ms",
                 "error", "source_x", "source_y", "target_x", "target_y", "arrival_ms", "click_x",
                 "click_y", "t_ms", "x", "y"]


def dumps_traces(results) -> str:
    """One row per trace sample, trial fields repeated; an empty trace gets one row with blank samples."""
    rows = []
    for k, r in enumerate(results):
        s = r.spec
        head = [k, s.modality, s.width_px, s.distance_px, s.rep, s.angle_deg, r.movement_time_ms,
                bool(r.error), r.source_px[0], r.source_px[1], r.target_px[0], r.target_px[1],
                r.arrival_ms, r.click_px[0], r.click_px[1]]
        if len(r.t_ms) == 0:
            rows.append(head + ["", "", ""])
        for t, (x, y) in zip(r.t_ms, r.xy):
            rows.append(head + [t, x, y])
    return dumps_csv(TRACE_COLUMNS, rows)


def loads_traces(text: str, path=None) -> list[TrialResult]:
    _, rows = loads_csv(text, path, required=TRACE_COLUMNS)
    groups: dict[int, list] = {}
    for n, r in enumerate(rows, start=2):
        groups.setdefault(_intval(r, "trial", n, path), []).append((n, r))
    out = []
    for k in sorted(groups):
        n, r = groups[k][0]
        f = lambda key: _float(r, key, n, path)  # noqa: E731
        try:
            spec = TrialSpec(f("width_px"), f("distance_px"), _intval(r, "rep", n, path), r["modality"],
                             f("angle_deg"))
        except ValueError as exc:
            raise MalformedRecord(str(exc), n, path) from None
        samples = [(m, s) for m, s in groups[k] if s["t_ms"] != ""]
        t = np.array([_float(s, "t_ms", m, path) for m, s in samples], dtype=float)
        xy = np.array([[_float(s, "x", m, path), _float(s, "y", m, path)] for m, s in samples],
                      dtype=float).reshape(-1, 2)
        out.append(TrialResult(spec, f("movement_time_ms"), bool(_intval(r, "error", n, path)), t, xy,
                               (f("source_x"), f("source_y")), (f("target_x"), f("target_y")),
                               f("arrival_ms"), (f("click_x"), f("click_y"))))
    return out


def dumps_summary(summaries: dict) -> str:
    """Per-ID rows for each modality's session summary."""
    header = ["modality", "id_bits", "n", "mean_mt_ms", "throughput_bps", "error_rate",
              "slope_ms_per_bit", "intercept_ms", "pearson_r"]
    rows = []
    for modality, s in summaries.items():
        s: SessionSummary
        for row in s.rows:
            rows.append([modality, row.id_bits, row.n, row.mean_mt_ms, row.throughput_bps, row.error_rate,
                         s.slope_ms_per_bit, s.intercept_ms,
                         "" if math.isnan(s.pearson_r) else s.pearson_r])
    return dumps_csv(header, rows)
