"""``gazebench`` command line.

Every subcommand takes ``--seed``, ``--out`` and ``--config``.  A parameter
is resolved from, in order: its command-line flag, the environment variable
``GAZEBENCH_<NAME>``, the ``key = value`` config file, the built-in default.

Exit codes: 0 success, 1 other failure, 2 usage error or unknown
subcommand, 3 missing input file, 4 malformed record, 5 parameter out of
range.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import calib, fitts, formats, houghvision, nnmap, pathmetrics, plots, tracelab
from .errors import GazeBenchError, InvalidParams, MalformedRecord, MissingRole

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_MISSING_FILE, EXIT_MALFORMED, EXIT_RANGE = 0, 1, 2, 3, 4, 5
ENV_PREFIX = "GAZEBENCH_"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise InvalidParams(f"not a boolean: {text!r}")


def _ints(text) -> tuple:
    if isinstance(text, tuple):
        return text
    try:
        return tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise InvalidParams(f"expected comma-separated integers, got {text!r}") from None


def _floats(text) -> tuple:
    if isinstance(text, tuple):
        return text
    try:
        return tuple(float(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise InvalidParams(f"expected comma-separated numbers, got {text!r}") from None


# name -> (type, default, help); shared across subcommands.
PARAMS = {
    "mode": (str, "nine-point", "calibration routine: nine-point or block-sweep"),
    "noise": (float, 0.5, "gaze noise in screen-pixel units"),
    "samples_per_segment": (int, 40, "block sweep samples per path segment"),
    "data": (str, None, "calibration dataset CSV"),
    "hidden": (_ints, None, "hidden layer sizes, comma separated (default: 32,16 regressor, 256,128 classifier)"),
    "max_epochs": (int, 5000, "epoch cap"),
    "learning_rate": (float, 1e-3, "Adam learning rate"),
    "batch_size": (int, 32, "mini-batch size"),
    "repetitions": (int, 6, "repetitions per width/distance pair"),
    "a_ms": (float, 400.0, "operator dwell intercept (ms)"),
    "b_ms_per_bit": (float, 900.0, "operator slope (ms/bit)"),
    "sigma_ms": (float, 120.0, "operator timing noise (ms)"),
    "jitter_px": (float, 6.0, "orthogonal pointer jitter (px)"),
    "click_spread": (float, 0.2, "click spread as a fraction of target width"),
    "noiseless": (_bool, False, "zero every operator noise term"),
    "adaptive": (_bool, True, "also replay each trace through nearest-target activation"),
    "widths": (_floats, fitts.HMDS_WIDTHS_PX, "target widths (px)"),
    "distances": (_floats, fitts.HMDS_DISTANCES_PX, "target distances (px)"),
    "traces": (str, None, "trace CSV from `simulate`"),
    "gaze": (str, None, "line-delimited gaze records"),
    "frames": (str, None, "line-delimited frame manifest"),
    "images": (str, None, "directory holding the PGM frames (default: manifest directory)"),
    "threshold": (float, None, "intensity threshold for the histogram split"),
    "lo": (float, 0.2, "lower edge of the in-range gaze band"),
    "hi": (float, 0.8, "upper edge of the in-range gaze band"),
    "criterion": (str, "either", "boundary criterion: either or both"),
    "boundary_count": (int, 3, "valid records examined on each side of a cluster"),
    "bins": (int, 32, "histogram bins"),
    "svg": (str, None, "also write the intensity histogram SVG here"),
    "intensities_out": (str, None, "also write per-frame intensities CSV here"),
    "cat1": (int, 500, "Category1 frames"),
    "cat2": (int, 300, "Category2 frames"),
    "mixed": (int, 200, "Mixed frames"),
    "clusters": (int, 12, "Category2 clusters"),
    "flagged": (int, 10, "clusters with an out-of-band boundary record"),
    "circles": (str, "160,120,59;230,90,10", "circles as cx,cy,r;cx,cy,r"),
    "width": (int, 320, "image width"),
    "height": (int, 240, "image height"),
    "noise_std": (float, 0.0, "pixel noise (gray levels)"),
    "image": (str, None, "PGM image(s), comma separated"),
    "radius_min": (int, 5, "smallest radius searched (px)"),
    "radius_max": (int, 80, "largest radius searched (px)"),
    "gaze_r_max": (float, 20.0, "gaze circles have r below this"),
    "target_r_min": (float, 40.0, "target circles have r at or above this"),
    "acc_threshold": (float, 20.0, "minimum centre votes"),
    "min_dist": (float, 20.0, "minimum distance between centres (px)"),
    "offset": (float, 20.0, "adaptive threshold offset"),
    "scale_cm_per_px": (float, None, "pixel scale (default 2.2/59 cm)"),
    "eye_distance_cm": (float, 320.0, "eye to stimulus distance (cm)"),
    "kind": (str, None, "plot kind: " + ", ".join(plots.PLOT_KINDS)),
    "input": (str, None, "plot input CSV"),
}

COMMANDS = {
    "calib-sim": ("simulate a calibration routine and write its dataset CSV",
                  ["mode", "noise", "samples_per_segment"]),
    "train": ("train a network on a dataset CSV and write the model file",
              ["data", "hidden", "max_epochs", "learning_rate", "batch_size"]),
    "simulate": ("synthesize a Fitts session and write its trace CSV",
                 ["repetitions", "a_ms", "b_ms_per_bit", "sigma_ms", "jitter_px", "click_spread",
                  "noiseless", "adaptive", "widths", "distances"]),
    "fitts": ("summarize a trace CSV per ID and modality", ["traces"]),
    "pathmetrics": ("cursor efficiency metrics per trace", ["traces"]),
    "synth-recording": ("write a synthetic recording (gaze, manifest, PGM frames)",
                        ["cat1", "cat2", "mixed", "clusters", "flagged"]),
    "audit": ("failure-mode audit of a recording",
              ["gaze", "frames", "images", "threshold", "lo", "hi", "criterion", "boundary_count", "bins",
               "svg", "intensities_out"]),
    "render-scene": ("render a synthetic scene image (PGM)", ["circles", "width", "height", "noise_std"]),
    "hough": ("measure gaze-target distance in scene images",
              ["image", "radius_min", "radius_max", "gaze_r_max", "target_r_min", "acc_threshold",
               "min_dist", "offset", "scale_cm_per_px", "eye_distance_cm"]),
    "plot": ("render an SVG chart", ["kind", "input", "threshold"]),
}

REQUIRED = {"train": ["data"], "fitts": ["traces"], "pathmetrics": ["traces"], "audit": ["gaze", "frames"],
            "hough": ["image"], "plot": ["kind", "input"]}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gazebench", description="Eye-gaze interface benchmarking toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name, (help_text, params) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
        p.add_argument("--out", default=None, help="output path")
        p.add_argument("--config", default=None, help="key = value config file")
        for key in params:
            _, default, h = PARAMS[key]
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                           help=f"{h} (default: {default})" if default is not None else h)
    return parser


def read_config(path) -> dict:
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedRecord("expected 'key = value'", n, str(path))
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_").lower()] = value
    return out


def resolve(args, env=None) -> dict:
    """Merge flag, environment, config file and default for every parameter."""
    env = os.environ if env is None else env
    config = read_config(args.config) if args.config else {}
    out = {}
    keys = ["seed", "out"] + COMMANDS[args.command][1]
    for key in keys:
        conv, default, _ = PARAMS.get(key, (int if key == "seed" else str, 0 if key == "seed" else None, ""))
        value = getattr(args, key, None)
        if value is None:
            value = env.get(ENV_PREFIX + key.upper())
        if value is None:
            value = config.get(key)
        if value is None:
            out[key] = default
            continue
        try:
            out[key] = conv(value)
        except (TypeError, ValueError) as exc:
            raise InvalidParams(f"bad value for {key}: {value!r} ({exc})") from None
    if not 0 <= out["seed"] < 2**64:
        raise InvalidParams("seed must be an unsigned 64-bit integer")
    for key in REQUIRED.get(args.command, []):
        if out[key] in (None, ""):
            raise _UsageError(f"gazebench {args.command}: --{key.replace('_', '-')} is required")
    return out


def _need(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return p


def _out(p, default):
    return Path(p["out"] or default)



def cmd_calib_sim(p):
    model = calib.SyntheticGazeModel()
    if p["mode"] == "nine-point":
        ds = calib.run_calibration_sim(model, noise_std=p["noise"], seed=p["seed"])
    elif p["mode"] == "block-sweep":
        ds = calib.block_calibration_sweep(model, seed=p["seed"], noise_std=p["noise"],
                                           samples_per_segment=p["samples_per_segment"])
    else:
        raise InvalidParams(f"unknown calibration mode {p['mode']!r}")
    out = _out(p, "calibration.csv")
    formats.atomic_write_text(out, formats.dumps_dataset(ds))
    print(f"wrote {len(ds)} {ds.kind} rows to {out}")


def cmd_train(p):
    src = _need(p["data"])
    ds = formats.loads_dataset(src.read_text(encoding="utf-8"), str(src))
    if ds.kind == "regression":
        spec = nnmap.NetworkSpec(ds.input_dim, p["hidden"] or (32, 16), ds.targets.shape[1], nnmap.REGRESSION)
    else:
        spec = nnmap.NetworkSpec(ds.input_dim, p["hidden"] or (256, 128), int(ds.targets.max()) + 1,
                                 nnmap.CLASSIFICATION)
    cfg = nnmap.TrainConfig(learning_rate=p["learning_rate"], max_epochs=p["max_epochs"],
                            batch_size=p["batch_size"], seed=p["seed"])
    net = nnmap.train(nnmap.init_network(spec, p["seed"]), ds, cfg)
    out = _out(p, "model.txt")
    formats.atomic_write_text(out, nnmap.dumps_model(net))
    r = net.report
    print(f"stopped by {r.rule} after {r.epochs} epochs: loss={r.loss:.6g}"
          + (f" r2={r.r2:.6f}" if r.r2 is not None else "")
          + (f" test_accuracy={r.accuracy:.4f}" if r.accuracy is not None else ""))
    print(f"wrote model to {out}")


def cmd_simulate(p):
    if p["noiseless"]:
        op = fitts.OperatorModel(p["a_ms"], p["b_ms_per_bit"], 0.0, 0.0, 0.0)
    else:
        op = fitts.OperatorModel(p["a_ms"], p["b_ms_per_bit"], p["sigma_ms"], p["jitter_px"], p["click_spread"])
    if p["repetitions"] < 1:
        raise InvalidParams("repetitions must be >= 1")
    results = fitts.simulate_session(op, p["seed"], p["repetitions"], p["widths"], p["distances"], p["adaptive"])
    out = _out(p, "traces.csv")
    formats.atomic_write_text(out, formats.dumps_traces(results))
    print(f"wrote {len(results)} traces to {out}")


def _load_traces(p):
    src = _need(p["traces"])
    results = formats.loads_traces(src.read_text(encoding="utf-8"), str(src))
    if not results:
        raise MalformedRecord("trace file holds no trials", 2, str(src))
    return results


def _by_modality(results):
    groups = defaultdict(list)
    for r in results:
        groups[r.spec.modality].append(r)
    return {m: groups[m] for m in fitts.MODALITIES if m in groups}


def cmd_fitts(p):
    summaries = {m: fitts.summarize_session(rs) for m, rs in _by_modality(_load_traces(p)).items()}
    out = _out(p, "summary.csv")
    formats.atomic_write_text(out, formats.dumps_summary(summaries))
    for m, s in summaries.items():
        print(f"{m}: r={s.pearson_r:.4f} slope={s.slope_ms_per_bit:.2f} ms/bit "
              f"intercept={s.intercept_ms:.2f} ms mean_mt={s.mean_mt_ms:.1f} ms")
    print(f"wrote summary to {out}")


def cmd_pathmetrics(p):
    rows = []
    for k, r in enumerate(_load_traces(p)):
        axis = pathmetrics.TaskAxis(tuple(r.source_px), tuple(r.target_px), r.spec.width_px)
        m = pathmetrics.efficiency_metrics(r.xy, axis).as_dict()
        rows.append([k, r.spec.modality, r.id_bits] + [m[name] for name in pathmetrics.METRIC_NAMES])
    out = _out(p, "metrics.csv")
    formats.atomic_write_text(out, formats.dumps_csv(["trial", "modality", "id_bits", *pathmetrics.METRIC_NAMES],
                                                     rows))
    print(f"wrote metrics for {len(rows)} traces to {out}")


def cmd_synth_recording(p):
    rec = tracelab.synthesize_recording(p["cat1"], p["cat2"], p["mixed"], p["clusters"], p["flagged"],
                                        seed=p["seed"])
    out = _out(p, "recording")
    (out / "frames").mkdir(parents=True, exist_ok=True)
    formats.atomic_write_text(out / "gaze.jsonl", formats.dumps_gaze(rec.gaze))
    frames = [tracelab.EyeFrameRecord(f.pts_us, f"frames/{f.frame_ref}") for f in rec.frames]
    formats.atomic_write_text(out / "frames.jsonl", formats.dumps_manifest(frames))
    for f in rec.frames:
        formats.write_pgm(out / "frames" / f.frame_ref, tracelab.eye_image(rec.intensities[f.frame_ref]))
    print(f"wrote {len(rec.gaze)} gaze records and {len(rec.frames)} frames to {out}")


def cmd_audit(p):
    gaze_path, frames_path = _need(p["gaze"]), _need(p["frames"])
    gaze = formats.read_gaze(gaze_path)
    frames = formats.read_manifest(frames_path)
    image_dir = Path(p["images"]) if p["images"] else frames_path.parent
    have_images = bool(frames) and all((image_dir / f.frame_ref).is_file() for f in frames)
    intensities = {}

    def load(ref):
        img = formats.read_pgm(image_dir / ref)
        intensities[ref] = tracelab.mean_intensity(img)
        return img

    report = tracelab.audit_report(gaze, frames, load if have_images else None, p["threshold"], p["bins"],
                                   p["boundary_count"], p["lo"], p["hi"], p["criterion"])
    out = _out(p, "audit.txt")
    formats.atomic_write_text(out, tracelab.format_report(report))
    if p["svg"] and report.histograms:
        hist = {k: (list(h.counts), list(h.edges)) for k, h in report.histograms.items()}
        formats.atomic_write_text(p["svg"], plots.intensity_histogram(hist, p["threshold"]))
    if p["intensities_out"] and have_images:
        cats = tracelab.categorize_frames(tracelab.sync_streams(gaze, frames))
        rows = [[f.frame_ref, c.value, intensities[f.frame_ref]] for f, c in zip(frames, cats)
                if f.frame_ref in intensities]
        formats.atomic_write_text(p["intensities_out"], formats.dumps_csv(["frame", "category", "intensity"], rows))
    print(f"frames={report.n_frames} " + " ".join(f"{k}={v}" for k, v in report.counts.items())
          + f" clusters={report.n_clusters} flagged={report.n_flagged}")
    print(f"wrote report to {out}")


def _parse_circles(text):
    out = []
    for chunk in str(text).split(";"):
        if chunk.strip():
            vals = _floats(chunk)
            if len(vals) != 3:
                raise InvalidParams(f"circle needs cx,cy,r: {chunk!r}")
            out.append(houghvision.Circle(*vals))
    return out


def cmd_render_scene(p):
    img = houghvision.render_scene(_parse_circles(p["circles"]), p["noise_std"], p["seed"], p["width"], p["height"])
    out = _out(p, "scene.pgm")
    formats.write_pgm(out, img)
    print(f"wrote {img.shape[1]}x{img.shape[0]} scene to {out}")


def cmd_hough(p):
    params = houghvision.PreprocessParams(offset=p["offset"])
    header = ["image", "status", "gaze_x", "gaze_y", "gaze_r", "target_x", "target_y", "target_r",
              "euclid_px", "manhattan_px", "euclid_cm", "visual_angle_deg"]
    rows = []
    for name in [s.strip() for s in p["image"].split(",") if s.strip()]:
        img = formats.read_pgm(_need(name))
        label = Path(name).name
        try:
            res = houghvision.measure_distance(img, p["radius_min"], p["radius_max"], p["gaze_r_max"],
                                               p["target_r_min"], p["acc_threshold"], p["min_dist"],
                                               p["scale_cm_per_px"], p["eye_distance_cm"], params)
        except MissingRole as exc:
            rows.append([label, str(exc)] + [""] * (len(header) - 2))
            print(f"{name}: {exc}")
            continue
        g, t = res.gaze, res.target
        rows.append([label, "ok", g.cx_px, g.cy_px, g.r_px, t.cx_px, t.cy_px, t.r_px, res.euclid_px,
                     res.manhattan_px, res.euclid_cm, res.visual_angle_deg])
        print(f"{name}: euclid_px={res.euclid_px:.3f} manhattan_px={res.manhattan_px:.3f} "
              f"euclid_cm={res.euclid_cm:.4f} visual_angle_deg={res.visual_angle_deg:.4f}")
    out = _out(p, "hough.csv")
    formats.atomic_write_text(out, formats.dumps_csv(header, rows))
    print(f"wrote {len(rows)} measurement(s) to {out}")


def _metric_table(rows):
    by_mod = defaultdict(list)
    by_mod_id = defaultdict(lambda: defaultdict(list))
    for r in rows:
        vals = {m: float(r[m]) for m in pathmetrics.METRIC_NAMES}
        by_mod[r["modality"]].append(vals)
        by_mod_id[r["modality"]][float(r["id_bits"])].append(vals)

    def mean(list_of_dicts):
        return {m: math.fsum(d[m] for d in list_of_dicts) / len(list_of_dicts) for m in pathmetrics.METRIC_NAMES}

    bars = {m: mean(v) for m, v in by_mod.items()}
    radial = {m: {i: mean(v) for i, v in sorted(per.items())} for m, per in by_mod_id.items()}
    return bars, radial


def cmd_plot(p):
    src = _need(p["input"])
    header, rows = formats.loads_csv(src.read_text(encoding="utf-8"), str(src))
    kind = p["kind"]
    if kind == "mt_vs_id_scatter":
        series = defaultdict(lambda: ([], []))
        if "mean_mt_ms" in header:
            for r in rows:
                series[r["modality"]][0].append(float(r["id_bits"]))
                series[r["modality"]][1].append(float(r["mean_mt_ms"]))
        else:
            for r in formats.loads_traces(src.read_text(encoding="utf-8"), str(src)):
                series[r.spec.modality][0].append(r.id_bits)
                series[r.spec.modality][1].append(r.movement_time_ms)
        svg = plots.emit_plot(kind, dict(series))
    elif kind == "intensity_histogram":
        groups = defaultdict(list)
        for r in rows:
            if r["category"] in ("category1", "category2"):
                groups[r["category"]].append(float(r["intensity"]))
        hists = {}
        for name in sorted(groups):
            counts, edges = np.histogram(groups[name], bins=32, range=(0.0, 255.0))
            hists[name] = (counts.tolist(), edges.tolist())
        svg = plots.emit_plot(kind, hists, threshold=p["threshold"])
    elif kind in ("metric_bars", "radial_stacked"):
        bars, radial = _metric_table(rows)
        svg = plots.emit_plot(kind, bars if kind == "metric_bars" else radial)
    else:
        raise InvalidParams(f"unknown plot kind {kind!r}")
    out = _out(p, f"{kind}.svg")
    formats.atomic_write_text(out, svg)
    print(f"wrote {kind} plot to {out}")


HANDLERS = {"calib-sim": cmd_calib_sim, "train": cmd_train, "simulate": cmd_simulate, "fitts": cmd_fitts,
            "pathmetrics": cmd_pathmetrics, "synth-recording": cmd_synth_recording, "audit": cmd_audit,
            "render-scene": cmd_render_scene, "hough": cmd_hough, "plot": cmd_plot}


def main(argv=None, env=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        HANDLERS[args.command](resolve(args, env))
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"gazebench: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except MalformedRecord as exc:
        print(f"gazebench: malformed record: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except ValueError as exc:
        print(f"gazebench: parameter out of range: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except GazeBenchError as exc:
        print(f"gazebench: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
