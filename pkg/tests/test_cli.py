import subprocess
import sys

import pytest

from gazebench import cli, formats, nnmap
from gazebench.pathmetrics import METRIC_NAMES


def run(*args, env=None):
    return cli.main([str(a) for a in args], env=env or {})


def test_simulate_is_byte_identical_for_a_seed(tmp_path):
    assert run("simulate", "--seed", 7, "--out", tmp_path / "a.csv") == 0
    assert run("simulate", "--seed", 7, "--out", tmp_path / "b.csv") == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert run("simulate", "--seed", 8, "--out", tmp_path / "c.csv") == 0
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_fitts_on_noiseless_session(tmp_path):
    run("simulate", "--noiseless", "true", "--adaptive", "false", "--out", tmp_path / "t.csv")
    assert run("fitts", "--traces", tmp_path / "t.csv", "--out", tmp_path / "s.csv") == 0
    _, rows = formats.loads_csv((tmp_path / "s.csv").read_text())
    assert {r["modality"] for r in rows} == {"nonadaptive"}
    assert all(abs(float(r["pearson_r"]) - 1.0) <= 1e-9 for r in rows)


def test_audit_on_reference_fixture(tmp_path):
    assert run("synth-recording", "--seed", 1, "--out", tmp_path / "rec") == 0
    assert run("audit", "--gaze", tmp_path / "rec/gaze.jsonl", "--frames", tmp_path / "rec/frames.jsonl",
               "--threshold", 131, "--out", tmp_path / "audit.txt") == 0
    text = (tmp_path / "audit.txt").read_text()
    for line in ("frames = 1000", "category1 = 500", "category2 = 300", "mixed = 200", "clusters = 12",
                 "flagged = 10", "threshold = 131"):
        assert line + "\n" in text


def test_train_writes_loadable_models(tmp_path):
    run("calib-sim", "--out", tmp_path / "c.csv")
    assert run("train", "--data", tmp_path / "c.csv", "--out", tmp_path / "m.txt") == 0
    net = nnmap.loads_model((tmp_path / "m.txt").read_text())
    assert net.trained and net.spec.hidden_dims == (32, 16)
    run("calib-sim", "--mode", "block-sweep", "--out", tmp_path / "b.csv")
    assert run("train", "--data", tmp_path / "b.csv", "--out", tmp_path / "k.txt") == 0
    net = nnmap.loads_model((tmp_path / "k.txt").read_text())
    assert net.spec.hidden_dims == (256, 128) and net.spec.output_dim == 9


def test_hough_batch_marks_missing_roles(tmp_path):
    run("render-scene", "--out", tmp_path / "ok.pgm")
    run("render-scene", "--circles", "160,120,59", "--out", tmp_path / "lonely.pgm")
    assert run("hough", "--image", f"{tmp_path / 'ok.pgm'},{tmp_path / 'lonely.pgm'}", "--out",
               tmp_path / "h.csv") == 0
    _, rows = formats.loads_csv((tmp_path / "h.csv").read_text())
    assert [r["image"] for r in rows] == ["ok.pgm", "lonely.pgm"]
    assert rows[0]["status"] == "ok" and "gaze" in rows[1]["status"]
    assert abs(float(rows[0]["euclid_px"]) - 76.158) < 3


def test_precedence_flag_env_config_default(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# operator\nrepetitions = 3\nsigma-ms = 0\n")
    args = cli.build_parser().parse_args(["simulate", "--config", str(cfg)])
    p = cli.resolve(args, env={})
    assert p["repetitions"] == 3 and p["sigma_ms"] == 0.0 and p["a_ms"] == 400.0 and p["seed"] == 0
    p = cli.resolve(args, env={"GAZEBENCH_REPETITIONS": "4"})
    assert p["repetitions"] == 4
    args = cli.build_parser().parse_args(["simulate", "--config", str(cfg), "--repetitions", "5"])
    assert cli.resolve(args, env={"GAZEBENCH_REPETITIONS": "4"})["repetitions"] == 5


@pytest.mark.parametrize("argv, code", [
    (["teleport"], cli.EXIT_USAGE),
    ([], cli.EXIT_USAGE),
    (["fitts"], cli.EXIT_USAGE),
    (["fitts", "--traces", "/nonexistent/t.csv"], cli.EXIT_MISSING_FILE),
    (["simulate", "--repetitions", "0"], cli.EXIT_RANGE),
    (["simulate", "--seed", "-1"], cli.EXIT_RANGE),
    (["simulate", "--repetitions", "many"], cli.EXIT_RANGE),
    (["calib-sim", "--mode", "twelve-point"], cli.EXIT_RANGE),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(argv, env={}) == code


def test_malformed_input_exit_code_names_the_line(tmp_path, capsys):
    bad = tmp_path / "g.jsonl"
    bad.write_text('{"pts_us": 0, "gidx": 0, "s": 0, "gp": [0.5, 0.5]}\n{"pts_us": "x"}\n')
    frames = tmp_path / "f.jsonl"
    frames.write_text('{"pts_us": 0, "file": "a.pgm"}\n')
    assert run("audit", "--gaze", bad, "--frames", frames, "--out", tmp_path / "a.txt") == cli.EXIT_MALFORMED
    assert "g.jsonl:2:" in capsys.readouterr().err


def test_plot_rejects_empty_input(tmp_path):
    (tmp_path / "m.csv").write_text("trial,modality,id_bits," + ",".join(METRIC_NAMES) + "\n")
    assert run("plot", "--kind", "metric_bars", "--input", tmp_path / "m.csv", "--out", tmp_path / "x.svg") == cli.EXIT_RANGE


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gazebench", "render-scene", "--out", str(tmp_path / "s.pgm")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and (tmp_path / "s.pgm").is_file()
