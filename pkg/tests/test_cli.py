import json
import math

import numpy as np
import pytest

from srwdist.bounds import bound_set
from srwdist.cli import build_parser, dumps17, main
from srwdist.measures import uniform_measure


def _save_measure(tmp_path, points, name):
    mu = uniform_measure(np.asarray(points, dtype=float))
    path = tmp_path / name
    mu.save(path)
    return str(path)


def test_dumps17_primitives():
    assert dumps17(None) == "null"
    assert dumps17(True) == "true"
    assert dumps17(False) == "false"
    assert dumps17(5) == "5"
    assert dumps17(float("nan")) == "NaN"
    assert dumps17(float("inf")) == "Infinity"
    assert dumps17(float("-inf")) == "-Infinity"
    assert dumps17("a\"b") == '"a\\"b"'
    assert dumps17([]) == "[]"
    assert dumps17({}) == "{}"
    third = 1.0 / 3.0
    assert float(dumps17(third)) == third
    with pytest.raises(TypeError):
        dumps17({1, 2})


def test_dumps17_nested_and_json_compatible():
    obj = {"a": [1, 2.5, None], "b": {"c": True, "d": float("nan")}}
    text = dumps17(obj)
    parsed = json.loads(text)
    assert parsed["a"] == [1, 2.5, None]
    assert parsed["b"]["c"] is True
    assert math.isnan(parsed["b"]["d"])


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["frobnicate"])
    assert exc.value.code == 2


def test_dist_self_distance_is_zero(tmp_path, capsys):
    path = _save_measure(tmp_path, [[0.3, 0.1], [-0.2, 0.4], [0.0, -0.5]], "mu.json")
    code = main(["dist", "--metric", "w2", "--mu", path, "--nu", path])
    assert code == 0
    out, err = capsys.readouterr()
    # the identity plan is found exactly; the residue is cancellation noise
    # in the expanded squared-distance formula, of order sqrt(eps)
    assert json.loads(out)["distance"] == pytest.approx(0.0, abs=1e-8)
    assert "config dist:" in err


def test_dist_s1_reports_certificate_fields(tmp_path, capsys):
    a = _save_measure(tmp_path, [[0.5, 0.0], [-0.5, 0.0]], "a.json")
    b = _save_measure(tmp_path, [[0.0, 0.5], [0.0, -0.5]], "b.json")
    code = main(["dist", "--metric", "s1", "--mu", a, "--nu", b, "--tol", "1e-6"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"distance", "fw_gap", "iterations"}
    assert payload["fw_gap"] >= 0.0
    # antipodal axes at radius 1/2: S1 = 1/2
    assert payload["distance"] == pytest.approx(0.5, abs=1e-3)


def test_dist_sk_requires_k(tmp_path):
    path = _save_measure(tmp_path, [[0.1, 0.0]], "mu.json")
    with pytest.raises(SystemExit) as exc:
        main(["dist", "--metric", "sk", "--mu", path, "--nu", path])
    assert exc.value.code == 2


def test_dist_missing_file_is_execution_error(tmp_path, capsys):
    path = _save_measure(tmp_path, [[0.1, 0.0]], "mu.json")
    code = main(["dist", "--metric", "w2", "--mu", path, "--nu", str(tmp_path / "absent.json")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_construct_then_dist_flow(tmp_path, capsys):
    out = tmp_path / "packing.json"
    assert main(["construct", "--n", "10", "--out", str(out), "--seed", "4"]) == 0
    capsys.readouterr()
    code = main(["dist", "--metric", "s1", "--mu", str(out), "--nu", str(out)])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["distance"] == 0.0


def test_construct_rejects_tiny_n(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["construct", "--n", "1", "--out", str(tmp_path / "x.json")])
    assert exc.value.code == 2


def test_bounds_payload_matches_library(capsys):
    assert main(["bounds", "--d", "5", "--n", "1000", "--q", "100"]) == 0
    payload = json.loads(capsys.readouterr().out)
    bs = bound_set(5, 1000, 100.0)
    assert payload["t_star"] == bs.t_star == 3
    assert payload["kappa_d"] == pytest.approx(bs.kappa_d, rel=1e-15)
    assert payload["upper_curve"] == pytest.approx(bs.upper_curve, rel=1e-15)
    assert payload["lower_curve"] == pytest.approx(bs.lower_curve, rel=1e-15)
    assert payload["fournier_w2_sq_bound"] == pytest.approx(bs.fournier_w2_sq_bound, rel=1e-15)


def test_bounds_low_dimension_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["bounds", "--d", "4", "--n", "1000", "--q", "100"])
    assert exc.value.code == 2


def test_rate_runs_are_byte_identical(tmp_path, capsys):
    mu_path = _save_measure(
        tmp_path, [[0.4, 0.0], [-0.4, 0.0], [0.0, 0.4], [0.0, -0.4]], "law.json"
    )
    argv_tail = [
        "--metric", "w2",
        "--sampler", f"file:{mu_path}",
        "--n-schedule", "4,8",
        "--trials", "5",
        "--seed", "21",
    ]
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    json_out = tmp_path / "r1.json"
    assert main(["rate", *argv_tail, "--out", str(out1), "--json", str(json_out),
                 "--threads", "2"]) == 0
    err = capsys.readouterr().err
    assert "config rate:" in err
    assert main(["rate", *argv_tail, "--out", str(out2), "--threads", "1"]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    mirror = json.loads(json_out.read_text())
    assert mirror["metadata"]["config"]["trials"] == 5
    assert [row["n"] for row in mirror["rows"]] == [4, 8]
    header = out1.read_text().splitlines()[0].split(",")
    assert header[0] == "n"
    assert "wall_time_s" in header


def test_rate_sk_requires_k(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main([
            "rate", "--metric", "sk", "--sampler", "uniform-ball:d=2",
            "--n-schedule", "4,8", "--trials", "1", "--seed", "0",
            "--out", str(tmp_path / "x.csv"),
        ])
    assert exc.value.code == 2


def test_rate_bad_schedule_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main([
            "rate", "--metric", "w2", "--sampler", "uniform-ball:d=2",
            "--n-schedule", "8,4", "--trials", "1", "--seed", "0",
            "--out", str(tmp_path / "x.csv"),
        ])
    assert exc.value.code == 2


def test_verify_lemmas_suite_passes(capsys):
    assert main(["verify", "--suite", "lemmas"]) == 0
    out = capsys.readouterr().out
    assert "ok" in out
