import json
import subprocess
import sys
from collections import Counter

import pytest

from stpart.cli import Config, main

WEDGE = "0 < x & x < 1 & 0 < y & y < eps*x"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def record(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_config_defaults_and_validation(tmp_path):
    cfg = Config()
    assert (cfg.max_vars, cfg.max_degree, cfg.reparam_depth, cfg.grid_depth) == (3, 4, 4, 12)
    with pytest.raises(ValueError):
        Config(max_degree=0)
    with pytest.raises(ValueError):
        Config(max_vars=4)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"max_degree": 6, "colour": "red"}))
    with pytest.raises(ValueError, match="colour"):
        Config.load(str(path))
    path.write_text(json.dumps({"max_degree": 6}))
    assert Config.load(str(path)).budget().max_degree == 6


def test_st(capsys):
    code, rec = record(capsys, "st", "--vars", "1", "eps < x & x < 1 - eps")
    assert code == 0
    assert rec["results"]["st"] == "0 <= x & x <= 1"
    assert rec["command"] == ["st", "--vars", "1", "eps < x & x < 1 - eps"]
    assert all(c["verdict"] == "holds" for c in rec["certificates"])


def test_measure(capsys):
    code, rec = record(capsys, "measure", "--vars", "2", "x^2 + y^2 < 1 + eps")
    assert code == 0
    m = rec["results"]["measure"]
    assert abs(m["value"] - 3.141592653589793) <= 1e-6 and m["radius"] <= 1e-6


def test_measure_unbounded_is_conservative(capsys):
    code, rec = record(capsys, "measure", "--vars", "2", "0 < x & x < 1/eps & 0 < y & y < eps")
    assert code == 0
    assert rec["results"]["measure"]["value"] == float("inf")
    assert [c["verdict"] for c in rec["certificates"]] == ["conservative"]


def test_usage_errors(capsys):
    assert run(capsys, "st", "--vars", "1", "x <")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "st", "x = 1")[0] == 1                  # no variables given
    assert run(capsys, "verify", "--suite", "nope")[0] == 1
    code, _, err = run(capsys, "st", "--vars", "1", "--config", "/nonexistent.json", "x = 1")
    assert code == 1 and "error" in err


def test_violated_certificate_exit(capsys):
    code, rec = record(capsys, "iso-check", "--vars", "1", "--map", "x + eps", "--f", "1", "--f-on", "0 < x & x < 1",
                       "--g", "1", "--g-on", "-eps < x & x < 1 - eps")
    assert code == 2
    assert rec["results"]["isomorphism"] is False
    code, rec = record(capsys, "iso-check", "--vars", "1", "--map", "x - eps", "--f", "1", "--f-on", "0 < x & x < 1",
                       "--g", "1", "--g-on", "-eps < x & x < 1 - eps")
    assert code == 0 and rec["results"]["isomorphism"] is True


def test_rejected_witness_exit(capsys):
    code, rec = record(capsys, "measure", "--vars", "1", "0 < x & x < 1/(2 - eps)", "--witness", "2*x",
                       "--image", "0 < x & x < 2/(2 - eps)")
    assert code == 2
    assert any(c["verdict"] == "violated" for c in rec["certificates"])


def test_verify_suite(capsys):
    code, rec = record(capsys, "verify", "--suite", "witness")
    assert code == 0
    assert rec["results"]["suite"] == "witness"
    assert set(rec["results"]["verdicts"]) == {"holds"}


def test_text_format_and_out(capsys, tmp_path):
    code, out, _ = run(capsys, "st", "--vars", "1", "--format", "text", "x^2 < eps")
    assert code == 0
    assert "st: x = 0" in out.splitlines()
    path = tmp_path / "r.json"
    assert run(capsys, "st", "--vars", "1", "--out", str(path), "x^2 < eps")[1] == ""
    assert json.loads(path.read_text())["results"]["st"] == "x = 0"


def test_reports_are_deterministic(capsys):
    argv = ("decompose", "--vars", "1", "x^2 < eps", "-1/2 <= x & x <= 1/2")
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second and first[0] == 0
    assert "timing" not in json.loads(first[1])


def test_plot_wedge_decomposition(capsys):
    code, rec = record(capsys, "plot", "--vars", "2", "--decomposition", WEDGE)
    assert code == 0
    labels = rec["results"]["layers"]
    types = Counter(label.split("type ")[1] for label in labels if label.startswith("cell"))
    assert types == {"00": 9, "01": 6, "10": 6, "11": 4}
    assert labels[-1] == "st set 0"
    # open cells are drawn first so lower-dimensional cells stay visible
    assert all(t == "11" for t in [label.split("type ")[1] for label in labels[:4]])
    svg = rec["results"]["svg"]
    assert svg.count('<g class="layer"') == len(labels) == 26


def test_plot_segment_and_empty(capsys):
    code, out, _ = run(capsys, "plot", "--vars", "1", "--format", "svg", "eps < x & x < 1 - eps")
    assert code == 0 and out.startswith("<svg")
    layer = out.split('<g class="layer"')[1]
    assert layer.count("<rect") == 1                  # one run of pixels for [0, 1]
    code, out, _ = run(capsys, "plot", "--vars", "2", "--format", "svg", "x > 1/eps & y = 0")
    assert code == 0
    assert out.split('<g class="layer"')[1].count("<rect") == 0
    assert '<g class="axes"' in out
    assert run(capsys, "st", "--vars", "1", "--format", "svg", "x = 1")[0] == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stpart", "st", "--vars", "1", "x*(x - 1) = eps"],
                         capture_output=True, text=True, timeout=300)
    assert res.returncode == 0
    assert json.loads(res.stdout)["results"]["st"] == "x = 0 | x = 1"
