import io
import json

import numpy as np
import pytest

from smatch.cli import run_cli
from smatch.conv import sample_columns
from smatch.formats import save_matrix
from smatch.instances import gen_appendix_c1
from smatch.matching import MatchProblem, similarity


def run(*argv):
    out = io.StringIO()
    code = run_cli(list(map(str, argv)), stdout=out)
    text = out.getvalue()
    return code, (json.loads(text) if text else None), text


def gen(tmp_path, kind, *extra, suffix=".csv"):
    x, y = tmp_path / f"{kind}_x{suffix}", tmp_path / f"{kind}_y{suffix}"
    code, report, _ = run("gen", "--kind", kind, "--out-x", x, "--out-y", y, *extra)
    assert code == 0, report
    return x, y


@pytest.fixture
def c1(tmp_path):
    return gen(tmp_path, "appendix_c1")


@pytest.fixture
def had4(tmp_path):
    return gen(tmp_path, "hadamard", "--n", 4, "--eps0", 0.2, suffix=".smat")


def test_gen_report(tmp_path):
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    code, report, _ = run("gen", "--kind", "hadamard", "--n", 2, "--eps0", 0.2, "--out-x", x, "--out-y", y)
    assert code == 0
    assert report["results"]["kind"] == "hadamard"
    assert report["results"]["written"]["x"]["rows"] == 2
    assert x.exists() and y.exists()


def test_maxmatch(c1):
    code, report, _ = run("maxmatch", "--x", c1[0], "--y", c1[1], "--eps", 0.05)
    assert code == 0
    assert report["results"] == {"maximum": {"x": [0, 1], "y": [0, 1]}, "similarity": 1.0}
    assert report["problem"]["x"]["rows"] == 2 and report["problem"]["epsilon"] == 0.05
    assert "timing" in report and "error" not in report


def test_minmatch(c1):
    code, report, _ = run("minmatch", "--x", c1[0], "--y", c1[1], "--eps", 0.05, "--neuron", "y:1")
    assert code == 0
    assert report["results"]["match"] == {"x": [0, 1], "y": [0, 1]}
    code, report, _ = run("minmatch", "--x", c1[0], "--y", c1[1], "--eps", 0.05, "--neuron", "x:0",
                          "--order", "shuffle", "--seed", 4)
    assert report["results"]["match"] == {"x": [0], "y": [0]}


def test_minmatch_outside_maximum_match(tmp_path):
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    save_matrix(np.array([[1.0, 0.0]]), x)
    save_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]), y)
    code, report, _ = run("minmatch", "--x", x, "--y", y, "--eps", 0.1, "--neuron", "y:1")
    assert code == 0
    assert report["results"]["status"] == "not_in_maximum_match"
    assert report["results"]["match"] is None


def test_allmin(had4):
    code, report, _ = run("allmin", "--x", had4[0], "--y", had4[1], "--eps", 0.2000002, "--neuron", "x:0")
    assert code == 0
    assert report["results"]["count"] == 3
    assert report["results"]["histogram"] == {"4": 3}


def test_allmin_budget_warning(had4):
    code, report, _ = run("allmin", "--x", had4[0], "--y", had4[1], "--eps", 0.2000002,
                          "--neuron", "x:0", "--budget", 1)
    assert code == 0
    assert report["results"]["count"] == 1
    assert report["warnings"]


def test_simple(had4, tmp_path):
    out_csv = tmp_path / "hist.csv"
    code, report, _ = run("simple", "--x", had4[0], "--y", had4[1], "--eps", 0.2000002, "--csv-out", out_csv)
    assert code == 0
    res = report["results"]
    assert res["count"] == 6 and res["histogram"] == {"4": 6} and res["exhaustive"]
    assert {"x": [0, 1], "y": [0, 1]} in res["matches"]
    assert out_csv.read_text().splitlines() == ["size,count", "4,6"]


def test_sample_simple(had4):
    code, report, _ = run("sample-simple", "--x", had4[0], "--y", had4[1], "--eps", 0.2000002,
                          "--iters", 3, "--seed", 1)
    assert code == 0
    res = report["results"]
    assert 1 <= res["count"] <= 6 and res["iterations"] == 3
    assert set(res["histogram"]) == {"4"}


def test_oracle(c1):
    code, report, _ = run("oracle", "--x", c1[0], "--y", c1[1], "--eps", 0.05)
    assert code == 0
    assert report["results"]


def test_check_independence(tmp_path):
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    save_matrix(np.eye(3), x)
    save_matrix(np.eye(3), y)
    code, report, _ = run("check", "--x", x, "--y", y, "--independence", 1.5)
    assert code == 0 and report["results"]["independence"]["passes"] is True


def test_check_stability(c1):
    code, report, _ = run("check", "--x", c1[0], "--y", c1[1], "--stability", 2, "--eps", 0.5)
    assert code == 0 and report["results"]["stability"]["passes"] is False
    code, report, _ = run("check", "--x", c1[0], "--y", c1[1], "--stability", 2)
    assert code == 1 and report["error"]["type"] == "InvalidInputError"


def test_sweep_plain(c1, tmp_path):
    out_csv = tmp_path / "curve.csv"
    code, report, _ = run("sweep", "--x", c1[0], "--y", c1[1], "--eps-list", "0,0.05,0.8", "--csv-out", out_csv)
    assert code == 0
    curve = report["results"]["curve"]
    assert [pt["epsilon"] for pt in curve] == [0.0, 0.05, 0.8]
    assert all(pt["similarity"] == 1.0 for pt in curve)
    assert len(out_csv.read_text().splitlines()) == 4


def test_sweep_conv_is_mean_of_repeats(tmp_path):
    rng = np.random.default_rng(3)
    base = rng.normal(size=(3, 2 * 2 * 4))
    xm, ym = base, np.vstack([base[:2], rng.normal(size=(2, 16))])
    x, y = tmp_path / "x.smat", tmp_path / "y.smat"
    save_matrix(xm, x)
    save_matrix(ym, y)
    code, report, _ = run("sweep", "--x", x, "--y", y, "--eps-list", "0.0,0.3", "--conv", "2,2,4",
                          "--sample-d", 6, "--repeats", 3, "--seed", 7)
    assert code == 0
    cols = sample_columns(16, 6, 3, 7)
    for pt in report["results"]["curve"]:
        expected = [similarity(MatchProblem(xm[:, c], ym[:, c], pt["epsilon"])) for c in cols]
        assert pt["per_repeat"] == pytest.approx(expected, abs=1e-12)
        assert pt["similarity"] == pytest.approx(np.mean(expected), abs=1e-12)


def test_sweep_rejects_descending(c1):
    code, report, _ = run("sweep", "--x", c1[0], "--y", c1[1], "--eps-list", "0.5,0.1")
    assert code == 1


def test_zero_policy_drop_maps_indices(tmp_path):
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    save_matrix(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), x)
    save_matrix(np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]]), y)
    code, report, _ = run("maxmatch", "--x", x, "--y", y, "--eps", 0.0)
    assert code == 1 and report["error"]["type"] == "DegenerateNeuronError"
    code, report, _ = run("maxmatch", "--x", x, "--y", y, "--eps", 0.0, "--zero-policy", "drop")
    assert code == 0
    assert report["results"]["maximum"] == {"x": [1, 2], "y": [0, 2]}
    assert report["problem"]["dropped"] == {"x": [0], "y": [1]}
    code, report, _ = run("minmatch", "--x", x, "--y", y, "--eps", 0.0, "--zero-policy", "drop",
                          "--neuron", "y:1")
    assert code == 1


def test_dimension_mismatch(tmp_path):
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    save_matrix(np.eye(2), x)
    save_matrix(np.eye(3), y)
    code, report, _ = run("maxmatch", "--x", x, "--y", y, "--eps", 0.1)
    assert code == 1 and report["error"]["type"] == "DimensionMismatchError"


def test_missing_file(tmp_path):
    code, report, _ = run("maxmatch", "--x", tmp_path / "nope.csv", "--y", tmp_path / "nope.csv", "--eps", 0.1)
    assert code == 1 and "error" in report


def test_usage_errors(c1, capsys):
    assert run("maxmatch", "--x", c1[0], "--y", c1[1], "--eps", 0.1, "--bogus")[0] == 2
    assert run("maxmatch", "--x", c1[0])[0] == 2
    assert run("minmatch", "--x", c1[0], "--y", c1[1], "--eps", 0.1, "--neuron", "z:1")[0] == 2


def test_no_timing_is_deterministic(had4, monkeypatch):
    args = ("simple", "--x", had4[0], "--y", had4[1], "--eps", 0.2000002, "--no-timing")
    texts = set()
    for threads in ("1", "4"):
        monkeypatch.setenv("SMATCH_THREADS", threads)
        texts.add(run(*args)[2])
        texts.add(run(*args)[2])
    assert len(texts) == 1
    assert "timing" not in json.loads(texts.pop())


def test_bad_thread_setting(had4, monkeypatch):
    monkeypatch.setenv("SMATCH_THREADS", "many")
    code, report, _ = run("simple", "--x", had4[0], "--y", had4[1], "--eps", 0.2)
    assert code == 1
