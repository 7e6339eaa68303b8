import csv
import io
import json
import math
import subprocess
import sys

import pytest

from thurston_kit import cli, metrics
from thurston_kit._parallel import ENV_THREADS

# frozen output columns; changing any of these is a breaking change
HEADERS = {
    "quad": "a,k,case,extended,anchor_re,anchor_im,n_pairs,seed,lipschitz_estimate,"
            "estimate_over_k,composition_residual,pass",
    "metric": "metric,source,target,value,ratio,argmax_p,argmax_q,kind,depth,converged,history",
    "counterexample": "X,depth,boundary,boundary_closed,len_T0_10,len_T0_01,len_T0_closed,"
                      "len_T1_10,len_T1_10_closed,len_T1_01,len_T1_01_closed,closed_form_err,"
                      "exp_K,exp_K_closed,K,A,A_minus_K,log_X,arc_T0,arc_T1,pass",
    "equality": "pair,b,h0,h1,K,A,abs_diff,converged,pass",
    "stretch": "t,side,tau_minus,tau_plus,width,envelope_min,K_from_h0,boundary,"
               "boundary_drift,point,pass",
}

CRITICAL_A = 2 * math.asinh(1.0)
CRITICAL_B = 4 * math.asinh(1.0)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- quad -----------------------------------------------------------------------------

def test_quad_short(capsys):
    code, out, _ = run(capsys, "quad", "--a", "1", "--k", "2")
    (r,) = rows(out)
    assert code == 0
    assert r["case"] == "Short" and r["extended"] == "false"
    assert 1.98 <= float(r["lipschitz_estimate"]) <= 2 + 2e-6
    assert float(r["composition_residual"]) <= 1e-9


def test_quad_critical_identity(capsys):
    code, out, _ = run(capsys, "quad", "--a", repr(CRITICAL_A), "--k", "1", "--samples", "20000")
    (r,) = rows(out)
    assert code == 0
    assert r["case"] == "Critical"
    assert float(r["lipschitz_estimate"]) == pytest.approx(1.0, abs=1e-9)


def test_quad_long_extended(capsys):
    code, out, _ = run(capsys, "quad", "--a", "3", "--k", "1.5", "--samples", "20000")
    (r,) = rows(out)
    assert code == 0
    assert r["case"] == "Long" and r["extended"] == "true"


@pytest.mark.parametrize("argv", [
    ("quad", "--a", "-1", "--k", "2"),
    ("quad", "--a", "1", "--k", "0.5"),
    ("quad", "--a", "1"),
    ("quad", "--a", "one", "--k", "2"),
    ("quad", "--a", "1", "--k", "2", "--depth", "0"),
    ("quad", "--a", "1", "--k", "2", "--format", "xml"),
    ("metric", "bogus:1,2,3", "hex:10,0"),
    ("metric", "trace:1,1,1", "hex:10,0"),
    ("stretch", "hex:10,0", "--times", "-0.1,0.3"),
    ("stretch", "hex:10,0", "--slope", "2,4"),
    ("counterexample", "--x", "0.5,10"),
    ("equality", "--b", "0"),
    ("frobnicate",),
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        cli.main(list(argv))
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err


# -- metric ---------------------------------------------------------------------------

def test_metric_identical_literals(capsys):
    code, out, _ = run(capsys, "metric", "fn:1.2,0.3,2", "fn:1.2,0.3,2", "--depth", "6")
    assert code == 0
    rs = rows(out)
    assert [(r["metric"], r["source"], r["target"]) for r in rs] == [
        ("K", "fn:1.2,0.3,2", "fn:1.2,0.3,2")] * 2 + [("A", "fn:1.2,0.3,2", "fn:1.2,0.3,2")] * 2
    assert all(float(r["value"]) == 0.0 for r in rs)


def test_metric_counterexample_row(capsys):
    code, out, _ = run(capsys, "metric", "hex:10,0", "hex:10,1")
    assert code == 0
    k01, k10, a01, a10 = rows(out)
    assert (k01["source"], k01["target"]) == ("hex:10,0", "hex:10,1")
    assert (k10["source"], k10["target"]) == ("hex:10,1", "hex:10,0")
    assert float(k01["ratio"]) == pytest.approx(math.asinh(1e3) / math.asinh(1e2), rel=1e-12)
    assert (k01["argmax_p"], k01["argmax_q"]) == ("0", "1")
    assert (k10["argmax_p"], k10["argmax_q"]) == ("1", "0")
    assert a01["kind"] == "arc"
    assert float(a01["value"]) - float(k01["value"]) >= 1.5
    assert len(k01["history"].split(";")) == 11
    assert k01["converged"] == "true"


def test_metric_small_boundary_agree(capsys):
    code, out, _ = run(capsys, "metric", "fn:0.8,0.1,1", "fn:1.9,-0.7,1", "--depth", "12")
    assert code == 0
    k01, k10, a01, a10 = rows(out)
    assert abs(float(a01["value"]) - float(k01["value"])) <= 5e-3
    assert abs(float(a10["value"]) - float(k10["value"])) <= 5e-3


def test_metric_boundary_mismatch(capsys):
    code, out, err = run(capsys, "metric", "fn:1,0,1", "fn:1,0,1.5")
    assert code == 2
    assert out == ""
    assert "boundary length" in err


# -- counterexample ---------------------------------------------------------------------

def test_counterexample_table(capsys):
    code, out, err = run(capsys, "counterexample", "--x", "2,10,100")
    assert code == 0
    r2, r10, r100 = rows(out)
    assert float(r2["closed_form_err"]) <= 1e-9
    assert float(r10["boundary"]) == pytest.approx(4 * math.acosh(1e4), rel=1e-12)
    assert float(r10["A_minus_K"]) >= 1.5
    assert float(r2["exp_K"]) < float(r10["exp_K"]) < float(r100["exp_K"]) < 1.5
    assert float(r100["A"]) == pytest.approx(math.log(100), abs=0.05)
    assert "rising toward 3/2: True" in err


def test_counterexample_orders_by_input(capsys):
    _, out, _ = run(capsys, "counterexample", "--x", "100,10", "--workers", "2")
    assert [r["X"] for r in rows(out)] == ["100", "10"]


# -- equality ----------------------------------------------------------------------------

@pytest.mark.parametrize("b", ("1", repr(CRITICAL_B)))
def test_equality_regime(capsys, b):
    code, out, err = run(capsys, "equality", "--b", b, "--samples", "50")
    assert code == 0
    rs = rows(out)
    assert len(rs) == 50
    assert max(float(r["abs_diff"]) for r in rs) <= 5e-3
    assert "warning" not in err


def test_equality_large_boundary_warns(capsys):
    code, out, err = run(capsys, "equality", "--b", "20", "--samples", "30")
    assert code == 0
    assert "warning" in err
    assert any(float(r["A"]) - float(r["K"]) > 0.1 for r in rows(out))


# -- stretch ------------------------------------------------------------------------------

def test_stretch_path(capsys):
    code, out, err = run(capsys, "stretch", "fn:1.1,0.25,1.5", "--times", "0,0.3,0.7")
    assert code == 0
    r0, r3, r7 = rows(out)
    assert float(r0["K_from_h0"]) == 0.0 and float(r0["width"]) == 0.0
    assert r0["point"] == "trace:" + ",".join(r0["point"][6:].split(","))
    for r, t in ((r3, 0.3), (r7, 0.7)):
        assert float(r["K_from_h0"]) == pytest.approx(t, abs=2e-3)
        assert float(r["tau_minus"]) <= float(r["tau_plus"])
    b = [float(r["boundary"]) for r in (r0, r3, r7)]
    assert max(b) - min(b) <= 1e-9
    residuals = [float(line.rsplit(" ", 1)[1]) for line in err.splitlines()
                 if line.startswith("additivity")]
    assert residuals and max(map(abs, residuals)) <= 5e-3


def test_stretch_insufficient_depth(capsys, monkeypatch):
    monkeypatch.setattr(metrics._CurveSup, "value", lambda self, h1: 10.0)
    code, out, err = run(capsys, "stretch", "fn:1.1,0.25,1.5", "--times", "0.3", "--depth", "3")
    assert code == 3
    assert "--depth" in err


def test_failed_check_exits_one(capsys):
    # an impossible tolerance makes the envelope check fail
    code, out, err = run(capsys, "stretch", "fn:1.1,0.25,1.5", "--times", "0.3",
                         "--tol", "1e-30")
    assert code == 1
    assert "checks failed" in err
    assert rows(out)[0]["pass"] == "false"


# -- output format ------------------------------------------------------------------------

CASES = {
    "quad": ("quad", "--a", "1", "--k", "1.25", "--samples", "5000", "--points", "50"),
    "metric": ("metric", "hex:5,0", "hex:5,1", "--depth", "6"),
    "counterexample": ("counterexample", "--x", "2,5", "--depth", "6"),
    "equality": ("equality", "--b", "1", "--samples", "6", "--depth", "6"),
    "stretch": ("stretch", "fn:1.1,0.25,1.5", "--times", "0,0.3", "--depth", "6"),
}


@pytest.mark.parametrize("command", sorted(CASES))
def test_frozen_header(capsys, command):
    _, out, _ = run(capsys, *CASES[command])
    assert out.split("\r\n")[0] == HEADERS[command]
    assert cli.COLUMNS[command] == HEADERS[command].split(",")


@pytest.mark.parametrize("command", sorted(CASES))
def test_byte_identical_across_workers(capsys, monkeypatch, command):
    outs = []
    for workers in ("1", "4"):
        _, out, _ = run(capsys, *CASES[command], "--workers", workers)
        outs.append(out)
    monkeypatch.setenv(ENV_THREADS, "3")
    _, out, _ = run(capsys, *CASES[command])
    outs.append(out)
    assert outs[0] == outs[1] == outs[2]


@pytest.mark.parametrize("command", sorted(CASES))
def test_json_mirrors_csv(capsys, command):
    _, text, _ = run(capsys, *CASES[command])
    _, js, _ = run(capsys, *CASES[command], "--format", "json")
    recs = json.loads(js)
    table = rows(text)
    assert len(recs) == len(table)
    for rec, row in zip(recs, table):
        assert list(rec) == HEADERS[command].split(",")
        for col, val in rec.items():
            assert cli._cell(val) == row[col]


def test_floats_round_trip(capsys):
    _, out, _ = run(capsys, *CASES["metric"])
    for r in rows(out):
        v = float(r["value"])
        assert format(v, ".17g") == r["value"]


def test_out_file_matches_stdout(capsys, tmp_path):
    path = tmp_path / "t.csv"
    _, out, _ = run(capsys, *CASES["counterexample"])
    code, printed, _ = run(capsys, *CASES["counterexample"], "--out", str(path))
    assert code == 0 and printed == ""
    assert path.read_bytes() == out.encode()


def test_run_config_validation():
    with pytest.raises(ValueError):
        cli.RunConfig("nope")
    with pytest.raises(ValueError):
        cli.RunConfig("metric", ["hex:10,0"], depth=0)
    with pytest.raises(ValueError):
        cli.RunConfig("metric", ["hex:10,0"], format="tsv")
    with pytest.raises(ValueError):
        cli.RunConfig("metric", ["hex:0.5,0"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "thurston_kit", "counterexample", "--x", "2",
                           "--depth", "4"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.splitlines()[0] == HEADERS["counterexample"]
