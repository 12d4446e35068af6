import json

import numpy as np
import pytest

from carflow import cli
from carflow.symbol import make_nu, write_sampled


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_values():
    assert cli.parse_values(["0.1:0.3:0.1"]) == [0.1, 0.2, 0.3]
    assert cli.parse_values(["0.5,0.7", "0.9"]) == [0.5, 0.7, 0.9]
    assert cli.parse_values(["0.3:0.1:0.1"]) == []
    assert cli.parse_values(None) == []
    with pytest.raises(cli.UsageError):
        cli.parse_values(["a:b"])


def test_parse_symbol(tmp_path):
    assert cli.parse_symbol("powers-nu:0.3").label == "powers-nu:0.3"
    assert cli.parse_symbol("powers-loglog").family == "loglog"
    assert cli.parse_symbol("constant:[[0.5,0.5],[0.5,0.5]]").family == "constant"
    f = tmp_path / "s.csv"
    write_sampled(f, make_nu(0.5), np.linspace(-5, 5, 11))
    assert cli.parse_symbol(f"sampled:{f}").family == "sampled"
    with pytest.raises(cli.UsageError, match="unknown symbol family"):
        cli.parse_symbol("gaussian:1")


def test_verify_single_suite(capsys):
    code, out, err = run(capsys, "verify", "--suite", "pq", "--seed", "7")
    assert code == 0
    rep = json.loads(out)
    assert rep["passed"] and [s["suite"] for s in rep["suites"]] == ["pq"]
    assert "pq: pass" in err


def test_verify_unknown_suite(capsys):
    code, _, err = run(capsys, "verify", "--suite", "nope")
    assert code == 1 and "unknown suite" in err


def test_classify_constant_deterministic(capsys, tmp_path):
    args = ["classify", "--symbol", "constant:[[1,0],[0,0]]", "--mu", "0.3", "--no-spectral"]
    code, out1, _ = run(capsys, *args)
    assert code == 0
    code, out2, _ = run(capsys, *args)
    assert out1 == out2
    rep = json.loads(out1)
    assert rep["flow_type"]["kind"] == "TypeI"
    assert rep["cabatif"]["0.3"]["verdict"] == "CABATIF"
    assert rep["params"]["quad"]["large"] == [4, 20]
    outfile = tmp_path / "r.json"
    assert cli.main(args + ["--out", str(outfile), "--plot-data", str(tmp_path / "pd")]) == 0
    assert outfile.read_text() == out1
    assert any(p.name.startswith("shells-") for p in (tmp_path / "pd").iterdir())


def test_classify_nu_half_end_to_end(capsys):
    code, out, _ = run(capsys, "classify", "--symbol", "powers-nu:0.5", "--grid-L", "64", "--grid-M", "1024")
    assert code == 0
    rep = json.loads(out)
    assert rep["flow_type"]["kind"] == "TypeI"
    assert np.allclose(np.array(rep["flow_type"]["Q"])[..., 0], 0.5)
    assert rep["discretization"]["M"] == 1024


def test_errors(capsys, tmp_path):
    assert run(capsys, "classify", "--symbol", "bogus:1")[0] == 1
    assert run(capsys, "classify")[0] == 1
    code, _, err = run(capsys, "classify", "--symbol", "constant:[[1,0],[0,0]]", "--no-spectral",
                       "--grid-M", str(2**15))
    assert code == 1 and "cap" in err
    assert run(capsys, "classify", "--symbol", f"sampled:{tmp_path / 'missing.csv'}")[0] == 1
    code, _, err = run(capsys, "distinguish", "--nu1", "0.2", "--nu2", "0.2")
    assert code == 1 and "empty" in err
    assert run(capsys, "classify", "--symbol", "constant:[[1,0],[0,0.5]]")[0] == 1


def test_inconclusive_exit_code(capsys):
    code, out, _ = run(capsys, "cabatif", "--symbol", "powers-nu:0.3", "--mu", "0.5", "--eta", "5",
                       "--no-spectral")
    assert code == 2
    assert json.loads(out)["cabatif"]["0.5"]["verdict"] == "Inconclusive"


def test_distinguish(capsys):
    code, out, _ = run(capsys, "distinguish", "--nu1", "0.05", "--nu2", "0.2")
    rep = json.loads(out)
    assert code == 0 and rep["result"] == "Distinguished" and rep["mu_star"] == pytest.approx(0.5)


def test_sweep_empty(capsys):
    code, out, _ = run(capsys, "sweep", "--nu", "0.3:0.1:0.1", "--mu", "0.5")
    assert code == 0 and out == "nu,mu,cabatif_verdict,fitted_exponent\n"


def test_sweep_nu_half_all_cabatif(capsys):
    code, out, _ = run(capsys, "sweep", "--nu", "0.5", "--mu", "0.1:0.9:0.2")
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert code == 0 and len(rows) == 5
    assert all(r[2] == "CABATIF" for r in rows)


def test_sweep_jobs_deterministic():
    a = cli.sweep_csv(cli.run_sweep([0.1, 0.2], [0.3, 0.7], jobs=1))
    b = cli.sweep_csv(cli.run_sweep([0.1, 0.2], [0.3, 0.7], jobs=2))
    assert a == b


def test_sweep_rejects_bad_mu(capsys):
    assert run(capsys, "sweep", "--nu", "0.1", "--mu", "1.5")[0] == 1
