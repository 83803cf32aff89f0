import csv
import io
import json

import pytest

from ptgup.cli import SWEEP_HEADER, main
from ptgup.model import ModelParams


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_spectrum_example(capsys):
    code, out, _ = run(capsys, "spectrum", "--lambda", "0", "--beta", "0.01", "--state", "1,0",
                       "--state", "0,0")
    assert code == 0
    doc = json.loads(out)
    assert doc["phase"] == "unbroken" and doc["lambda_crit"] == 1.5
    first, ground = doc["states"]
    assert first["E_re"] == pytest.approx(2.5) and first["E_im"] == 0
    assert ground["E_re"] == pytest.approx(1.5)
    assert ground["dE_re"] == pytest.approx(0.0475, rel=1e-14)


def test_spectrum_broken_pairs_and_zero_beta(capsys):
    code, out, _ = run(capsys, "spectrum", "--lambda", "2", "--state", "1,0", "--state", "0,1")
    a, b = json.loads(out)["states"]
    assert code == 0
    assert a["E_im"] == pytest.approx(-b["E_im"]) and a["E_im"] != 0
    assert a["dE_re"] == 0 and a["dE_im"] == 0


def test_spectrum_csv_round_trips(capsys):
    _, out, _ = run(capsys, "spectrum", "--lambda", "0.7", "--beta", "0.003", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 15
    _, js, _ = run(capsys, "spectrum", "--lambda", "0.7", "--beta", "0.003")
    for row, ref in zip(rows, json.loads(js)["states"]):
        assert float(row["E_re"]) == ref["E_re"] and float(row["dE_re"]) == ref["dE_re"]


def test_params_round_trip(capsys):
    _, out, _ = run(capsys, "spectrum", "--m", "1.25", "--wx", "0.3", "--wy", "2.5",
                    "--lambda", "-0.1", "--beta", "0.2", "--nmax", "0")
    params = json.loads(out)["params"]
    assert ModelParams(**params) == ModelParams(m=1.25, wx=0.3, wy=2.5, lam=-0.1, beta=0.2)


def test_sweep_flips_at_critical_coupling(capsys):
    code, out, _ = run(capsys, "sweep")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == SWEEP_HEADER
    body = [dict(zip(SWEEP_HEADER, r)) for r in rows[1:]]
    assert len(body) == 61
    for r in body:
        lam = float(r["lambda"])
        if lam < 1.5 - 1e-9:
            assert r["phase"] == "unbroken" and float(r["c1_im"]) == 0
        elif lam > 1.5 + 1e-9:
            assert r["phase"] == "broken" and float(r["c1_im"]) != 0
        else:
            assert r["phase"] == "critical"


def test_sweep_isotropic_has_empty_mode_fields(capsys):
    code, out, _ = run(capsys, "sweep", "--wx", "1", "--wy", "1", "--steps", "3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert rows[0]["phase"] == "decoupled" and rows[0]["c1_re"] == "1"
    assert rows[1]["phase"] == "isotropic_broken" and rows[1]["E00_re"] == ""


@pytest.mark.parametrize("argv", [
    ["sweep", "--lambda-min", "2", "--lambda-max", "1"],
    ["sweep", "--steps", "1"],
    ["spectrum", "--m", "-1"],
    ["spectrum", "--state", "1"],
    ["verify", "--cutoff", "4"],
    ["correction", "--format", "csv"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_wavefunction_pt_eigenvalues(capsys):
    code, out, _ = run(capsys, "wavefunction", "--lambda", "0.8", "--beta", "0.01",
                       "--state", "1,0", "--grid-points", "15")
    doc = json.loads(out)
    assert code == 0
    assert len(doc["psi_re"]) == 15 and len(doc["grid"]["x"]) == 15
    for key in ("pt_eigenvalue", "corrected_pt_eigenvalue"):
        assert doc[key]["x"]["re"] == pytest.approx(-1, abs=1e-12)
        assert doc[key]["y"]["re"] == pytest.approx(1, abs=1e-12)
        assert doc[key]["x"]["max_dev"] < 1e-10


def test_correction_report(capsys):
    code, out, _ = run(capsys, "correction", "--lambda", "0.5", "--beta", "0.01", "--state", "4,4")
    rep = json.loads(out)["reports"][0]
    assert code == 0 and rep["pt_preserved"]
    assert len(rep["M_coefficients"]) == 12
    assert all(c["im"] == 0 for c in rep["M_coefficients"])


def test_domain_exit_codes(capsys):
    assert run(capsys, "correction", "--lambda", "1.5", "--beta", "0.01")[0] == 3
    assert run(capsys, "spectrum", "--wx", "1", "--wy", "1", "--lambda", "0.2")[0] == 3
    code, _, err = run(capsys, "verify", "--lambdas", "0.5", "--betas", "0", "--cutoff", "20",
                       "--max-rows", "100")
    assert code == 5 and "guard" in err


def test_verify_reports_truncation_zone_failure(capsys):
    code, out, _ = run(capsys, "verify", "--lambdas", "0.5", "--betas", "0", "--cutoff", "8",
                       "--nmax", "6")
    doc = json.loads(out)
    assert code == 1 and not doc["all_pass"]
    zone = [c for c in doc["checks"] if c["name"] == "truncation_zone"][0]
    assert zone["pass"] is False


def test_out_file(tmp_path, capsys):
    target = tmp_path / "spectrum.json"
    code, out, _ = run(capsys, "spectrum", "--nmax", "1", "--out", str(target))
    assert code == 0 and out == ""
    assert len(json.loads(target.read_text())["states"]) == 3
