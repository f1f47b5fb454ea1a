import csv
import io
import json

import pytest

from hypocone.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_basis(capsys):
    code, out, _ = run(capsys, "basis", "--model", "grushin")
    doc = json.loads(out)
    assert code == 0 and doc["dimension"] == 3 and doc["graded_dimensions"] == [2, 1]
    assert doc["structure_constants"] == [{"i": 1, "j": 2, "k": 3, "c": "1"}]


def test_brackets(capsys):
    code, out, _ = run(capsys, "brackets", "--model", "grushin")
    rows = table(out)
    assert code == 0 and rows[2]["word"] == "[X1,X2]" and rows[2]["d/dx2"] == "1" and rows[1]["d/dx2"] == "x1"


def test_cones(capsys):
    code, out, _ = run(capsys, "cones", "--model", "grushin", "--point", "1,0")
    rows = table(out)
    assert code == 0 and len(rows) == 1
    assert rows[0]["basis"] == "0,0,1" and rows[0]["stratum"] == "generic" and rows[0]["subalgebra"] == "true"


def test_hn(capsys):
    code, out, _ = run(capsys, "hn", "--model", "grushin", "--point", "0,0", "--functional", "0.3,1,-1/2")
    doc = json.loads(out)
    assert code == 0 and doc["member_def2"] and doc["def1_attained"]["approach"].startswith("ray(axis=1,lambda=2")
    code, out, _ = run(capsys, "hn", "--model", "grushin", "--point", "1,0", "--functional", "0,0,1")
    assert json.loads(out)["member_def2"] is False and json.loads(out)["def1_attained"] is None


def test_symbol_scalar_and_matrix(capsys):
    code, out, _ = run(capsys, "symbol", "--model", "grushin", "--op", "d_ell_3", "--point", "0,0",
                       "--rep", "character:2,-3")
    assert code == 0 and json.loads(out)["symbol"] == "-13"
    code, out, _ = run(capsys, "symbol", "--model", "grushin", "--op", "d_ell_3", "--point", "0,0",
                       "--rep", "schrodinger:-1,16")
    rows = table(out)
    assert code == 0 and rows[0]["eigenvalue"] == "2+0i" and rows[1]["eigenvalue"] == "0+0i"


def test_hypo_check_verdict(capsys):
    code, out, _ = run(capsys, "hypo-check", "--model", "grushin", "--op", "d_ell_3", "--grid", "0,0;1,0")
    assert code == 0
    assert "NOT maximal hypoelliptic at (0,0)" in out
    code, out, _ = run(capsys, "hypo-check", "--model", "grushin", "--op", "d_ell_2", "--grid", "axis")
    assert code == 0 and "maximal hypoelliptic at every grid point" in out


def test_cc_dist(capsys):
    code, out, _ = run(capsys, "cc-dist", "--model", "elliptic", "--from", "0,0", "--to", "3,4",
                       "--steps", "16", "--restarts", "2")
    head = out.splitlines()[0]
    assert code == 0 and float(head.split("d_CC = ")[1].split(",")[0]) == pytest.approx(5, rel=1e-6)
    rows = table(out)
    assert len(rows) == 17 and float(rows[-1]["x1"]) == pytest.approx(3, abs=1e-6) and rows[-1]["u1"] == ""


def test_cone_check(capsys):
    code, out, _ = run(capsys, "cone-check", "--model", "grushin", "--point", "1,0", "--directions", "1,0,0",
                       "--t", "0.2,0.1", "--steps", "16", "--restarts", "2")
    rows = table(out)
    assert code == 0 and len(rows) == 2 and rows[0]["status"] == "ok"


def test_estimate(capsys):
    code, out, _ = run(capsys, "estimate", "--model", "grushin-torus", "--op", "d_ell_0", "--test", "x1_squared",
                       "--K", "8,16,24")
    assert code == 0 and out.startswith("# finite-K check")
    assert {r["classification"] for r in table(out)} == {"bounded"}
    code, _, err = run(capsys, "estimate", "--model", "grushin", "--op", "d_ell_0", "--test", "x1_squared")
    assert code == 2 and "periodic" in err


def test_out_file_and_determinism(capsys, tmp_path):
    p = tmp_path / "o.csv"
    assert main(["cones", "--model", "grushin", "--point", "0,0", "--out", str(p)]) == 0
    first = p.read_text()
    assert main(["cones", "--model", "grushin", "--point", "0,0", "--out", str(p)]) == 0
    assert p.read_text() == first and capsys.readouterr().out == ""


@pytest.mark.parametrize("argv,code", [
    ([], 1),
    (["nonsense", "--model", "grushin"], 1),
    (["cones"], 1),
    (["cones", "--model", "grushin"], 1),
    (["cones", "--model", "grushin", "--point", "a,b"], 1),
    (["symbol", "--model", "grushin", "--op", "d_ell_0", "--point", "0,0", "--rep", "weird"], 1),
    (["hn", "--model", "grushin", "--point", "0,0", "--functional", "1,2"], 1),
    (["basis", "--model", "missing-model"], 2),
    (["symbol", "--model", "grushin", "--op", "missing-op", "--point", "0,0", "--rep", "character:1,1"], 2),
])
def test_exit_codes(capsys, argv, code):
    assert main(argv) == code
    assert capsys.readouterr().err


def test_nonconvergence_exit_code(capsys, tmp_path):
    doc = {"dimension": 2, "step": 1, "fields": [[[{"coeff": "1"}], []]]}
    p = tmp_path / "line.json"
    p.write_text(json.dumps(doc))
    assert main(["cc-dist", "--model", str(p), "--from", "0,0", "--to", "0,1", "--steps", "8",
                 "--restarts", "1"]) == 3
    assert "not converged" in capsys.readouterr().err
