import json
import shutil
import subprocess
import sys

import pytest

from artifact import cli
from artifact.ci_lattice import IdentityCheck, VerificationReport


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_report_genus_four(capsys):
    code, out, _ = run(capsys, "report", "--pn", "5", "--degrees", "2,3", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == cli.REPORT_SCHEMA
    dims = data["entries"][0]["dimensions"]
    assert dims["usdim"] == "7/3" and dims["lsdim"] == "2" and dims["serre_invariant_possible"] is False
    assert len(data["entries"][0]["verification"]) == 2


def test_report_cubic(capsys):
    code, out, _ = run(capsys, "report", "--pn", "5", "--degrees", "3", "--json")
    entry = json.loads(out)["entries"][0]
    assert code == 0 and entry["dimensions"]["frac_cy"] == "2" and entry["passed"]
    assert all(c["passed"] for v in entry["verification"] for c in v["checks"])


def test_report_weighted(capsys):
    code, out, _ = run(capsys, "report", "--weights", "1,1,2", "--degrees", "2", "--json")
    entry = json.loads(out)["entries"][0]
    assert code == 0 and entry["dimensions"] is None and entry["lattice"]["rank"] == 2


def test_report_table_and_catalog(capsys):
    code, out, _ = run(capsys, "report", "--pn", "4", "--degrees", "3")
    assert code == 0 and "usdim 5/3" in out
    code, out, _ = run(capsys, "report", "--catalog", "--json")
    assert code == 0 and json.loads(out)["computed"] is False


def test_batch(tmp_path, capsys):
    f = tmp_path / "batch.jsonl"
    f.write_text('{"n": 5, "degrees": [3]}\n\n{"weights": [1, 1, 1, 2], "degrees": [3]}\n{"n": 6, "degrees": [2, 2], "split": 0}\n')
    code, out, _ = run(capsys, "report", "--batch", str(f), "--json")
    data = json.loads(out)
    assert code == 0 and [e["variety"] for e in data["entries"]] == [
        "X(3) in P^5",
        "X(3) in P(1,1,1,2)",
        "X(2,2) in P^6",
    ]
    f.write_text('{"n": 5, "degrees": [3]}\n{"n": 5\n')
    assert run(capsys, "report", "--batch", str(f))[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["report", "--pn", "3", "--degrees", "3,2"],
        ["report", "--pn", "5", "--degrees", "x"],
        ["report", "--degrees", "3"],
        ["report", "--pn", "5", "--degrees", "3", "--split", "4"],
        ["report", "--batch", "/nonexistent/file.jsonl"],
        ["words", "Psi o (T_C"],
        ["words", "Psi o Psi"],
        ["words", "Foo"],
        ["words", "T_C", "--model", "P5:x"],
        ["words", "a", "b", "c"],
        ["verify", "--max-n", "0"],
        ["frobnicate"],
    ],
)
def test_malformed_inputs_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_syntax_error_reports_position(capsys):
    code, _, err = run(capsys, "words", "Psi o (T_C")
    assert code == 2 and "position 10" in err


def test_words(capsys):
    code, out, _ = run(capsys, "words", "Psi ∘ T_C", "--json")
    assert code == 0 and json.loads(out)["words"][0]["normal_form"] == "T_D ∘ [-2] ∘ Psi"
    code, out, _ = run(capsys, "words", "S_D o Psi o S_C^-1", "T_D^-1 o Psi o [1]", "--json")
    assert code == 0 and json.loads(out)["equality"]["verdict"] == "Equal"
    code, out, _ = run(capsys, "words", "PsiR", "PsiL", "--json")
    assert code == 1 and json.loads(out)["equality"]["verdict"] == "DistinguishedBy"
    code, out, _ = run(capsys, "words", "S_R^3", "T_RD^-2 o t_R^2 o s_R^3", "--model", "P5:3", "--model", "P4:3")
    assert code == 0 and "EqualInAllModels" in out


def test_emit_matrix(capsys):
    code, out, _ = run(capsys, "words", "S_R", "--model", "P5:3", "--emit-matrix", "--json")
    mats = json.loads(out)["words"][0]["matrices"]["P5:3"]
    assert code == 0 and mats["shape"] == [2, 2]
    assert json.loads(out)["words"][0]["normal_form_in_context"]["P5:3"] == "O_Bprime^-3 ∘ s_R"


def test_verify_sweeps(capsys):
    assert run(capsys, "verify", "--max-n", "6", "--max-k", "2")[0] == 0
    assert run(capsys, "verify", "--hypersurfaces", "--max-n", "6")[0] == 0
    code, out, _ = run(capsys, "verify", "--quadric-divisors", "--refined", "--max-n", "7", "--json")
    data = json.loads(out)
    assert code == 0 and data["failed"] == 0 and data["total"] > 0


def test_verification_failure_exit_1(capsys, monkeypatch):
    bad = VerificationReport("fake", (IdentityCheck("x", False, "matrix mismatch", (1, 0), (1, 1), (0, 1)),))
    monkeypatch.setattr(cli, "verify_identities", lambda X: bad)
    code, _, err = run(capsys, "verify", "--max-n", "3", "--max-k", "1")
    assert code == 1 and "witness" in err
    code, out, _ = run(capsys, "report", "--pn", "5", "--degrees", "3", "--json")
    assert code == 1 and json.loads(out)["passed"] is False


def test_deterministic_output(capsys):
    args = ["report", "--pn", "6", "--degrees", "2,3", "--json"]
    first = run(capsys, *args)[1]
    second = run(capsys, *args)[1]
    assert first == second
    args = ["words", "S_R^2", "T_RD o s_R", "--emit-matrix", "--json"]
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_console_script_and_module():
    exe = shutil.which("artifact")
    cmds = [[sys.executable, "-m", "artifact", "report", "--pn", "5", "--degrees", "3", "--json"]]
    if exe:
        cmds.append([exe, "report", "--pn", "5", "--degrees", "3", "--json"])
    outs = [subprocess.run(c, capture_output=True, check=True).stdout for c in cmds]
    assert all(o == outs[0] for o in outs)
