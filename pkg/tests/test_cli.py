import json
import subprocess
import sys

import pytest

from conetrace.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_residue_inline(capsys):
    code, out, _ = run(capsys, "residue", "--inline", "n=2; |xi|^-2", "--json")
    assert code == 0
    obj = json.loads(out)
    assert obj["operation"] == "residue"
    assert set(obj) >= {"inputs_digest", "value", "certified_error", "wall_time", "seed"}
    assert abs(float(obj["value"][0]) - 6.283185307179586) < 1e-12
    assert obj["unit"] == "Area_2"


def test_trace_value(capsys):
    code, out, _ = run(capsys, "trace", "--inline", "|xi|^-4", "--json")
    assert code == 0
    assert "6.0268120396919" in out


def test_obstruction_exit_code(capsys):
    code, out, err = run(capsys, "decompose-deriv", "--inline", "n=2; |xi|^-2", "--json")
    assert code == 2
    msg = json.loads(out)
    assert msg["error"] == "ResidueObstruction" and msg["condition"]
    assert "violated condition" in err


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "residue", "--inline", "xi1 +")[0] == 1
    assert run(capsys, "residue", "--input", str(tmp_path / "none.json"))[0] == 1
    assert run(capsys, "verify", "nosuch")[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit):
        main(["residue", "--inline", "|xi|^-2", "--precision", "5"])


def test_problem_file_input(capsys, tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"kind": "homogeneous", "payload": {"expr": "|xi|^-3", "dim": 3}}))
    code, out, _ = run(capsys, "residue", "--input", str(p), "--json")
    assert code == 0 and "12.566370614359" in out


def test_trb_branch_reported(capsys):
    code, out, _ = run(capsys, "trb", "--inline", "a=-2; |xi|^-2", "--json")
    assert code == 0
    obj = json.loads(out)
    assert "Trt" in json.dumps(obj) and "2.5849817595" in out


def test_inputs_digest_is_stable(capsys):
    _, a, _ = run(capsys, "residue", "--inline", "n=2; |xi|^-2", "--json")
    _, b, _ = run(capsys, "residue", "--inline", "n=2;   |xi|^-2", "--json")
    assert json.loads(a)["inputs_digest"] == json.loads(b)["inputs_digest"]


def test_verify_suite_and_determinism(capsys):
    code, first, _ = run(capsys, "verify", "residue", "--seed", "3", "--json")
    _, second, _ = run(capsys, "verify", "residue", "--seed", "3", "--json")
    assert code == 0 and first == second
    lines = [json.loads(s) for s in first.splitlines()]
    assert all("wall_time" not in d for d in lines)
    assert lines[-1]["value"]["passed"] == lines[-1]["value"]["total"]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "conetrace.cli", "residue", "--inline",
                           "n=3; |xi|^-3", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0 and "12.566370614" in proc.stdout
