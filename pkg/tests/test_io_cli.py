import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from lienls import __version__
from lienls.cli import main

DEMOS = Path(__file__).resolve().parents[1] / "demos" / "configs"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_describe_e2(capsys):
    code, out, _ = run(["describe", "e2"], capsys)
    assert code == 0
    doc = yaml.safe_load(out)
    assert doc["index"] == 1
    assert doc["orbits"]["default"]["dim_O"] == 2
    assert doc["scalar_curvature"] == "delta3*(delta1 - delta2)**2/(2*delta1*delta2)"


def test_describe_s4(capsys):
    code, out, _ = run(["describe", "exp-solv-4"], capsys)
    assert code == 0
    doc = yaml.safe_load(out)
    assert doc["index"] == 2
    assert doc["casimirs"] == ["f1", "f1*f4 - f2*f3"]


def test_describe_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: bad\nalgebra:\n  dim: -1\n")
    code, _, err = run(["describe", bad], capsys)
    assert code == 2
    assert "bad.yaml:3" in err


def test_unknown_group(capsys):
    code, _, err = run(["check", "nope"], capsys)
    assert code == 2 and "unknown group" in err


def test_config_error_line_numbers(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("group: e2\nseed: 1\nbogus: {}\n")
    code, _, err = run(["reduce", "--config", cfg], capsys)
    assert code == 2
    assert "run.yaml:3" in err and "bogus" in err
    cfg.write_text("group: e2\nparameters:\n  j: (+ 1\n")
    code, _, err = run(["reduce", "--config", cfg], capsys)
    assert code == 2 and "run.yaml:3" in err


def test_check_abelian(capsys):
    code, out, _ = run(["check", DEMOS / "abelian-plane.yaml"], capsys)
    assert code == 0
    assert "check: PASS" in out
    assert "FAIL" not in out


def test_check_e2(tmp_path, capsys):
    code, out, _ = run(["check", "e2", "--out", tmp_path], capsys)
    assert code == 0
    assert "FAIL" not in out
    manifest = yaml.safe_load((tmp_path / "check-manifest.yaml").read_text())
    assert manifest["version"] == __version__
    assert "config_hash" in manifest and "seed" in manifest


def test_check_corrupt_phase(tmp_path, capsys):
    code, out, _ = run(["check", "exp-solv-4", "--suite", "transport", "--corrupt-phase", "--out", tmp_path], capsys)
    assert code == 1
    assert "transport" in out and "FAIL" in out
    assert "witness" in out
    rows = (tmp_path / "check.csv").read_text().splitlines()
    assert rows[0].startswith("# config_hash=")


def test_reduce_outputs_stamped(tmp_path, capsys):
    code, out, _ = run(["reduce", "e2", "--out", tmp_path, "--seed", "5"], capsys)
    assert code == 0
    head = (tmp_path / "reduced.csv").read_text().splitlines()[0]
    assert head.startswith("# config_hash=") and "seed=5" in head and f"version={__version__}" in head
    assert "cos(q - qp)" in out


def _outputs(d: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_solve_deterministic(tmp_path, capsys):
    cfg = DEMOS / "exp-solv-4-closed-form.yaml"
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["solve", "--config", cfg, "--out", a], capsys)[0] == 0
    assert run(["solve", "--config", cfg, "--out", b], capsys)[0] == 0
    assert _outputs(a) == _outputs(b)
    lines = (a / "solution.csv").read_text().splitlines()
    assert lines[1] == "t,coordinate,abs2,re,im,residual"


def test_sweep_records(tmp_path, capsys):
    cfg = DEMOS / "e2-sweep.yaml"
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["sweep", "--config", cfg, "--out", a], capsys)[0] == 0
    assert run(["sweep", "--config", cfg, "--out", b], capsys)[0] == 0
    assert _outputs(a) == _outputs(b)
    recs = [json.loads(l) for l in (a / "records.jsonl").read_text().splitlines()]
    assert len(recs) == 8
    assert len({r["result"]["c0"] for r in recs}) == 8
    assert [r["params"]["j"] for r in recs] == [float(k) for k in range(1, 9)]
    for r in recs:
        assert {"config_hash", "seed", "version"} <= set(r)


def test_sweep_command_line_grid(tmp_path, capsys):
    code, _, _ = run(["sweep", "e2", "--grid", "j=1,2", "--task", "reduce", "--out", tmp_path], capsys)
    assert code == 0
    assert len((tmp_path / "records.jsonl").read_text().splitlines()) == 2


def test_tolerance_scale_changes_hash(tmp_path, capsys):
    run(["reduce", "e2", "--out", tmp_path / "a"], capsys)
    run(["reduce", "e2", "--out", tmp_path / "b", "--tolerance-scale", "2"], capsys)
    ha = (tmp_path / "a" / "reduced.csv").read_text().splitlines()[0]
    hb = (tmp_path / "b" / "reduced.csv").read_text().splitlines()[0]
    assert ha != hb


def test_group_file_relative_to_config(tmp_path, capsys):
    shutil.copy(DEMOS / "abelian-plane.yaml", tmp_path / "plane.yaml")
    cfg = tmp_path / "run.yaml"
    cfg.write_text("group: plane.yaml\nseed: 3\n")
    code, out, _ = run(["check", "--config", cfg], capsys)
    assert code == 0 and "check: PASS" in out


def test_console_script_version():
    exe = shutil.which("lienls")
    cmd = [exe] if exe else [sys.executable, "-m", "lienls.cli"]
    out = subprocess.run(cmd + ["--version"], capture_output=True, text=True, check=True)
    assert __version__ in out.stdout


def test_missing_parameter_is_config_error(tmp_path, capsys):
    code, _, err = run(["solve", "exp-solv-4", "--out", tmp_path], capsys)
    assert code == 2
    assert "configuration error" in err


@pytest.mark.parametrize("verb", ["describe", "check", "reduce", "solve", "verify", "sweep"])
def test_verbs_have_help(verb, capsys):
    with pytest.raises(SystemExit) as e:
        main([verb, "--help"])
    assert e.value.code == 0
    assert "--tolerance-scale" in capsys.readouterr().out
