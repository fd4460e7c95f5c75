import json
import subprocess
import sys
from pathlib import Path

import pytest

from markov_consensus.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_reaches_consensus(capsys):
    code, out, _ = run(["simulate", "--agents", "2", "--grid-dim", "3", "--seed", "7"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["reached"] and data["consensus_time_s"] > 0


def test_simulate_alpha_too_large(capsys):
    code, out, err = run(["simulate", "--agents", "5", "--grid-dim", "5", "--alpha", "0.5"], capsys)
    assert code == 1
    assert out == ""
    assert len(err.strip().splitlines()) == 1


def test_simulate_without_feature(capsys):
    code, out, _ = run(["simulate", "--agents", "2", "--grid-dim", "3", "--feature-nodes", "", "--max-steps", "500"], capsys)
    assert code == 2
    assert json.loads(out)["steps_run"] == 500


def test_simulate_default_cap_without_feature(capsys):
    code, out, _ = run(["simulate", "--agents", "2", "--grid-dim", "3", "--feature-nodes", ""], capsys)
    assert code == 2
    assert json.loads(out)["steps_run"] == 100_000


def test_simulate_files(tmp_path, capsys):
    out, hist = tmp_path / "r.json", tmp_path / "h.csv"
    code, stdout, _ = run(
        ["simulate", "--agents", "3", "--grid-dim", "4", "--seed", "1", "--out", str(out), "--history", str(hist)], capsys
    )
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["reached"]
    assert hist.read_text().startswith("step,agent_id,node,xi,gate\n")


def test_simulate_unwritable_path(capsys):
    code, _, err = run(["simulate", "--agents", "2", "--grid-dim", "3", "--out", "/nonexistent/dir/x.json"], capsys)
    assert code == 1 and "error" in err


def test_unknown_flag_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--agents", "2", "--grid-dim", "3", "--bogus"])
    assert exc.value.code == 1


def write_config(tmp_path, **cfg):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    return path


def test_ensemble_smoke_and_determinism(tmp_path, capsys):
    cfg = write_config(tmp_path, agents=[2, 3], sides=[3, 5], runs=1, base_seed=4)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["ensemble", "--config", str(cfg), "--out", str(a)], capsys)[0] == 0
    assert run(["ensemble", "--config", str(cfg), "--out", str(b), "--parallel", "2"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "N,c,density,runs,mean_tc_s,std_tc_s,min_tc_s,median_tc_s,max_tc_s,unconverged"
    assert len(lines) == 5
    assert all(line.split(",")[5] == "0.0" for line in lines[1:])
    manifest = json.loads((tmp_path / "a.manifest.json").read_text())
    assert manifest["outputs"] == [str(a)]
    assert manifest["config"]["agents"] == [2, 3]
    assert all(Path(p).exists() for p in manifest["outputs"])


def test_ensemble_bad_field(tmp_path, capsys):
    cfg = write_config(tmp_path, agents=[2], sides=[5], runz=3)
    code, _, err = run(["ensemble", "--config", str(cfg), "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 1 and "runz" in err


def test_ensemble_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{agents: [2]")
    code, _, err = run(["ensemble", "--config", str(path), "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 1 and "malformed" in err


def test_full_sweep_config_row_count():
    from markov_consensus.ensemble import ScenarioSweep

    sweep = ScenarioSweep.from_dict({"agents": list(range(2, 15)), "sides": [5, 8, 10, 12, 15, 20], "runs": 1000})
    assert len(sweep.agents) * len(sweep.sides) == 78


def write_stats(tmp_path, pairs):
    lines = ["N,c,density,runs,mean_tc_s,std_tc_s,min_tc_s,median_tc_s,max_tc_s,unconverged"]
    for n, c, mu in pairs:
        lines.append(f"{n},{c},{n / c**2!r},1,{mu!r},0.0,{mu!r},{mu!r},{mu!r},0")
    path = tmp_path / "stats.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_fit_file_roundtrip_exact(tmp_path, capsys):
    import math

    pairs = [(n, 10, 100 * math.exp(-10 * n / 100)) for n in (2, 5, 10, 20)]
    code, out, _ = run(["fit", "--stats", str(write_stats(tmp_path, pairs))], capsys)
    assert code == 0
    fit = json.loads(out)
    assert fit["a"] == pytest.approx(100, rel=1e-9)
    assert fit["b"] == pytest.approx(-10, abs=1e-9)
    assert fit["r2"] == pytest.approx(1, abs=1e-9)
    assert fit["model"] == "mu = a*exp(b*density)"


def test_fit_constant_file(tmp_path, capsys):
    code, out, _ = run(["fit", "--stats", str(write_stats(tmp_path, [(2, 10, 40.0), (3, 10, 40.0), (4, 10, 40.0)]))], capsys)
    assert code == 0
    assert json.loads(out)["b"] == pytest.approx(0, abs=1e-12)


def test_fit_too_few_rows(tmp_path, capsys):
    code, _, _ = run(["fit", "--stats", str(write_stats(tmp_path, [(2, 10, 40.0), (3, 10, 30.0)]))], capsys)
    assert code == 1


def test_fit_on_ensemble_output(tmp_path, capsys):
    cfg = write_config(tmp_path, agents=[2, 4, 6], sides=[4, 6], runs=30)
    csv_path = tmp_path / "s.csv"
    assert run(["ensemble", "--config", str(cfg), "--out", str(csv_path)], capsys)[0] == 0
    code, out, _ = run(["fit", "--stats", str(csv_path)], capsys)
    assert code == 0 and json.loads(out)["b"] < 0


@pytest.mark.parametrize("c,n", [(3, 2), (1, 1)])
def test_verify_passes(c, n, capsys):
    code, out, _ = run(["verify", "--grid-dim", str(c), "--agents", str(n)], capsys)
    assert code == 0
    assert "overall: PASS" in out


def test_verify_cap_note(capsys):
    code, out, _ = run(["verify", "--grid-dim", "20", "--agents", "5", "--json"], capsys)
    data = json.loads(out)
    assert code == 0
    assert any("cap exceeded" in n for n in data["notes"])
    assert data["checks"]["P irreducible"] is True


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "markov_consensus", "verify", "--grid-dim", "2", "--agents", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
