import json
import math
import os

import pytest

from xorszilard import cli, make_chained, save_game
from xorszilard.cli import (EXIT_BUDGET, EXIT_PARSE, EXIT_REGIME,
                            EXIT_VALIDATION, main)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_value_chsh(capsys):
    data = run_json(capsys, "value", "--game", "chsh")
    assert data["omega_local"] == 0.75
    assert abs(data["omega_quantum"] - 0.853553) < 1e-6
    assert data["omega_ns"] == 1.0
    assert data["converged"] is True
    assert data["seed"] == cli.DEFAULT_SEED
    assert abs(data["ceilings_bits"]["local"] - 0.188722) < 5e-4
    assert abs(data["ceilings_bits"]["quantum"] - 0.399134) < 5e-4
    assert data["ceilings_bits"]["ns"] == 1.0


def test_value_chained3(capsys):
    data = run_json(capsys, "value", "--game", "chained:3")
    assert abs(data["omega_local"] - 0.833333) < 1e-6
    assert abs(data["omega_quantum"] - 0.933013) < 1e-6
    assert data["omega_ns"] == 1.0


def test_value_bad_game_file_names_mu(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "name": "bad", "nu": 2, "nv": 2,
        "mu": [[0.225, 0.225], [0.225, 0.225]],  # sums to 0.9
        "f": [[0, 0], [0, 1]]}))
    code, out, err = run(capsys, "value", "--game", str(path))
    assert code == EXIT_VALIDATION
    assert "mu" in err


def test_unknown_specs_exit_parse(capsys):
    code, _, err = run(capsys, "value", "--game", "tictactoe")
    assert code == EXIT_PARSE
    code, _, err = run(capsys, "simulate", "--game", "chsh",
                       "--behaviour", "wat")
    assert code == EXIT_PARSE


def test_budget_exit_code(capsys, tmp_path):
    path = tmp_path / "big.json"
    save_game(make_chained(21), str(path))  # nu + nv = 42
    code, _, err = run(capsys, "value", "--game", str(path))
    assert code == EXIT_BUDGET


def test_game_file_roundtrip_bit_identical(capsys, tmp_path):
    ref = run_json(capsys, "value", "--game", "chained:3", "--seed", "5")
    path = tmp_path / "c3.json"
    save_game(make_chained(3), str(path))
    reloaded = run_json(capsys, "value", "--game", str(path), "--seed", "5")
    assert reloaded["omega_local"] == ref["omega_local"]
    assert reloaded["omega_quantum"] == ref["omega_quantum"]
    assert reloaded["strategy"] == ref["strategy"]


def test_channel_mix_spec(capsys):
    data = run_json(capsys, "channel", "--game", "chsh",
                    "--behaviour", "mix:pr:0.5")
    assert data["p"] == pytest.approx(0.75, abs=1e-12)
    assert data["mutual_information_bits"] == pytest.approx(0.188722, abs=1e-6)
    assert data["nonsignalling"] is True


def test_channel_quantum_opt_requires_chsh(capsys):
    code, _, err = run(capsys, "channel", "--game", "chained:3",
                       "--behaviour", "quantum-opt")
    assert code == EXIT_VALIDATION


def test_simulate_pr_exact(capsys):
    data = run_json(capsys, "simulate", "--game", "chsh", "--behaviour", "pr",
                    "--rounds", "20000", "--seed", "3")
    assert data["empirical_p"] == 1.0
    assert data["mean_work_kt"] == pytest.approx(math.log(2), abs=0)
    assert data["seed"] == 3


def test_simulate_noisy_pr(capsys):
    data = run_json(capsys, "simulate", "--game", "chsh",
                    "--behaviour", "noisy:pr:0.1", "--rounds", "100000",
                    "--seed", "4")
    assert data["noise_delta"] == 0.1
    se = math.sqrt(0.9 * 0.1 / 100000)
    assert abs(data["empirical_p"] - 0.9) < 4 * se
    assert abs(data["z_score"]) < 4


def test_simulate_quantum_opt_z_score(capsys):
    data = run_json(capsys, "simulate", "--game", "chsh",
                    "--behaviour", "quantum-opt", "--rounds", "200000",
                    "--seed", "7")
    assert abs(data["z_score"]) <= 4
    assert abs(data["analytic_work_kt"] - 0.276666) < 5e-4


def test_simulate_records_csv(capsys, tmp_path):
    path = tmp_path / "rounds.csv"
    run_json(capsys, "simulate", "--game", "chsh", "--behaviour", "pr",
             "--rounds", "50", "--seed", "1", "--records", str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,u,v,a,b,r,g,e,won"
    assert len(lines) == 51


def test_sweep_markers(capsys):
    code, out, _ = run(capsys, "sweep", "--step", "0.25")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "param,value_bits,value_kt"
    rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
    assert float(rows["0"][1]) == 0.0
    assert abs(float(rows["2"][1]) - 0.188722) < 1e-6
    assert abs(float(rows["2.82842712"][1]) - 0.3991) < 5e-5
    assert float(rows["4"][1]) == 1.0


def test_cycle(capsys):
    assert run_json(capsys, "cycle", "--p", "1.0")["w_net_bits"] == 0.0
    data = run_json(capsys, "cycle", "--p", "0.75")
    assert data["w_net_bits"] == pytest.approx(-0.811278, abs=1e-6)
    assert run_json(capsys, "cycle", "--p", "0.5")["w_net_bits"] == -1.0


def test_finite_time_self_test(capsys):
    code, out, _ = run(capsys, "finite-time", "--self-test")
    assert code == 0
    data = json.loads(out)
    assert data["slope"] == pytest.approx(-1.0, abs=1e-9)


def test_finite_time_single_point_errors(capsys):
    code, _, err = run(capsys, "finite-time", "--tau-grid", "1e6",
                       "--reps", "100")
    assert code == EXIT_VALIDATION
    assert "2 points" in err


def test_finite_time_small_run(capsys):
    code, out, _ = run(capsys, "finite-time", "--tau-grid", "5,10,20",
                       "--reps", "400", "--seed", "2")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "tau,sigma_mean,sigma_stderr,reps,seed"
    assert len(lines) >= 4
    tail = "\n".join(lines[4:])
    data = json.loads(tail)
    assert data["slope"] < 0


def test_out_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("XORSZILARD_OUT_DIR", str(tmp_path))
    run_json(capsys, "cycle", "--p", "0.75", "--out", "ledger.json")
    saved = json.loads((tmp_path / "ledger.json").read_text())
    assert saved["w_net_bits"] == pytest.approx(-0.811278, abs=1e-6)


def test_kt_scaling(capsys):
    data = run_json(capsys, "cycle", "--p", "0.75", "--kt", "2.0")
    assert data["w_net_scaled"] == pytest.approx(
        -0.8112781244591328 * math.log(2) * 2.0, abs=1e-12)
