import json

import pytest

from noisygrover import cli, io


def test_csv_round_trip(tmp_path):
    prov = {"seed": 3, "config": {"n": 4}}
    path = io.write_csv(tmp_path / "x.csv", [{"a": 1, "b": 0.5}, {"a": 2, "b": None}], ("a", "b"), prov)
    got_prov, rows = io.read_csv(path)
    assert got_prov == prov
    assert rows == [{"a": "1", "b": "0.5"}, {"a": "2", "b": ""}]


def test_parse_range():
    assert cli.parse_range("2..5") == [2, 3, 4, 5]
    assert cli.parse_range("3,5") == [3, 5]
    for bad in ("1..3", "2..13", "x"):
        with pytest.raises(Exception):
            cli.parse_range(bad)


def test_noiseless_check(tmp_path, capsys):
    assert cli.main(["noiseless-check", "--n", "2..4", "--out", str(tmp_path)]) == 0
    prov, rows = io.read_csv(tmp_path / "noiseless_check.csv")
    assert [int(r["n"]) for r in rows] == [2, 3, 4]
    assert all(float(r["max_abs_dev"]) < 1e-9 for r in rows)


def damping_args(out, workers):
    return ["damping", "--n", "3", "--inv-epsilon", "3000", "--inv-gamma", "5000", "--T", "12", "--seed", "7",
            "--trajectories", "1500", "--chunk-size", "500", "--workers", str(workers), "--out", str(out), "--plot"]


def test_damping_outputs_are_byte_identical(tmp_path):
    assert cli.main(damping_args(tmp_path / "a", 1)) == 0
    assert cli.main(damping_args(tmp_path / "b", 2)) == 0
    for name in ("curve.csv", "curve_fit.json", "curve.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    prov, rows = io.read_csv(tmp_path / "a" / "curve.csv")
    assert prov["config"]["seed"] == 7 and "rerun" in prov and len(rows) == 13
    fit = json.loads((tmp_path / "a" / "curve_fit.json").read_text())
    assert fit["damping_fit"]["lambda"] > 0


def test_seed_is_mandatory(capsys):
    assert cli.main(["damping", "--n", "3"]) == cli.EXIT_CONFIG


def test_config_errors(capsys, tmp_path):
    rc = cli.main(["damping", "--n", "3", "--epsilon", "2", "--seed", "1", "--out", str(tmp_path)])
    assert rc == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "config"
    assert cli.main(["damping", "--n", "30", "--seed", "1"]) == cli.EXIT_CONFIG
    assert cli.main([]) == cli.EXIT_CONFIG


def test_threshold_out_of_range(capsys, tmp_path):
    rc = cli.main(["threshold", "--n", "3", "--p-th", "0.99", "--seed", "1", "--trajectories", "500",
                   "--out", str(tmp_path)])
    assert rc == cli.EXIT_THRESHOLD
    assert json.loads(capsys.readouterr().err.strip())["error"] == "threshold-out-of-range"


def test_encoded_prep_failure_dominance(capsys, tmp_path):
    rc = cli.main(["encoded", "--epsilons", "0.4", "--seed", "1", "--trajectories", "200", "--max-restarts", "1",
                   "--out", str(tmp_path)])
    assert rc == cli.EXIT_PREP


def test_encoded_json_and_plot(tmp_path):
    rc = cli.main(["encoded", "--epsilons", "0.001,0.02", "--seed", "2", "--trajectories", "1000",
                   "--out", str(tmp_path), "--plot"])
    assert rc == 0
    prov, rows = io.read_csv(tmp_path / "encoded.csv")
    assert list(rows[0]) == list(cli.steane.ENCODED_COLUMNS)
    assert (tmp_path / "encoded.png").stat().st_size > 0
    rc = cli.main(["encoded", "--epsilons", "0.001", "--seed", "2", "--trajectories", "500",
                   "--out", str(tmp_path / "j"), "--format", "json"])
    doc = json.loads((tmp_path / "j" / "encoded.json").read_text())
    assert doc["rows"][0]["n_traj"] == 500 and doc["provenance"]["command"] == "encoded"


def test_threshold_law_and_first_max_and_coefficients(tmp_path):
    assert cli.main(["threshold-law", "--n", "2..4", "--seed", "11", "--trajectories", "3000",
                     "--out", str(tmp_path), "--plot"]) == 0
    law = json.loads((tmp_path / "threshold_law_fit.json").read_text())
    assert law["law"]["a"] > 0 and law["max_qubits"] >= 0
    assert cli.main(["first-max", "--n", "3", "--eps-min", "1e-3", "--eps-max", "1e-2", "--per-decade", "4",
                     "--seed", "1", "--trajectories", "2000", "--out", str(tmp_path), "--plot"]) == 0
    assert (tmp_path / "first_max_n3.png").exists()
    assert cli.main(["coefficients", "--n", "3", "--epsilon", "0.01", "--gamma", "0.01", "--t", "2,5", "--seed", "1",
                     "--trajectories", "1000", "--out", str(tmp_path), "--plot"]) == 0
    prov, rows = io.read_csv(tmp_path / "coefficients.csv")
    assert len(rows) == 16


def test_acceptance_subcommand_subset(tmp_path, capsys):
    assert cli.main(["acceptance", "--only", "1,8", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "2/2 criteria passed" in out
    assert json.loads((tmp_path / "acceptance.json").read_text())["results"][0]["passed"] is True
