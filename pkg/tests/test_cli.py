import csv
import io
import json

import numpy as np
import pytest

from radarbias.cli import main

import oracles


def example_config(name="a"):
    ex = oracles.REGISTRATION_EXAMPLES[name]
    w = oracles.EXAMPLE_WEIGHTS
    return {
        "relative_bias": list(ex["relative_bias"]),
        "sensor1": dict(zip(("p_t", "azimuth", "elevation"), ex["geom1"])),
        "sensor2": dict(zip(("p_t", "azimuth", "elevation"), ex["geom2"])),
        "weights": dict(w),
    }


def scenario_doc(n_runs=200, n_steps=40, master_seed=5):
    return {
        "config": {"period": 1.0, "meas_var": 1.0, "process_var": 2.0,
                   "bias_var": 4.0, "rho": 2.0},
        "gains": {"alpha": 0.2, "beta": 0.04385},
        "n_runs": n_runs, "n_steps": n_steps, "master_seed": master_seed,
        "initial_state": [0.0, 0.0], "burn_in": None,
    }


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRegister:
    def test_reference_example(self, tmp_path, capsys):
        path = tmp_path / "a.json"
        path.write_text(json.dumps(example_config("a")))
        code, out, _ = run(capsys, "register", "--config", str(path))
        assert code == 0
        doc = json.loads(out)
        ex = oracles.REGISTRATION_EXAMPLES["a"]["expected"]
        assert doc["bias1"]["range_m"] == pytest.approx(ex[0], rel=1e-3)
        assert doc["bias1"]["azimuth_rad"] == pytest.approx(ex[1], rel=1e-3)
        assert doc["bias2"]["elevation_rad"] == pytest.approx(ex[5], rel=1e-3)
        assert doc["cost"] == pytest.approx(
            oracles.REGISTRATION_EXAMPLES["a"]["cost"], rel=1e-3)
        assert doc["constraint_residual_m"] < 1e-6

    def test_csv_format(self, tmp_path, capsys):
        path = tmp_path / "a.json"
        path.write_text(json.dumps(example_config("a")))
        code, out, _ = run(capsys, "register", "--config", str(path),
                           "--format", "csv")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1
        assert float(rows[0]["dr1_m"]) == pytest.approx(-1.7678e2, rel=1e-3)

    def test_stdin_config(self, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(example_config())))
        code, out, _ = run(capsys, "register", "--config", "-")
        assert code == 0
        assert json.loads(out)["cost"] == pytest.approx(1.6250e4, rel=1e-3)

    def test_singular_geometry_exit_two(self, tmp_path, capsys):
        doc = example_config()
        doc["sensor2"]["p_t"] = 0.0
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run(capsys, "register", "--config", str(path))
        assert code == 2
        assert "singular geometry: sensor 2" in err

    def test_malformed_json_exit_three(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code, _, err = run(capsys, "register", "--config", str(path))
        assert code == 3
        assert "error:" in err

    def test_missing_field_exit_three(self, tmp_path, capsys):
        doc = example_config()
        del doc["weights"]["k_r1_sq"]
        path = tmp_path / "missing.json"
        path.write_text(json.dumps(doc))
        code, _, err = run(capsys, "register", "--config", str(path))
        assert code == 3
        assert "k_r1_sq" in err

    def test_nonpositive_weight_exit_three(self, tmp_path, capsys):
        doc = example_config()
        doc["weights"]["k_r2_sq"] = -1.0
        path = tmp_path / "neg.json"
        path.write_text(json.dumps(doc))
        code, _, _ = run(capsys, "register", "--config", str(path))
        assert code == 3

    def test_output_file(self, tmp_path, capsys):
        cfg = tmp_path / "a.json"
        cfg.write_text(json.dumps(example_config()))
        out_path = tmp_path / "result.json"
        code, out, _ = run(capsys, "register", "--config", str(cfg),
                           "--output", str(out_path))
        assert code == 0 and out == ""
        assert json.loads(out_path.read_text())["cost"] == pytest.approx(
            1.6250e4, rel=1e-3)


class TestGains:
    def test_single_point(self, capsys):
        code, out, _ = run(capsys, "gains", "--rho", "2", "--alpha", "0.2")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1
        assert float(rows[0]["beta"]) == pytest.approx(0.04385, abs=5e-5)
        assert float(rows[0]["excluded_root"]) == pytest.approx(3.6)

    def test_header_columns(self, capsys):
        code, out, _ = run(capsys, "gains", "--rho", "2", "--alpha", "0.2")
        assert code == 0
        header = out.splitlines()[0]
        assert header == "rho,alpha,beta,eig1_mod,eig2_mod,S11dot,S21dot,excluded_root"

    def test_grid(self, capsys):
        code, out, _ = run(capsys, "gains", "--grid", "2,10:0.2,0.5")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 4
        wanted = {(10.0, 0.5): 0.2959}
        for row in rows:
            key = (float(row["rho"]), float(row["alpha"]))
            if key in wanted:
                assert float(row["beta"]) == pytest.approx(wanted[key], abs=5e-5)

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "gains", "--rho", "10", "--alpha", "0.5",
                           "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc[0]["beta"] == pytest.approx(0.2959, abs=5e-5)

    def test_zero_alpha_exit_two(self, capsys):
        code, _, err = run(capsys, "gains", "--rho", "2", "--alpha", "0")
        assert code == 2
        assert "error:" in err

    def test_missing_arguments_exit_three(self, capsys):
        code, _, _ = run(capsys, "gains", "--rho", "2")
        assert code == 3

    def test_nonpositive_period_exit_three(self, capsys):
        code, _, _ = run(capsys, "gains", "--rho", "2", "--alpha", "0.2",
                         "--period", "0")
        assert code == 3


class TestSimulate:
    def test_small_scenario(self, tmp_path, capsys):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario_doc()))
        code, out, _ = run(capsys, "simulate", "--config", str(path))
        assert code == 0
        doc = json.loads(out)
        assert np.shape(doc["empirical_S"]) == (2, 2)
        assert doc["n_samples"] == 200 * 20
        assert len(doc["run_seeds"]) == 200

    def test_seed_override_and_determinism(self, tmp_path, capsys):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario_doc(master_seed=1)))
        _, out1, _ = run(capsys, "simulate", "--config", str(path),
                         "--seed", "99")
        _, out2, _ = run(capsys, "simulate", "--config", str(path),
                         "--seed", "99")
        doc1, doc2 = json.loads(out1), json.loads(out2)
        doc1.pop("wall_time_s"), doc2.pop("wall_time_s")
        assert doc1 == doc2

    def test_csv_format(self, tmp_path, capsys):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario_doc()))
        code, out, _ = run(capsys, "simulate", "--config", str(path),
                           "--format", "csv")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["entry"] for r in rows] == ["S11", "S12", "S21", "S22"]

    def test_invalid_gains_exit_two(self, tmp_path, capsys):
        doc = scenario_doc()
        doc["gains"]["beta"] = 3.6
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(doc))
        code, _, err = run(capsys, "simulate", "--config", str(path))
        assert code == 2
        assert "beta_not_excluded" in err

    def test_bad_scenario_exit_three(self, tmp_path, capsys):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"config": {}}))
        code, _, _ = run(capsys, "simulate", "--config", str(path))
        assert code == 3


class TestTransform:
    def test_identity_pair(self, capsys):
        code, out, _ = run(capsys, "transform", "--from", "cartesian",
                           "--to", "cartesian", "--point", "1,2,3")
        assert code == 0
        assert json.loads(out)["point"] == [1.0, 2.0, 3.0]

    def test_spherical_to_cartesian(self, capsys):
        code, out, _ = run(capsys, "transform", "--from", "spherical",
                           "--to", "cartesian", "--point", "1,0,0")
        assert code == 0
        assert json.loads(out)["point"] == pytest.approx([1.0, 0.0, 0.0])

    def test_enu_round_trip(self, capsys):
        # values starting with a dash use the --option=value form
        point = "1000,-2000,500"
        args = ["--site1=0.1,0.7", "--site2=-0.4,0.2"]
        code, out, _ = run(capsys, "transform", "--from", "enu1", "--to", "enu2",
                           "--point=" + point, *args)
        assert code == 0
        mid = json.loads(out)["point"]
        code, out, _ = run(capsys, "transform", "--from", "enu2", "--to", "enu1",
                           "--point=" + ",".join(repr(v) for v in mid), *args)
        assert code == 0
        back = json.loads(out)["point"]
        np.testing.assert_allclose(back, [1000.0, -2000.0, 500.0], atol=1e-9)

    def test_velocity_mode_preserves_norm(self, capsys):
        args = ["--site1=0.1,0.7", "--site2=-0.4,0.2", "--velocity"]
        code, out, _ = run(capsys, "transform", "--from", "enu1", "--to", "enu2",
                           "--point", "10,20,-5", *args)
        assert code == 0
        v = np.array(json.loads(out)["point"])
        assert np.linalg.norm(v) == pytest.approx(np.linalg.norm([10, 20, -5]),
                                                  rel=1e-6)

    def test_face_frame(self, capsys):
        code, out, _ = run(capsys, "transform", "--from", "enu1", "--to", "face",
                           "--point", "0,1,0", "--face-angles",
                           f"{np.pi / 2},0")
        assert code == 0
        assert json.loads(out)["point"] == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)

    def test_unsupported_pair_exit_three(self, capsys):
        code, _, err = run(capsys, "transform", "--from", "spherical",
                           "--to", "eci", "--point", "1,0,0")
        assert code == 3
        assert "unsupported frame pair" in err

    def test_missing_site_exit_three(self, capsys):
        code, _, _ = run(capsys, "transform", "--from", "enu1", "--to", "enu2",
                         "--point", "1,0,0")
        assert code == 3

    def test_invalid_earth_model_exit_three(self, capsys):
        code, _, _ = run(capsys, "transform", "--from", "cartesian",
                         "--to", "spherical", "--point", "1,0,0",
                         "--eccentricity", "1.5")
        assert code == 3

    def test_zero_vector_exit_two(self, capsys):
        code, _, err = run(capsys, "transform", "--from", "cartesian",
                           "--to", "spherical", "--point", "0,0,0")
        assert code == 2
        assert "zero vector" in err


def test_console_entry_point():
    import subprocess
    import sys
    proc = subprocess.run(
        [sys.executable, "-m", "radarbias", "gains", "--rho", "2",
         "--alpha", "0.2"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "0.04385" in proc.stdout
