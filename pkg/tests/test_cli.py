import json
import math

import numpy as np
import pytest

import dsmimo.cli as cli
from dsmimo import presets, solve_fundamental
from dsmimo.cli import (
    ExperimentConfig,
    load_config,
    main,
    run_experiment,
    write_csv,
)
from dsmimo.errors import ConfigError, NonConvergenceError

KEYHOLE_CFG = {
    "channel": {
        "N": 4,
        "rho": 1.0,
        "users": [
            {"n": 4, "Ns": 1, "P": 1.0,
             "R": {"kind": "identity"},
             "S": {"kind": "identity"},
             "T": {"kind": "identity"},
             "Q": {"kind": "identity"}}
            for _ in range(3)
        ],
    },
    "experiment": {
        "snr_db": {"start": 0, "stop": 10, "step": 10},
        "trials": 40,
        "master_seed": 3,
        "modes": ["mi", "sumrate"],
    },
}

MAC_USER = {
    "n": 3, "Ns": 11, "P": 0.3333333333333333,
    "R": {"kind": "g", "phi": math.pi / 4, "d": 0.25},
    "S": {"kind": "g", "phi": math.pi / 8, "d": 50.0},
    "T": {"kind": "g", "phi": math.pi / 4, "d": 0.25},
    "Q": {"kind": "uniform"},
}


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestLoadConfig:
    def test_keyhole_preset_round_trip(self, tmp_path):
        spec, experiment = load_config(write_cfg(tmp_path, KEYHOLE_CFG))
        assert spec.K == 3 and spec.N == 4 and spec.rho == 1.0
        ref = presets.multi_keyhole(K=3, N=4, rho=1.0)
        a = solve_fundamental(spec)
        b = solve_fundamental(ref)
        assert np.allclose(a.g, b.g, atol=1e-12)
        assert experiment.trials == 40
        assert np.array_equal(experiment.snr_db, [0.0, 10.0])

    def test_mac_preset_matches_builder(self, tmp_path):
        doc = {"channel": {"N": 4, "users": []}}
        for phi in (math.pi / 4, math.pi / 2, math.pi):
            u = json.loads(json.dumps(MAC_USER))
            u["R"]["phi"] = phi
            u["T"]["phi"] = phi
            u["P"] = 1.0 / 3.0
            doc["channel"]["users"].append(u)
        spec, _ = load_config(write_cfg(tmp_path, doc))
        ref = presets.correlated_mac()
        for a, b in zip(spec.users, ref.users):
            assert np.max(np.abs(a.R - b.R)) < 1e-15
            assert np.max(np.abs(a.T - b.T)) < 1e-15
            assert np.allclose(a.s, b.s, atol=1e-12)
            assert np.max(np.abs(a.Q - b.Q)) < 1e-12

    def test_matrix_kinds(self, tmp_path):
        doc = {"channel": {"N": 2, "users": [{
            "n": 2, "Ns": 2,
            "R": {"kind": "dense", "re": [[1.0, 0.1], [0.1, 1.0]],
                  "im": [[0.0, 0.2], [-0.2, 0.0]]},
            "S": {"kind": "diag", "values": [0.5, 1.5]},
            "T": {"kind": "scaled_identity", "scale": 2.0},
        }]}}
        spec, experiment = load_config(write_cfg(tmp_path, doc))
        u = spec.users[0]
        assert u.R[0, 1] == pytest.approx(0.1 + 0.2j)
        assert np.array_equal(u.s, [0.5, 1.5])
        assert u.T[0, 0] == 2.0
        assert np.array_equal(u.Q, np.eye(2))  # no P: defaults to identity
        assert experiment is None

    def test_negative_phi_rejected(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        doc["channel"]["users"][0]["R"] = {"kind": "g", "phi": -0.5,
                                           "d": 0.25}
        with pytest.raises(ConfigError, match=r"users\[0\].R.phi"):
            load_config(write_cfg(tmp_path, doc))

    def test_missing_field_has_path(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        del doc["channel"]["users"][1]["Ns"]
        with pytest.raises(ConfigError, match=r"users\[1\].Ns"):
            load_config(write_cfg(tmp_path, doc))

    def test_json_syntax_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "channel": [,]\n}', encoding="utf-8")
        with pytest.raises(ConfigError, match="line 2"):
            load_config(str(path))

    def test_budget_violation_rejected(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        doc["channel"]["users"][0]["P"] = 0.25
        doc["channel"]["users"][0]["Q"] = {"kind": "scaled_identity",
                                           "scale": 1.0}
        with pytest.raises(ConfigError, match="budget"):
            load_config(write_cfg(tmp_path, doc))

    def test_empty_grid_rejected(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        doc["experiment"]["snr_db"] = []
        with pytest.raises(ConfigError, match="empty"):
            load_config(write_cfg(tmp_path, doc))

    def test_bad_step_rejected(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        doc["experiment"]["snr_db"] = {"start": 0, "stop": 10, "step": 0}
        with pytest.raises(ConfigError, match="step"):
            load_config(write_cfg(tmp_path, doc))

    def test_channel_file_indirection(self, tmp_path):
        chan_path = tmp_path / "chan.json"
        chan_path.write_text(json.dumps(KEYHOLE_CFG["channel"]),
                             encoding="utf-8")
        doc = {"channel_file": str(chan_path)}
        spec, _ = load_config(write_cfg(tmp_path, doc))
        assert spec.K == 3

    def test_unknown_mode_rejected(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        doc["experiment"]["modes"] = ["mi", "frobnicate"]
        with pytest.raises(ConfigError, match="frobnicate"):
            load_config(write_cfg(tmp_path, doc))


class TestRunExperiment:
    def test_column_set_and_rho_convention(self, tmp_path):
        spec, experiment = load_config(write_cfg(tmp_path, KEYHOLE_CFG))
        columns, rows = run_experiment(spec, experiment)
        assert columns == ["snr_db", "rho", "mi_det", "mi_mc_mean",
                           "mi_mc_stderr", "sumrate_det", "sumrate_mc_mean",
                           "sumrate_mc_stderr", "fp_iterations"]
        assert len(rows) == 2
        for row in rows:
            snr_db, rho = row[0], row[1]
            assert rho == 10.0 ** (-snr_db / 10.0)

    def test_csv_byte_identical(self, tmp_path):
        spec, experiment = load_config(write_cfg(tmp_path, KEYHOLE_CFG))
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(out1, *run_experiment(spec, experiment))
        write_csv(out2, *run_experiment(spec, experiment))
        assert out1.read_bytes() == out2.read_bytes()
        assert b"\r\n" in out1.read_bytes()  # RFC 4180 line endings

    def test_bits_flag_scales_rates(self, tmp_path):
        spec, experiment = load_config(write_cfg(tmp_path, KEYHOLE_CFG))
        cols, rows_nats = run_experiment(spec, experiment)
        experiment.bits = True
        _, rows_bits = run_experiment(spec, experiment)
        i_mi = cols.index("mi_det")
        i_rho = cols.index("rho")
        i_it = cols.index("fp_iterations")
        assert rows_bits[0][i_mi] == pytest.approx(
            rows_nats[0][i_mi] / math.log(2.0), rel=1e-15)
        assert rows_bits[0][i_rho] == rows_nats[0][i_rho]
        assert rows_bits[0][i_it] == rows_nats[0][i_it]

    def test_waterfill_and_oracle_modes(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        doc["experiment"]["modes"] = ["mi", "waterfill", "oracle"]
        doc["experiment"]["trials"] = 0
        doc["experiment"]["snr_db"] = [5.0]
        spec, experiment = load_config(write_cfg(tmp_path, doc))
        columns, rows = run_experiment(spec, experiment)
        assert "mi_det_waterfill" in columns
        assert "wf_p_u0s0" in columns
        assert "kron_gap_e_max" in columns
        assert "mi_mc_mean" not in columns
        row = dict(zip(columns, rows[0]))
        assert row["mi_det_waterfill"] >= row["mi_det_uniform"] - 1e-12

    def test_sinr_mode_columns(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        doc["experiment"]["modes"] = ["sinr"]
        doc["experiment"]["trials"] = 10
        doc["experiment"]["snr_db"] = [0.0]
        spec, experiment = load_config(write_cfg(tmp_path, doc))
        columns, rows = run_experiment(spec, experiment)
        assert "sinr_det_u2s3" in columns
        assert "sinr_mc_mean_u0s0" in columns
        row = dict(zip(columns, rows[0]))
        assert row["sinr_det_u0s0"] > 0.0

    def test_timing_column_optional(self, tmp_path):
        spec, experiment = load_config(write_cfg(tmp_path, KEYHOLE_CFG))
        experiment.timing = True
        columns, rows = run_experiment(spec, experiment)
        assert columns[-1] == "wall_time_s"
        assert rows[0][-1] > 0.0

    def test_waterfill_without_budget_rejected(self, tmp_path):
        doc = json.loads(json.dumps(KEYHOLE_CFG))
        for u in doc["channel"]["users"]:
            del u["P"]
        doc["experiment"]["modes"] = ["waterfill"]
        spec, experiment = load_config(write_cfg(tmp_path, doc))
        with pytest.raises(ConfigError, match="budget"):
            run_experiment(spec, experiment)

    def test_solver_error_identifies_point(self, tmp_path, monkeypatch):
        spec, experiment = load_config(write_cfg(tmp_path, KEYHOLE_CFG))

        def boom(*a, **k):
            raise NonConvergenceError("stuck", last=None, trace=[1.0])

        monkeypatch.setattr(cli, "solve_fundamental", boom)
        with pytest.raises(NonConvergenceError, match="snr_db=0"):
            run_experiment(spec, experiment)


class TestMainEntry:
    def test_experiment_end_to_end(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, KEYHOLE_CFG)
        out = str(tmp_path / "res.csv")
        assert main(["experiment", "--config", cfg, "--out", out,
                     "--trials", "10"]) == 0
        text = (tmp_path / "res.csv").read_text()
        assert text.startswith("snr_db,rho,mi_det")

    def test_config_error_exit_code(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        assert main(["experiment", "--config", str(path),
                     "--out", str(tmp_path / "x.csv")]) == 2

    def test_missing_experiment_section(self, tmp_path):
        doc = {"channel": KEYHOLE_CFG["channel"]}
        cfg = write_cfg(tmp_path, doc)
        assert main(["experiment", "--config", cfg,
                     "--out", str(tmp_path / "x.csv")]) == 2

    def test_non_convergence_exit_code(self, tmp_path, monkeypatch):
        cfg = write_cfg(tmp_path, KEYHOLE_CFG)

        def boom(*a, **k):
            raise NonConvergenceError("stuck")

        monkeypatch.setattr(cli, "solve_fundamental", boom)
        assert main(["solve", "--config", cfg]) == 3

    def test_point_commands(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, KEYHOLE_CFG)
        assert main(["solve", "--config", cfg]) == 0
        assert "gbar" in capsys.readouterr().out
        assert main(["mi", "--config", cfg, "--snr-db", "10",
                     "--trials", "20"]) == 0
        out = capsys.readouterr().out
        assert "mi_det" in out and "mi_mc" in out
        assert main(["sinr", "--config", cfg]) == 0
        assert "sinr_det" in capsys.readouterr().out
        assert main(["sumrate", "--config", cfg, "--bits"]) == 0
        assert "bits/s/Hz" in capsys.readouterr().out
        assert main(["waterfill", "--config", cfg]) == 0
        assert "waterfill" in capsys.readouterr().out
        assert main(["oracle", "--config", cfg, "--seed", "4"]) == 0
        assert "max|e - g|" in capsys.readouterr().out


class TestExperimentConfig:
    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(snr_db=[], trials=0, master_seed=0, modes=["mi"])

    def test_negative_trials(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(snr_db=[0.0], trials=-1, master_seed=0,
                             modes=["mi"])
