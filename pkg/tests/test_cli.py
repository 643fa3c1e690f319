import json

import numpy as np
import pytest

from corrls.cli import main
from corrls.data import read_matrix_csv


@pytest.fixture
def sim_config(tmp_path):
    cfg = {"n": 120, "p": 12, "s": 3, "noise_kind": "missing",
           "rho_range": [0.1, 0.3], "seed": 5}
    path = tmp_path / "sim.json"
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_then_fit(tmp_path, sim_config, capsys):
    data_csv = tmp_path / "data.csv"
    truth_csv = tmp_path / "beta.csv"
    assert main(["simulate", "--config", str(sim_config),
                 "--out", str(data_csv), "--truth", str(truth_csv)]) == 0
    beta0 = read_matrix_csv(truth_csv).ravel()
    coef_csv = tmp_path / "coef.csv"
    assert main(["fit", "--data", str(data_csv), "--noise", "missing",
                 "--method", "cs_post", "--tuning", "3",
                 "--radius", f"{1.1 * np.abs(beta0).sum()}",
                 "--out", str(coef_csv)]) == 0
    beta_hat = read_matrix_csv(coef_csv).ravel()
    out = capsys.readouterr().out
    assert "support (1-based):" in out
    assert np.linalg.norm(beta_hat - beta0) / np.linalg.norm(beta0) < 0.5


def test_fit_additive_with_ar1_sigma(tmp_path, capsys):
    cfg = {"n": 150, "p": 10, "s": 2, "noise_kind": "additive", "seed": 8}
    cfg_path = tmp_path / "sim.json"
    cfg_path.write_text(json.dumps(cfg))
    data_csv = tmp_path / "data.csv"
    main(["simulate", "--config", str(cfg_path), "--out", str(data_csv)])
    assert main(["fit", "--data", str(data_csv), "--noise", "additive",
                 "--sigma-w-ar1", "0.5", "0.25", "--method", "cs_post",
                 "--tuning", "4", "--radius", "20"]) == 0


def test_tune_writes_curve(tmp_path, sim_config):
    train_csv, test_csv = tmp_path / "train.csv", tmp_path / "test.csv"
    main(["simulate", "--config", str(sim_config), "--out", str(train_csv)])
    main(["simulate", "--config", str(sim_config), "--seed", "6",
          "--out", str(test_csv)])
    curve = tmp_path / "curve.csv"
    assert main(["tune", "--data", str(train_csv), "--test-data", str(test_csv),
                 "--noise", "missing", "--method", "cs_post",
                 "--radius", "15", "--out", str(curve)]) == 0
    lines = curve.read_text().splitlines()
    assert lines[0] == "value,loss" and len(lines) > 2


def test_precision_command(tmp_path):
    from corrls.data import write_dataset_csv
    from corrls.simulate import gen_graph_data, generate_band_precision

    theta, sigma = generate_band_precision(12, 1)
    data = gen_graph_data(sigma, 600, 1.0, (0.05, 0.3), seed=9)
    data_csv = tmp_path / "graph.csv"
    write_dataset_csv(data, data_csv)
    out_csv = tmp_path / "theta.csv"
    diag_csv = tmp_path / "diag.csv"
    assert main(["precision", "--data", str(data_csv), "--an", "4",
                 "--radius", "6", "--out", str(out_csv),
                 "--diagnostics", str(diag_csv)]) == 0
    theta_hat = read_matrix_csv(out_csv)
    assert theta_hat.shape == (12, 12)
    assert np.max(np.abs(theta_hat - theta_hat.T)) == 0.0
    assert diag_csv.read_text().splitlines()[0] == "column,support_size,d,fallback"


def test_experiment_determinism_across_workers(tmp_path):
    grid = {"n_values": [70], "p_values": [15], "s_values": [2],
            "noise_kind": "missing", "replicates": 2, "base_seed": 12,
            "rho_range": [0.1, 0.3], "solver_max_iters": 1500}
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps(grid))
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    assert main(["experiment", "--config", str(cfg), "--out", str(out1),
                 "--workers", "1", "--no-timing"]) == 0
    assert main(["experiment", "--config", str(cfg), "--out", str(out2),
                 "--workers", "4", "--no-timing"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_experiment_save_coefs_sidecar(tmp_path):
    grid = {"n_values": [70], "p_values": [10], "s_values": [2],
            "noise_kind": "missing", "replicates": 1, "base_seed": 3,
            "rho_range": [0.1, 0.3], "solver_max_iters": 1500}
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps(grid))
    out = tmp_path / "res.csv"
    assert main(["experiment", "--config", str(cfg), "--out", str(out),
                 "--save-coefs", "--no-timing"]) == 0
    assert (tmp_path / "res.csv.coefs.csv").exists()
