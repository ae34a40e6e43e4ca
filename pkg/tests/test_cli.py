import json

import numpy as np
import pytest

from ulakit.cli import main


def run(tmp_path, command, config, out="out", extra=()):
    cfg = tmp_path / f"{command.replace('-', '_')}_cfg.json"
    cfg.write_text(json.dumps(config))
    out_dir = tmp_path / out
    return main([command, "--config", str(cfg), "--out", str(out_dir), *extra]), out_dir


SAMPLE_CFG = {
    "model": {"name": "ou", "params": {"dim": 1}},
    "init": {"mean": [0.0], "sigma0": 1.0},
    "eta": 0.1,
    "horizon": 1.0,
    "chains": 1000,
    "seed": 7,
}


# --- sample -------------------------------------------------------------------


def test_sample_rerun_is_byte_identical(tmp_path):
    code1, out1 = run(tmp_path, "sample", SAMPLE_CFG, out="a")
    code2, out2 = run(tmp_path, "sample", SAMPLE_CFG, out="b")
    assert code1 == 0 and code2 == 0
    assert (out1 / "ensemble.csv").read_bytes() == (out2 / "ensemble.csv").read_bytes()
    assert (out1 / "ensemble.json").read_bytes() == (out2 / "ensemble.json").read_bytes()


def test_sample_rerun_from_recorded_config_is_byte_identical(tmp_path):
    code, out1 = run(tmp_path, "sample", SAMPLE_CFG, out="a")
    assert code == 0
    recorded = json.loads((out1 / "sample_config.json").read_text())
    code2, out2 = run(tmp_path, "sample", recorded, out="b")
    assert code2 == 0
    assert (out1 / "ensemble.csv").read_bytes() == (out2 / "ensemble.csv").read_bytes()
    assert (out1 / "ensemble.json").read_bytes() == (out2 / "ensemble.json").read_bytes()


def test_sample_window_refusal_is_config_error(tmp_path):
    cfg = dict(SAMPLE_CFG, eta=0.6)
    code, _ = run(tmp_path, "sample", cfg)
    assert code == 2


def test_sample_seed_flag_overrides_config(tmp_path):
    code1, out1 = run(tmp_path, "sample", SAMPLE_CFG, out="a", extra=("--seed", "9"))
    code2, out2 = run(tmp_path, "sample", dict(SAMPLE_CFG, seed=9), out="b")
    assert code1 == code2 == 0
    assert (out1 / "ensemble.csv").read_bytes() == (out2 / "ensemble.csv").read_bytes()


def test_sample_gauss_mix_smoke(tmp_path):
    cfg = {
        "model": {"name": "gauss-mix", "params": {"dim": 2}},
        "init": {"mean": [0.0, 0.0], "sigma0": 1.0},
        "eta": 0.1,
        "horizon": 1.0,
        "chains": 10_000,
        "seed": 3,
    }
    code, out = run(tmp_path, "sample", cfg)
    assert code == 0
    data = np.loadtxt(out / "ensemble.csv", delimiter=",", skiprows=1)
    assert np.all(np.isfinite(data))
    assert data.shape == (10_000, 4)


def test_sample_divergence_reports_failure(tmp_path):
    cfg = {
        "model": {"name": "expansive", "params": {"dim": 1}},
        "init": {"mean": [0.0], "sigma0": 1.0},
        "eta": 0.05,
        "horizon": 50.0,
        "chains": 100,
        "seed": 5,
    }
    code, out = run(tmp_path, "sample", cfg)
    assert code == 1
    report = json.loads((out / "sample.json").read_text())
    assert not report["all_pass"]
    assert "divergence" in report["claims"][0]["detail"]


def test_sample_snapshots_written(tmp_path):
    cfg = dict(SAMPLE_CFG, snapshot_times=[0.5, 1.0])
    code, out = run(tmp_path, "sample", cfg)
    assert code == 0
    sidecar = json.loads((out / "ensemble.json").read_text())
    assert [s["time"] for s in sidecar["snapshots"]] == [0.5, 1.0]
    assert (out / "snapshot_000.csv").exists()


# --- verify -------------------------------------------------------------------


def test_verify_ou_all_pass(tmp_path):
    cfg = {"model": {"name": "ou", "params": {"dim": 1}}, "init": {"mean": [0.0], "sigma0": 1.0}, "seed": 1}
    code, out = run(tmp_path, "verify", cfg)
    assert code == 0
    rep = json.loads((out / "verify.json").read_text())
    assert all(sec["pass"] for sec in rep["assumptions"].values())
    diss = rep["assumptions"]["dissipativity"]
    assert diss["witnessed_mu"] == pytest.approx(1.0)
    assert diss["witnessed_beta"] == pytest.approx(0.0, abs=1e-12)


def test_verify_expansive_fails_dissipativity_with_witness(tmp_path):
    cfg = {"model": {"name": "expansive", "params": {"dim": 1}}, "init": {"mean": [0.0], "sigma0": 1.0}, "seed": 1}
    code, out = run(tmp_path, "verify", cfg)
    assert code == 1
    rep = json.loads((out / "verify.json").read_text())
    diss = rep["assumptions"]["dissipativity"]
    assert not diss["pass"]
    assert "witness_point" in diss and diss["witness_value"] > 0
    assert rep["assumptions"]["lipschitz_drift"]["pass"]


def test_verify_double_well_witnessed_constants(tmp_path):
    cfg = {"model": {"name": "double-well", "params": {"dim": 1}}, "init": {"mean": [0.0], "sigma0": 1.0}, "seed": 1}
    code, out = run(tmp_path, "verify", cfg)
    assert code == 0
    diss = json.loads((out / "verify.json").read_text())["assumptions"]["dissipativity"]
    assert diss["witnessed_mu"] == pytest.approx(0.5)
    assert diss["witnessed_beta"] == pytest.approx(0.5, abs=1e-9)


# --- rate-scan ----------------------------------------------------------------


def test_rate_scan_zero_drift_exact_zero(tmp_path):
    cfg = {
        "model": {"name": "zero", "params": {"dim": 1}},
        "init": {"mean": [0.0], "sigma0": 1.0},
        "horizon": 2.0,
        "eta_grid": [0.5, 0.25, 0.125],
        "exact": True,
        "girsanov_chains": 0,
        "seed": 1,
    }
    code, out = run(tmp_path, "rate-scan", cfg)
    assert code == 0
    rows = (out / "rate_scan.csv").read_text().strip().split("\n")[1:]
    assert all(float(r.split(",")[1]) == 0.0 for r in rows)
    rep = json.loads((out / "rate_scan.json").read_text())
    assert rep["fit_exact"] is None
    assert rep["all_pass"]


def test_rate_scan_ou_small(tmp_path):
    cfg = {
        "model": {"name": "ou", "params": {"dim": 1}},
        "init": {"mean": [1.0], "sigma0": 1.0},
        "horizon": 2.0,
        "eta_grid": [0.2, 0.1, 0.05, 0.025],
        "exact": True,
        "girsanov_chains": 5000,
        "quad_points_per_step": 4,
        "seed": 123,
    }
    code, out = run(tmp_path, "rate-scan", cfg)
    assert code == 0
    rep = json.loads((out / "rate_scan.json").read_text())
    assert 1.85 <= rep["fit_exact"]["slope"] <= 2.15
    assert 0.85 <= rep["fit_girsanov"]["slope"] <= 1.15
    assert rep["all_pass"]
    assert "c0" in rep and "config_hash" in rep and "master_seed" in rep
    # exact-moment serialization rides along on the exact path
    assert "em_moments" in rep["records"][0]


def test_rate_scan_girsanov_only_for_nonlinear_model(tmp_path):
    cfg = {
        "model": {"name": "gauss-mix", "params": {"dim": 1}},
        "init": {"mean": [0.0], "sigma0": 1.0},
        "horizon": 1.0,
        "eta_grid": [0.2, 0.1, 0.05, 0.025],
        "exact": False,
        "girsanov_chains": 2000,
        "seed": 2,
        "bands": {"girsanov_slope": [0.5, 1.5]},
    }
    code, out = run(tmp_path, "rate-scan", cfg)
    assert code == 0
    rep = json.loads((out / "rate_scan.json").read_text())
    assert rep["fit_exact"] is None
    assert rep["fit_girsanov"] is not None
    rows = (out / "rate_scan.csv").read_text().strip().split("\n")[1:]
    assert all(r.split(",")[1] == "" for r in rows)


def test_rate_scan_nonlinear_model_with_exact_is_config_error(tmp_path):
    cfg = {
        "model": {"name": "double-well", "params": {"dim": 1}},
        "init": {"mean": [0.0], "sigma0": 1.0},
        "horizon": 1.0,
        "eta_grid": [0.002, 0.001],
        "exact": True,
        "seed": 1,
    }
    code, _ = run(tmp_path, "rate-scan", cfg)
    assert code == 2


# --- mixing-scan ----------------------------------------------------------------


MIX_CFG = {
    "target": {"mean": [0.0], "cov": [[0.5]]},
    "rho": 0.5,
    "metric": "KL",
    "eps_grid": [0.1, 0.03, 0.01, 0.003],
    "init": {"mean": [6.0], "sigma0": 1.0},
    "seed": 1,
}


def test_mixing_scan_kl_slope(tmp_path):
    code, out = run(tmp_path, "mixing-scan", MIX_CFG)
    assert code == 0
    rep = json.loads((out / "mixing_scan.json").read_text())
    assert -0.75 <= rep["fit"]["slope"] <= -0.40
    ns = [r["n_measured"] for r in rep["records"]]
    assert ns == sorted(ns)


def test_mixing_scan_already_mixed_gives_zero(tmp_path):
    cfg = dict(MIX_CFG, eps_grid=[1000.0], init={"mean": [0.1], "sigma0": 1.0})
    code, out = run(tmp_path, "mixing-scan", cfg)
    assert code == 0
    rep = json.loads((out / "mixing_scan.json").read_text())
    assert rep["records"][0]["n_measured"] == 0


def test_mixing_scan_w2_metric(tmp_path):
    cfg = dict(MIX_CFG, metric="W2", eps_grid=[0.3, 0.1, 0.03, 0.01])
    code, out = run(tmp_path, "mixing-scan", cfg)
    assert code == 0
    rep = json.loads((out / "mixing_scan.json").read_text())
    assert -1.3 <= rep["fit"]["slope"] <= -0.8


def test_mixing_scan_tv_metric(tmp_path):
    cfg = dict(MIX_CFG, metric="TV", eps_grid=[0.3, 0.1, 0.03, 0.01])
    code, out = run(tmp_path, "mixing-scan", cfg)
    assert code == 0
    rep = json.loads((out / "mixing_scan.json").read_text())
    ns = [r["n_measured"] for r in rep["records"]]
    assert ns == sorted(ns) and ns[-1] > ns[0]
    assert -1.3 <= rep["fit"]["slope"] <= -0.8


def test_mixing_scan_missing_rho_is_config_error(tmp_path):
    cfg = {k: v for k, v in MIX_CFG.items() if k != "rho"}
    code, _ = run(tmp_path, "mixing-scan", cfg)
    assert code == 2


def test_mixing_scan_2d_target(tmp_path):
    cfg = {
        "target": {"mean": [0.0, 0.5], "cov": [[0.5, 0.1], [0.1, 0.8]]},
        "rho": 0.5,
        "metric": "KL",
        "eps_grid": [0.1, 0.03, 0.01],
        "init": {"mean": [4.0, -4.0], "sigma0": 1.0},
        "seed": 1,
    }
    code, out = run(tmp_path, "mixing-scan", cfg)
    assert code == 0
    rep = json.loads((out / "mixing_scan.json").read_text())
    ns = [r["n_measured"] for r in rep["records"]]
    assert ns == sorted(ns) and ns[-1] > ns[0] > 0


def test_mixing_scan_tv_rejected_beyond_1d(tmp_path):
    cfg = {
        "target": {"mean": [0.0, 0.0], "cov": [[0.5, 0.0], [0.0, 0.5]]},
        "rho": 0.5,
        "metric": "TV",
        "eps_grid": [0.1],
        "init": {"mean": [1.0, 1.0], "sigma0": 1.0},
        "seed": 1,
    }
    code, _ = run(tmp_path, "mixing-scan", cfg)
    assert code == 2


# --- estimate -------------------------------------------------------------------


def test_estimate_roundtrip_through_csv(tmp_path):
    code, out = run(tmp_path, "sample", dict(SAMPLE_CFG, chains=5000), out="ens_a")
    assert code == 0
    code, out_b = run(tmp_path, "sample", dict(SAMPLE_CFG, chains=5000, seed=8), out="ens_b")
    assert code == 0
    est_cfg = {
        "estimator": "knn_kl",
        "inputs": {"p": str(out / "ensemble.csv"), "q": str(out_b / "ensemble.csv")},
        "params": {"k": 5},
        "seed": 0,
    }
    code, est_out = run(tmp_path, "estimate", est_cfg, out="est")
    assert code == 0
    rep = json.loads((est_out / "estimate.json").read_text())
    assert rep["estimator"] == "knn_kl"
    assert abs(rep["value"]) < 0.25


def test_estimate_moment(tmp_path):
    code, out = run(tmp_path, "sample", dict(SAMPLE_CFG, chains=5000), out="ens")
    assert code == 0
    est_cfg = {
        "estimator": "moment_estimate",
        "inputs": {"samples": str(out / "ensemble.csv")},
        "params": {"p": 2},
        "seed": 0,
    }
    code, est_out = run(tmp_path, "estimate", est_cfg, out="est")
    assert code == 0
    rep = json.loads((est_out / "estimate.json").read_text())
    assert rep["value"] == pytest.approx(0.62, abs=0.1)


def test_estimate_w2_empirical(tmp_path):
    code, out_a = run(tmp_path, "sample", dict(SAMPLE_CFG, chains=2000), out="wa")
    assert code == 0
    code, out_b = run(tmp_path, "sample", dict(SAMPLE_CFG, chains=2000, seed=11), out="wb")
    assert code == 0
    est_cfg = {
        "estimator": "w2_empirical_1d",
        "inputs": {"p": str(out_a / "ensemble.csv"), "q": str(out_b / "ensemble.csv")},
        "seed": 0,
    }
    code, est_out = run(tmp_path, "estimate", est_cfg, out="est_w2")
    assert code == 0
    rep = json.loads((est_out / "estimate.json").read_text())
    assert 0.0 <= rep["value"] < 0.2


def test_estimate_girsanov_runs_simulation(tmp_path):
    est_cfg = {
        "estimator": "girsanov_pathwise_kl",
        "model": {"name": "ou", "params": {"dim": 1}},
        "init": {"mean": [1.0], "sigma0": 1.0},
        "eta": 0.1,
        "horizon": 1.0,
        "chains": 2000,
        "seed": 21,
        "inputs": {},
    }
    code, est_out = run(tmp_path, "estimate", est_cfg, out="est_g")
    assert code == 0
    rep = json.loads((est_out / "estimate.json").read_text())
    assert rep["value"] > 0


def test_estimate_unknown_estimator(tmp_path):
    code, _ = run(tmp_path, "estimate", {"estimator": "mmd", "inputs": {}})
    assert code == 2


# --- bound-eval -----------------------------------------------------------------


ALL_ONES_CONSTANTS = {
    "L1": 1.0, "L2": 1.0, "A0": 1.0, "sigma0": 1.0,
    "h0": 1.0, "entropy0": 1.0, "mu": 1.0, "beta": 1.0, "f0": 1.0,
}


def test_bound_eval_all_ones(tmp_path):
    consts = tmp_path / "constants.json"
    consts.write_text(json.dumps(ALL_ONES_CONSTANTS))
    out = tmp_path / "out"
    code = main([
        "bound-eval", "--theorem", "1", "--eta", "0.1", "--horizon", "1.0",
        "--dim", "1", "--constants", str(consts), "--out", str(out),
    ])
    assert code == 0
    rep = json.loads((out / "bound_eval.json").read_text())
    assert rep["value"] == pytest.approx(0.1007, abs=1e-12)
    assert rep["terms"]["order2_term"] == pytest.approx(0.1, abs=1e-12)
    assert rep["terms"]["order4_term"] == pytest.approx(0.0007, abs=1e-12)
    assert rep["c0"] == 1.0 and rep["c1"] == 1.0


def test_bound_eval_missing_f0_names_it(tmp_path, capsys):
    consts = tmp_path / "constants.json"
    consts.write_text(json.dumps({k: v for k, v in ALL_ONES_CONSTANTS.items() if k != "f0"}))
    out = tmp_path / "out"
    code = main([
        "bound-eval", "--theorem", "2", "--eta", "0.1",
        "--constants", str(consts), "--out", str(out),
    ])
    assert code == 2
    assert "f0" in capsys.readouterr().err


def test_bound_eval_sweep_slope(tmp_path):
    consts = tmp_path / "constants.json"
    consts.write_text(json.dumps(ALL_ONES_CONSTANTS))
    cfg = {"theorem": 1, "eta_grid": [1e-4, 5e-5, 2.5e-5], "horizon": 1.0, "dim": 1,
           "constants": str(consts)}
    code, out = run(tmp_path, "bound-eval", cfg)
    assert code == 0
    rep = json.loads((out / "bound_eval.json").read_text())
    assert rep["fit"]["slope"] == pytest.approx(2.0, abs=1e-6)


def test_bound_eval_inline_constants_and_theorem_2(tmp_path):
    cfg = {"theorem": 2, "eta": 0.1, "horizon": 1.0, "dim": 1,
           "constants": ALL_ONES_CONSTANTS}
    code, out = run(tmp_path, "bound-eval", cfg)
    assert code == 0
    rep = json.loads((out / "bound_eval.json").read_text())
    assert rep["value"] == pytest.approx(0.1207, abs=1e-12)


def test_bound_eval_window_rejection(tmp_path):
    consts = tmp_path / "constants.json"
    consts.write_text(json.dumps(ALL_ONES_CONSTANTS))
    out = tmp_path / "out"
    code = main([
        "bound-eval", "--theorem", "1", "--eta", "0.5",
        "--constants", str(consts), "--out", str(out),
    ])
    assert code == 2


# --- misc -----------------------------------------------------------------------


def test_missing_config_file_is_config_error(tmp_path):
    code = main(["sample", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert code == 2


def test_threads_flag_accepted_and_ignored(tmp_path):
    code1, out1 = run(tmp_path, "sample", SAMPLE_CFG, out="a", extra=("--threads", "4"))
    code2, out2 = run(tmp_path, "sample", SAMPLE_CFG, out="b")
    assert code1 == code2 == 0
    assert (out1 / "ensemble.csv").read_bytes() == (out2 / "ensemble.csv").read_bytes()
