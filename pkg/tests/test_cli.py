import csv
import json
import math

import pytest

from sqcc import gaussian as gc
from sqcc.baseline import ChannelModel, ProtocolConfig
from sqcc.cli import main
from sqcc.optimize import SearchGrid, evaluate


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


SWEEP = {"command": "sweep", "variants": ["scissor"], "alphas": [0.12], "loss_db": [30, 40],
         "grid": {"n_V": 8, "n_g": 9, "max_iter": 20}}


def test_sweep_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", write(tmp_path, SWEEP), "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    rows = read_csv(out)
    assert list(rows[0]) == ["loss_db", "alpha", "variant", "V_opt", "g_opt", "t_opt", "key_rate", "ber", "g2T",
                             "T_eff", "plob"]
    assert len(rows) == 2
    # the file value is the library value, unchanged
    r = rows[1]
    rep = evaluate("scissor", ProtocolConfig(2.0, 0.12, 0.0, 1e-6, 0.95), ChannelModel.from_loss_db(40, 0.03),
                   float(r["V_opt"]), float(r["g_opt"]))
    assert float(r["key_rate"]) == rep.key_rate


def test_sweep_json(tmp_path):
    out = tmp_path / "s.json"
    assert main(["sweep", "--config", write(tmp_path, SWEEP), "--out", str(out), "--format", "json"]) == 0
    recs = json.loads(out.read_text())
    assert recs[0]["variant"] == "scissor" and recs[0]["t_opt"] == 1.0


def test_empty_loss_grid(tmp_path):
    cfg = dict(SWEEP, loss_db={"start": 10, "stop": 0, "step": 5})
    assert main(["sweep", "--config", write(tmp_path, cfg)]) == 2


def test_unknown_key_rejected(tmp_path):
    assert main(["sweep", "--config", write(tmp_path, dict(SWEEP, bogus=1))]) == 2


def test_bad_grid_rejected(tmp_path):
    assert main(["sweep", "--config", write(tmp_path, dict(SWEEP, grid={"V_min": 5, "V_max": 2}))]) == 2


def test_missing_config_file(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == 2


def test_unknown_suite(tmp_path):
    assert main(["oracle-check", "--config", write(tmp_path, {"suite": "nope"})]) == 2


def test_failed_point_exit_3(tmp_path):
    cfg = {"variants": ["ideal"], "alphas": [0], "loss_db": [0],
           "grid": {"n_V": 3, "n_g": 3, "g_min": 1000, "g_max": 10000, "max_iter": 0}}
    assert main(["sweep", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o.csv")]) == 3


def test_photon_budget_single_cell(tmp_path):
    cfg = {"loss_db": 5, "k0": [0.05], "ec0": [0.5 - 1e-9], "grid": {"n_alpha": 21, "n_V": 12}}
    out = tmp_path / "p.csv"
    assert main(["photon-budget", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 1
    assert list(rows[0]) == ["k0", "ec0", "nbar_min", "alpha_opt", "V_opt", "feasible", "regime"]
    assert rows[0]["feasible"] == "true"


def test_oracle_gaussian(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["oracle-check", "--config", write(tmp_path, {"suite": "gaussian-core", "points": 50}),
                 "--out", str(out)]) == 0
    assert read_csv(out)[0]["passed"] == "true"


def test_oracle_violation_exit_4(tmp_path, monkeypatch):
    from sqcc import verify
    monkeypatch.setattr(verify.gc, "symplectic_eigenvalues", lambda cov: (1.0, 1.0))
    assert main(["oracle-check", "--config", write(tmp_path, {"suite": "gaussian-core", "points": 20})]) == 4


def test_bounds(tmp_path):
    cfg = {"loss_db": {"start": 0, "stop": 60, "step": 10}, "n_mode": [1e6]}
    out = tmp_path / "b.csv"
    assert main(["bounds", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    rows = read_csv(out)
    first = [r for r in rows if r["loss_db"] == "0"]
    assert all(r["in_domain"] == "false" for r in first)
    plob = [float(r["plob"]) for r in rows if r["in_domain"] == "true" and r["n_mode"] == "inf"]
    assert all(a > b for a, b in zip(plob, plob[1:]))
    t3 = [r for r in rows if r["n_mode"] == "1000000"]
    assert float(t3[1]["takeoka"]) == gc.takeoka_bound(0.1, 1e6)


def test_bad_threads(tmp_path):
    assert main(["bounds", "--config", write(tmp_path, {"loss_db": [3]}), "--threads", "0"]) == 2
