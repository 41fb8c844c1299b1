"""Acceptance criteria 1-9.  Each test records one PASS/FAIL line, shown in the terminal summary."""
import csv
import math
import time
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from sqcc.baseline import ChannelModel, ProtocolConfig, sqcc_key_rate
from sqcc.cli import load_config, main
from sqcc.optimize import SearchGrid, SweepFixed, feasible_regions, optimize_point, parallel_photon_scan
from sqcc.baseline import PhotonGrid, QosTarget

CONFIGS = Path(__file__).resolve().parent.parent / "configs" / "acceptance"
RUNS = {
    "c2": ("sweep", "c2_ideal.json"),
    "c3": ("sweep", "c3_scissor.json"),
    "c4": ("sweep", "c4_scaling.json"),
    "c5": ("sweep", "c5_cutoff.json"),
    "c6": ("photon-budget", "c6_photon_budget.json"),
    "c7_scissor": ("oracle-check", "oracle_scissor.json"),
    "c7_ideal": ("oracle-check", "oracle_ideal.json"),
    "c7_gaussian": ("oracle-check", "oracle_gaussian.json"),
    "c8_eps0": ("sweep", "c8_dual_eps0.json"),
    "c8_eps003": ("sweep", "c8_dual_eps003.json"),
}
THREADS = 8


def report(n, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


class Run:
    def __init__(self, outdir, key, threads):
        cmd, name = RUNS[key]
        self.path = outdir / f"{key}.csv"
        t0 = time.perf_counter()
        self.code = main([cmd, "--config", str(CONFIGS / name), "--out", str(self.path), "--threads",
                          str(threads)])
        self.seconds = time.perf_counter() - t0

    def rows(self):
        with open(self.path, newline="") as fh:
            return list(csv.DictReader(fh))


@pytest.fixture(scope="session")
def single(tmp_path_factory):
    out = tmp_path_factory.mktemp("threads1")
    cache = {}

    def get(key):
        if key not in cache:
            cache[key] = Run(out, key, 1)
        return cache[key]
    return get


def records(run):
    out = []
    for r in run.rows():
        d = {k: (v if k == "variant" else float(v)) for k, v in r.items()}
        out.append(d)
    return out


def test_criterion_1_closed_form():
    t0 = time.perf_counter()
    dev = 0.0
    for V in (1.5, 2, 3, 5, 10):
        rep = sqcc_key_rate(ProtocolConfig(V, 0.0, 0.0, 0.0, 1.0), ChannelModel(1.0, 0.0))
        dev = max(dev, abs(rep.key_rate - math.log2((V + 1) / 2)))
    dt = time.perf_counter() - t0
    report(1, dev < 1e-9 and dt < 1, f"max |K - log2((V+1)/2)| = {dev:.2e} (< 1e-9), {dt:.3f} s (< 1 s)")


def test_criterion_2_ideal_saturation(single):
    run = single("c2")
    recs = records(run)
    at60 = [r for r in recs if r["loss_db"] == 60][0]
    ecs = [r["ber"] for r in recs if r["loss_db"] >= 20]
    ok = (run.code == 0 and 658 <= at60["g_opt"] <= 804 and 0.51 <= at60["g2T"] <= 0.55
          and 0.29 <= at60["T_eff"] <= 0.33 and all(0.470 <= e <= 0.480 for e in ecs) and run.seconds < 60)
    report(2, ok, f"g*={at60['g_opt']:.1f} [658, 804], g2T={at60['g2T']:.4f} [0.51, 0.55], "
                  f"T_eff={at60['T_eff']:.4f} [0.29, 0.33], e_C in [{min(ecs):.4f}, {max(ecs):.4f}] "
                  f"vs [0.470, 0.480], {run.seconds:.1f} s (< 60 s)")


def test_criterion_3_scissor_saturation(single):
    run = single("c3")
    recs = {r["alpha"]: r for r in records(run)}
    a, b = recs[0.12], recs[0.24]
    ok = (run.code == 0 and 18.7 <= a["g_opt"] <= 25.3 and 2.5e-4 <= a["g2T"] <= 1e-3
          and 0.496 <= a["ber"] <= 0.5 and 0.494 <= b["ber"] <= 0.498 and run.seconds < 300)
    report(3, ok, f"g*={a['g_opt']:.2f} [18.7, 25.3], g2T={a['g2T']:.3e} [2.5e-4, 1e-3], "
                  f"e_C(0.12)={a['ber']:.5f} [0.496, 0.5], e_C(0.24)={b['ber']:.5f} [0.494, 0.498], "
                  f"{run.seconds:.1f} s (< 300 s)")


def test_criterion_4_scaling_law(single):
    run = single("c4")
    groups = defaultdict(list)
    below = True
    for r in records(run):
        groups[(r["variant"], r["alpha"])].append((r["loss_db"], r["key_rate"]))
        below &= r["key_rate"] <= r["plob"]
    slopes = {}
    for k, pts in groups.items():
        L, K = np.array(pts).T
        slopes[k] = np.polyfit(L, np.log10(K), 1)[0] if (K > 0).all() else math.nan
    ok = run.code == 0 and below and all(abs(s + 0.1) <= 0.005 for s in slopes.values())
    txt = ", ".join(f"{v}/{a:g}: {s:.4f}" for (v, a), s in sorted(slopes.items()))
    report(4, ok, f"slopes {txt} (target -0.1 +- 5%), K <= PLOB everywhere: {below}")


def test_criterion_5_large_alpha_cutoff(single):
    run = single("c5")
    recs = records(run)
    pos = [(r["loss_db"], r["key_rate"]) for r in recs if r["key_rate"] != 0]
    ok = run.code == 0 and not pos
    detail = "K = 0 at every loss" if not pos else (
        f"K > 0 at {len(pos)}/{len(recs)} losses, e.g. {pos[-1][1]:.3e} at {pos[-1][0]:g} dB")
    report(5, ok, f"scissor alpha=0.3 over 0-60 dB: {detail}")


def test_criterion_6_two_regimes(single):
    t0 = time.perf_counter()
    ch = ChannelModel.from_loss_db(5, 0.03)
    scan = parallel_photon_scan(ch, SweepFixed(0.03, 1e-6, 0.95, 0.0), PhotonGrid())
    regs = feasible_regions(scan, QosTarget(0.05, 0.5))
    run = single("c6")
    dt = time.perf_counter() - t0 + run.seconds
    low = [r for r in regs if r.ber_range[0] > 0.4 and r.min_photons < 10]
    high = [r for r in regs if r.ber_at_min < 1e-4 and r.min_photons > 50]
    regimes = {row["regime"] for row in run.rows()}
    ok = len(regs) == 2 and len(low) == 1 and len(high) == 1 and regimes == {"small-alpha", "large-alpha"} \
        and dt < 600
    desc = "; ".join(f"n_min={r.min_photons:.1f}, e_C@min={r.ber_at_min:.2e}, e_C range "
                     f"[{r.ber_range[0]:.2e}, {r.ber_range[1]:.2e}]" for r in regs)
    report(6, ok, f"K0=0.05 at 5 dB: {len(regs)} components ({desc}), {dt:.1f} s (< 600 s)")


def test_criterion_7_oracle_gates(single):
    runs = [single(k) for k in ("c7_scissor", "c7_ideal", "c7_gaussian")]
    rows = [r for run in runs for r in run.rows()]
    want = {"P_pattern1": 1e-6, "P_pattern2": 1e-6, "d2": 1e-6, "B": 1e-6, "mean": 1e-6, "covariance": 1e-6,
            "symplectic_eigenvalues": 1e-10}
    worst = {r["quantity"]: float(r["max_rel_dev"]) for r in rows}
    dt = sum(run.seconds for run in runs)
    ok = (all(run.code == 0 for run in runs) and all(r["passed"] == "true" for r in rows)
          and all(worst[q] < tol for q, tol in want.items()) and dt < 600)
    txt = ", ".join(f"{q}={worst[q]:.1e}" for q in want)
    report(7, ok, f"max relative deviations {txt}, {dt:.1f} s (< 600 s)")


def test_criterion_8_dual_ideal_limit(single):
    worst, msgs, ok = 0.0, [], True
    for key in ("c8_eps0", "c8_eps003"):
        run = single(key)
        cfg = load_config(CONFIGS / RUNS[key][1], "sweep")
        grid = SearchGrid(**cfg["grid"])
        eps = cfg["excess_noise"]
        recs = records(run)
        dual = {r["loss_db"]: r for r in recs if r["variant"] == "dual"}
        base = {r["loss_db"]: r for r in recs if r["variant"] == "baseline"}
        ok &= run.code == 0
        for L, d in sorted(dual.items()):
            ch = ChannelModel(d["t_opt"] * 10 ** (-L / 10), eps)
            ref = optimize_point("scissor", ProtocolConfig(grid.V_min, 0.0, 0.0, 0.0, cfg["reconciliation"]), ch,
                                 grid).key_rate
            rel = abs(d["key_rate"] - ref) / ref if ref > 0 else (0.0 if d["key_rate"] == 0 else math.inf)
            worst = max(worst, rel)
            ok &= rel <= 0.01 and d["ber"] < 1e-9
            if base[L]["key_rate"] == 0:
                ok &= d["key_rate"] > 0
                msgs.append(f"eps0={eps:g} {L:g} dB baseline K=0, dual K={d['key_rate']:.2e}")
    extra = "; ".join(msgs) if msgs else "baseline never zero"
    report(8, ok, f"max |K_dual - K_QS(t*T)|/K_QS = {worst:.2e} (<= 1e-2), tap BER < 1e-9; {extra}")


def test_criterion_9_determinism(single, tmp_path):
    diff = []
    for key in RUNS:
        a = single(key)
        b = Run(tmp_path, key, THREADS)
        if a.path.read_bytes() != b.path.read_bytes() or a.code != b.code:
            diff.append(key)
    report(9, not diff, f"--threads 1 vs {THREADS}: " + ("all outputs byte-identical" if not diff
                                                           else "differences in " + ", ".join(diff)))
