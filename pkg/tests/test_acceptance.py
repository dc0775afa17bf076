"""Acceptance suite: one test per criterion.

Each test prints a ``PASS``/``FAIL`` line (also collected in the terminal
summary by ``conftest.py``). Run alone with ``pytest tests/test_acceptance.py``.
"""

import hashlib
import math
import time

import numpy as np
import pytest

from cfkit import channel as ch
from cfkit import cli
from cfkit import optimize as op
from cfkit import region as rg
from cfkit import simulate as sim
from helpers import random_model

PAM = np.array([-3, -1, 1, 3])


def grid_snr(x, grid=None):
    """The 40-point figure grid value closest to a rounded table SNR."""
    g = op.fig4_grid() if grid is None else grid
    return float(g[np.argmin(np.abs(g - x))])


def report(n, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def test_criterion_01_example1_optimum():
    t = time.perf_counter()
    best = op.optimize_symmetric_rate(ch.bmm())
    classical = op.optimize_symmetric_rate(ch.bmm(), op.SearchSpec(objective="classical"))
    dt = time.perf_counter() - t
    ok = (
        abs(best.rate - 0.6656) <= 5e-4
        and abs(best.params["p"] - 0.7331) <= 2e-3
        and abs(classical.rate - 0.5) <= 1e-12
        and dt < 10
    )
    report(1, ok, f"R_sym={best.rate:.4f} at p={best.params['p']:.4f} (target 0.6656 at 0.7331), classical={classical.rate!r}, {dt:.1f}s")


def test_criterion_02_cor1_curve():
    ref = {-5: 0.35352, 0.128: 0.80675, 5.256: 1.94658, 10.385: 3.51425, 15: 5.00552}
    t = time.perf_counter()
    errs = []
    for snr, val in ref.items():
        P = op.db_to_power(grid_snr(snr))
        r = op.cor1_sum_rate(P)
        closed = max(math.log2(0.5 + P), 0.5 * math.log2(1 + 2 * P))
        errs.append(max(abs(r - val), abs(r - closed)))
    dt = time.perf_counter() - t
    report(2, max(errs) <= 1e-3 and dt < 1, f"max deviation {max(errs):.2e}, {dt:.2f}s")


def test_criterion_03_thm1_q2_series():
    ref = {-5: 0.35231, 2.179: 1.06059, 8.333: 1.94876, 14.487: 2.00000}
    t = time.perf_counter()
    errs = [abs(op.thm1_q2_sum(op.db_to_power(grid_snr(s))) - v) for s, v in ref.items()]
    dt = time.perf_counter() - t
    report(3, max(errs) <= 5e-3 and dt < 60, f"max deviation {max(errs):.2e}, {dt:.1f}s")


def test_criterion_04_thm2_series():
    ref = {0.128: 0.80280, 4.744: 1.45888, 10.385: 3.08984}
    errs = [abs(op.thm2_pam4_sum(op.db_to_power(grid_snr(s))) - v) for s, v in ref.items()]
    report(4, max(errs) <= 5e-3, f"max deviation {max(errs):.2e}")


def test_criterion_05_fig5_strict_improvement():
    snr = grid_snr(1.8205, op.fig5_grid())
    row = op.fig5_row(snr)
    ok = (
        row["thm2"] >= 1.030
        and row["thm2"] > row["cor1"]
        and row["thm2"] > row["iid"]
        and abs(row["cor1"] - 1.01487) <= 5e-3
        and abs(row["iid"] - 1.00744) <= 5e-3
    )
    report(5, ok, f"thm2={row['thm2']:.5f} cor1={row['cor1']:.5f} iid={row['iid']:.5f} (p={row['p']:.3f})")


def test_criterion_06_structural_equalities():
    t = time.perf_counter()
    rng = np.random.default_rng(6)
    bad = []
    for i in range(50):
        m = random_model(rng, [2, 3][i % 2], ny=int(rng.integers(2, 5)))
        if not rg.same_region(rg.region_thm4(m, (1, 0), (0, 1)), rg.region_lmac(m)):
            bad.append(f"thm4 #{i}")
    for i in range(100):
        m = random_model(rng, [2, 3][i % 2], ny=int(rng.integers(2, 5)))
        if not rg.same_region(rg.region_equiv_rr(m), rg.region_lmac(m)):
            bad.append(f"equiv #{i}")
    for g in (2, 3):
        for P in (0.5, 2.0, 20.0):
            for a in [(1, 1), (1, 2), (2, 1)]:
                ga = tuple(g * x for x in a)
                if not rg.same_region(rg.region_cor1((1, 1.3), P, (1, 0.8), a), rg.region_cor1((1, 1.3), P, (1, 0.8), ga)):
                    bad.append(f"gcd {g}{a}")
    P = 3.0
    x = PAM * math.sqrt(P / 5)
    u = np.array([0.1, 0.4, 0.3, 0.2])
    mac = ch.GaussianMac((1, 1), (P, P))
    r0, plan = rg.region_thm2(mac, [PAM, PAM], [u, u], [x, x], (1, 1))
    for q in (41, 53, 101):
        if not rg.same_region(r0, rg.region_thm2(mac, [PAM, PAM], [u, u], [x, x], (1, 1), q=q)[0]):
            bad.append(f"prime {q}")
    dt = time.perf_counter() - t
    report(6, not bad and dt < 120, f"{len(bad)} mismatches {bad[:3]}, minimum prime {plan.q}, {dt:.1f}s")


def test_criterion_07_quantization_limits():
    h = rg.discretized_entropy(rg.PdfSpec("gaussian", 1.0), 2**-8)
    e1 = abs(h - 0.5 * math.log2(2 * math.pi * math.e))
    e2 = 0.0
    for P in (0.5, 1.0, 4.0):
        rep = rg.gaussian_thm3_limit((1, 1), P, (1, 1), (1, 1))
        exact = rg.gaussian_icf((1, 1), P, (1, 1), (1, 1))
        e2 = max(e2, max(abs(x - y) for x, y in zip(rep.extrapolated, exact)))
    report(7, e1 <= 1e-3 and e2 <= 5e-3, f"entropy gap {e1:.2e}, I_CF gap {e2:.2e}")


def test_criterion_08_ensemble_statistics():
    t = time.perf_counter()
    rep = sim.lemma_checks(seed=7, samples=100_000, alpha=0.01)
    counts = [sim.check_index_sets(q, d).passed for q, d in [(2, (2, 2)), (2, (1, 1, 1)), (3, (1, 2)), (2, (1, 3)), (3, (2, 2))]]
    dt = time.perf_counter() - t
    failed = [c["name"] for c in rep["checks"] if not c["passed"]]
    ok = rep["all_passed"] and all(counts) and dt < 300
    report(8, ok, f"{len(rep['checks'])} checks, failed {failed}, index-set instances {sum(counts)}/{len(counts)}, {dt:.1f}s")


def test_criterion_09_finite_length_behaviour():
    best = op.optimize_symmetric_rate(ch.bmm())
    R, p = best.rate, best.params["p"]
    pm = np.array([1 - p, p])
    aux = sim.auto_aux_rate(pm, 2)
    pts = []
    for n in (8, 12, 16):
        cfg = sim.SimConfig.snapped(n, 2, (0.7 * R, 0.7 * R), (aux, aux), (pm, pm), ch.bmm(), trials=2000, seed=7)
        pts.append(sim.run_trials(cfg))
    trend = sim.nonincreasing(pts)
    cfg = sim.SimConfig.snapped(16, 2, (1.3 * R, 1.3 * R), (aux, aux), (pm, pm), ch.bmm(), trials=200, seed=7, budget=2**34)
    beyond = sim.run_trials(cfg)["error_rate"]
    mm = sim.check_mismatched(seed=7)
    last = mm.info["points"][-1]
    gap = abs(last["exponent_mc"] - mm.info["target"])
    ok = trend and beyond > 0.3 and last["n"] == 24 and gap <= 0.15
    rates = [round(x["error_rate"], 4) for x in pts]
    report(9, ok, f"error at 70% corner {rates}, beyond corner {beyond:.3f}, exponent {last['exponent_mc']:.3f} vs {mm.info['target']:.3f}")


def _digests(d):
    return {f.name: hashlib.sha256(f.read_bytes()).hexdigest() for f in sorted(d.iterdir()) if f.name != "manifest.json"}


def test_criterion_10_determinism(tmp_path, capsys):
    runs = [
        ["region", "--builtin", "bmm", "--pmf", "bern:0.7331", "--thm", "thm1"],
        ["region", "--builtin", "sym_gaussian", "--snr", "0", "--cor1"],
        ["simulate", "--builtin", "bmm", "--n", "8", "--rates", "0.3,0.3", "--trials", "200", "--seed", "7"],
        ["check", "lemmas", "--seed", "7", "--samples", "20000"],
        ["figure", "fig7"],
    ]
    bad = []
    for i, argv in enumerate(runs):
        a, b = tmp_path / f"a{i}", tmp_path / f"b{i}"
        cli.main(argv + ["--out", str(a)])
        code = cli.main(["replay", str(a / "manifest.json"), "--out", str(b)])
        if code != 0 or _digests(a) != _digests(b):
            bad.append(argv[0])
    capsys.readouterr()
    report(10, not bad, f"{len(runs)} commands replayed, differing {bad}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
