"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

A summary of all lines is printed at the end of the pytest run.
"""

import itertools
import json
import os
import subprocess
import sys

import numpy as np

from chevetlab import bounds
from chevetlab.ensembles import EnsembleSpec, check_isotropy, exponential
from chevetlab.harness import ExperimentSpec, run
from chevetlab.montecarlo import substream
from chevetlab.submatrix import gamma_km, ric


def brute_gamma(G, k, m):
    n, N = G.shape
    return max(
        np.linalg.svd(G[np.ix_(J, I)], compute_uv=False)[0]
        for J in itertools.combinations(range(n), k)
        for I in itertools.combinations(range(N), m)
    )


def corpus_6x8():
    rng = substream(2024)
    return [exponential(rng, (6, 8)) for _ in range(100)]


def test_01_isotropy(record):
    kinds = [
        EnsembleSpec("gaussian", 6, 6),
        EnsembleSpec("exponential", 6, 6),
        EnsembleSpec("uniform-cube", 6, 6),
        EnsembleSpec("uniform-bp-ball", 6, 6, p=1.5),
        EnsembleSpec("rotated-exponential", 6, 6, rotation_seed=1),
        EnsembleSpec("independent-lc-rows", 6, 6, p=3.0, row_kind="uniform-bp-ball"),
        EnsembleSpec("exponential", 36, 1),
    ]
    reps = [check_isotropy(s, 10**5, seed=1) for s in kinds]
    worst = max(r.max_abs_cov_dev / r.se_scale for r in reps)
    ok = all(r.passed for r in reps)
    record(1, ok, f"isotropy: {len(kinds)} kinds at d=36, worst deviation {worst:.2f} CLT units (limit 4)")
    assert ok


def test_02_gamma_oracle(record):
    worst_rel, heuristic_ok = 0.0, True
    for G in corpus_6x8():
        for k, m in itertools.product((1, 2), repeat=2):
            ex = gamma_km(G, k, m, "exact").value
            ref = brute_gamma(G, k, m)
            worst_rel = max(worst_rel, abs(ex - ref) / ref)
            heuristic_ok &= gamma_km(G, k, m, "heuristic").value <= ex * (1 + 1e-12)
    ok = heuristic_ok and worst_rel <= 1e-9
    record(2, ok, f"Gamma_km: heuristic <= exact on 100 matrices: {heuristic_ok}; max rel. gap to SVD oracle {worst_rel:.1e}")
    assert ok


def test_03_ric(record):
    n = 8
    d_id = max(ric(np.sqrt(n) * np.eye(n), m).delta for m in range(1, n + 1))
    G = exponential(substream(3), (n, 6))
    G /= np.linalg.norm(G, axis=0) / np.sqrt(n)
    G[:, 4] = G[:, 2]
    d_dup = ric(G, 2).delta
    heur = all(ric(G, m, "heuristic").delta <= ric(G, m).delta + 1e-12 for G in corpus_6x8() for m in (1, 2, 3))
    ok = d_id <= 1e-12 and abs(d_dup - 1) <= 1e-9 and heur
    record(3, ok, f"RIC: identity delta {d_id:.1e}, duplicated columns {d_dup:.12f}, heuristic <= exact {heur}")
    assert ok


def test_04_lone_scaling(record):
    rep = run(ExperimentSpec(name="lone-scaling", trials=2000, seed=4))
    ok = rep["passed"]
    record(4, ok, f"l1->l1: lower bound in all 49 cells {rep['verdicts']['lowerBound']}, ratio spread {rep['fitted']['ratioSpread']:.2f} (limit 4)")
    assert ok


def test_05_estUm_band(record):
    ratios = [
        bounds.estUm_exact(ell, n, 5000, 5).mean / bounds.estUm_closed(ell, n)
        for ell in (1, 2, 4, 8)
        for n in (16, 64, 256)
    ]
    width = max(ratios) / min(ratios)
    ok = width <= 3
    record(5, ok, f"top-l norm band: [{min(ratios):.3f}, {max(ratios):.3f}], width {width:.2f} (limit 3)")
    assert ok


def test_06_chevet_sandwich(record):
    rep = run(ExperimentSpec(name="chevet-ratio", n=[2, 8, 32], N=[2, 8, 32], trials=2000, seed=6))
    ok = rep["passed"]
    f = rep["fitted"]
    record(6, ok, f"Chevet sandwich: lower <= LHS in {len(rep['cells'])} cells {rep['verdicts']['lowerBound']}, LHS/RHS spread {f['ratioSpread']:.2f} (limit 3)")
    assert ok


def test_07_l1_sharpness(record):
    rep = run(ExperimentSpec(name="l1-sharpness", n=list(range(2, 9)), trials=2000, seed=7))
    growth = rep["fitted"]["growth"]
    ok = growth >= 1.6
    record(7, ok, f"sharpness: ratio(8)/ratio(2) = {growth:.3f} (needs >= 1.6; asymptotic prediction 2)")
    assert ok


def test_08_gamma_km_scaling(record):
    rep = run(ExperimentSpec(name="gamma-km-scaling", trials=100, seed=8))
    f = rep["fitted"]
    ok = rep["passed"]
    record(8, ok, f"Gamma_km: C_hat {f['cHat']:.3f} at (1,1), worst ratio / C_hat {f['worstOverCHat']:.2f} (limit 3)")
    assert ok


def test_09_tails(record):
    rep = run(ExperimentSpec(name="tails", n=[16], N=[16], pairs=["l2-l2"], trials=10**5, seed=9))
    fit = rep["cells"][0]["fit"]
    ok = rep["passed"]
    record(9, ok, f"tail fit: R^2 {fit['r2']:.4f}, slope {fit['slope']:.3f}, monotone {fit['monotone']}")
    assert ok


def test_10_gamma_sandwich(record):
    rep = run(ExperimentSpec(name="gamma-sandwich", trials=4000, seed=10))
    v = rep["verdicts"]
    ok = v["gaussianUpper"] and v["exponentialUpper"] and v["domination"]
    short = [c["set"] for c in rep["cells"] if not c["checks"]["domination"]]
    record(
        10, ok,
        f"chaining sandwich on 20 sets: gaussian upper {v['gaussianUpper']}, exponential upper "
        f"{v['exponentialUpper']}, exp >= gauss - 3SE {v['domination']} (short on sets {short})",
    )
    assert ok


def test_11_net_audit(record):
    rep = run(ExperimentSpec(name="net-audit", n=list(range(1, 17)), k=[1, 3, 7], trials=10**4, seed=11))
    worst = max(c["maxError2"] for c in rep["cells"])
    ok = rep["passed"]
    record(11, ok, f"nets: {len(rep['cells'])} (n,k) cells, cardinality/disjoint/covering all hold {ok}, worst |x - x~|^2 {worst:.4f} (limit 0.125)")
    assert ok


def test_12_rotation_gap(record):
    rep = run(ExperimentSpec(name="rotation-gap", n=[2, 3, 4], c=0.5, rotations=64, trials=2000, seed=12))
    ratios = rep["fitted"]["ratios"]
    ok = rep["passed"]
    record(12, ok, "rotation gap: best-rotation ratios " + ", ".join(f"{r:.4f}" for r in ratios))
    assert ok


def test_13_latala(record):
    rep = run(ExperimentSpec(name="latala-comparison", trials=2000, seed=13))
    f = rep["fitted"]
    ok = rep["passed"]
    record(13, ok, f"comparison: C_L {f['cHat']:.3f}, spread {f['ratioSpread']:.2f} over {len(rep['cells'])} cells (limit 3)")
    assert ok


REPRO = {
    "chevet-ratio": ["--n", "2,5", "--N", "3,8", "--trials", "600"],
    "lone-scaling": ["--n", "1,8", "--N", "4,64", "--trials", "1100"],
    "gamma-km-scaling": ["--n", "8", "--N", "8", "--k", "1,2", "--m", "1,3", "--trials", "100"],
    "tails": ["--n", "6", "--N", "6", "--trials", "5000"],
    "l1-sharpness": ["--n", "2,3,4", "--trials", "700"],
    "rotation-gap": ["--n", "2,3", "--trials", "700", "--rotations", "8"],
    "rip-grid": ["--n", "32", "--N", "8,16", "--trials", "100"],
    "latala-comparison": ["--n", "1,2", "--N", "4", "--trials", "600"],
    "gamma-sandwich": ["--trials", "600"],
    "net-audit": ["--n", "4,8", "--k", "1,3,7", "--trials", "600"],
}


def test_14_reproducibility(record, tmp_path):
    same = {}
    for name, args in REPRO.items():
        texts = []
        for workers in ("1", "8"):
            out = tmp_path / f"{name}-{workers}.json"
            env = dict(os.environ, CHEVETLAB_WORKERS=workers)
            proc = subprocess.run(
                [sys.executable, "-m", "chevetlab", name, *args, "--seed", "14", "--out", str(out)],
                env=env, capture_output=True, text=True,
            )
            assert proc.returncode in (0, 1), proc.stderr
            texts.append(out.read_bytes())
        same[name] = texts[0] == texts[1]
        json.loads(texts[0])
    ok = all(same.values())
    record(14, ok, f"byte-identical 1 vs 8 workers for {sum(same.values())}/{len(same)} experiments")
    assert ok
