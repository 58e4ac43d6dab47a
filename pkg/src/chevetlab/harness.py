"""Seeded experiment campaigns producing pass/fail reports.

Every experiment expands its parameter grid into cells.  Cells run
concurrently, each drawing from substreams keyed by
``(experiment id, cell index, ...)``, and are reduced in grid order, so a
report depends only on the experiment spec and never on the worker count.

Each cell row carries the raw estimate it was judged on; global verdicts
are recomputed from those rows alone.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import bounds
from . import chaining as ch
from . import geometry as geo
from .ensembles import EnsembleSpec, exponential, random_orthogonal, sample_batch
from .montecarlo import EstimateWithCI, default_workers, draw_values, ratio_of_means, substream, summarize
from .submatrix import BudgetExceeded, gamma_km_value, ric

EXPERIMENTS = (
    "chevet-ratio",
    "lone-scaling",
    "gamma-km-scaling",
    "tails",
    "l1-sharpness",
    "rotation-gap",
    "rip-grid",
    "latala-comparison",
    "gamma-sandwich",
    "net-audit",
)
PAIRS = ("l1-l1", "l2-l2", "l1-l2", "sparse", "l2-linf")
FORMATS = ("json", "csv")
CSV_COLUMNS = ("experiment", "n", "N", "k", "m", "estimate", "se", "bound", "ratio", "verdict")
STABILITY = 3.0
LONE_STABILITY = 4.0
# entries per in-memory chunk when drawing large matrices
CHUNK_ENTRIES = 1 << 22

DEFAULTS = {
    "chevet-ratio": dict(n=[2, 8, 32], N=[2, 8, 32], k=[2], m=[2]),
    "lone-scaling": dict(n=[1, 2, 4, 8, 16, 32, 64], N=[1, 4, 16, 64, 256, 1024, 4096]),
    "gamma-km-scaling": dict(n=[32], N=[32], k=[1, 2, 4, 8], m=[1, 2, 4, 8]),
    "tails": dict(n=[16], N=[16]),
    "l1-sharpness": dict(n=[2, 3, 4, 5, 6, 7, 8], N=[]),
    "rotation-gap": dict(n=[2, 3, 4], N=[]),
    "rip-grid": dict(n=[32, 64, 128], N=[16, 32, 64]),
    "latala-comparison": dict(n=[1, 2, 4], N=[4, 8]),
    "gamma-sandwich": dict(n=[], N=[]),
    "net-audit": dict(n=[1, 3, 7, 8, 12, 16], N=[], k=[1, 3, 7]),
}
DEFAULT_PAIRS = {"chevet-ratio": list(PAIRS), "tails": ["l2-l2"]}


@dataclass
class ExperimentSpec:
    """Parameter grid of one experiment.

    Empty dimension lists fall back to the experiment's default grid.  ``c``
    is the exponent in ``N = ceil(e^{cn})`` for ``rotation-gap`` and the
    threshold constant for ``rip-grid``; ``pairs`` selects (K, L) corpus
    pairs by name.
    """

    name: str
    n: list = field(default_factory=list)
    N: list = field(default_factory=list)
    k: list = field(default_factory=list)
    m: list = field(default_factory=list)
    trials: int = 2000
    seed: int = 0
    c: float | None = None
    theta: float = 0.5
    rotations: int = 64
    pairs: list = field(default_factory=list)
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.name!r}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if int(self.trials) < 100:
            raise ValueError("need at least 100 trials")
        if self.c is not None and not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.rotations < 1:
            raise ValueError("need at least one rotation")
        for p in self.pairs:
            if p not in PAIRS:
                raise ValueError(f"unknown pair {p!r}")
        for name in ("n", "N", "k", "m"):
            vals = [int(v) for v in getattr(self, name)]
            if any(v < 1 for v in vals):
                raise ValueError(f"{name} values must be positive")
            setattr(self, name, vals)
        self.trials = int(self.trials)
        self.seed = int(self.seed)
        if not _cells(self):
            raise ValueError("parameter grid is empty")

    def grid(self, name):
        return getattr(self, name) or DEFAULTS[self.name].get(name, [])

    @property
    def pair_names(self):
        return self.pairs or DEFAULT_PAIRS.get(self.name, [])

    def to_dict(self):
        d = asdict(self)
        d.pop("out")
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# --- small helpers ------------------------------------------------------------


def _pair(name, n, N, k=None, m=None):
    """``(K, L)`` with K in the domain R^N and L in the codomain R^n."""
    if name == "l1-l1":
        return geo.lp(N, 1), geo.lp(n, 1)
    if name == "l2-l2":
        return geo.lp(N, 2), geo.lp(n, 2)
    if name == "l1-l2":
        return geo.lp(N, 1), geo.lp(n, 2)
    if name == "sparse":
        return geo.sparse_hull(N, m), geo.sparse_polar(n, k)
    if name == "l2-linf":
        return geo.lp(N, 2), geo.lp(n, np.inf)
    raise ValueError(name)


def _chunked(stat, draw, entries, size, rng):
    """``stat(draw(rng, s))`` over chunks small enough to keep memory flat."""
    step = max(1, CHUNK_ENTRIES // entries)
    out = [stat(draw(rng, min(step, size - s))) for s in range(0, size, step)]
    return np.concatenate(out)


def _mc_matrix_stat(stat, n, N, trials, seed, key, law=exponential):
    draw = lambda rng, s: law(rng, (s, n, N))
    return summarize(
        draw_values(lambda rng, size: _chunked(stat, draw, n * N, size, rng), trials, seed, key, 1),
        seed,
    )


def _op_stat(K, L, k=None, m=None):
    if K.shape == "sparse_hull":
        return lambda Gs: np.array([gamma_km_value(G, k, m)[0] for G in Gs])
    return lambda Gs: geo.batch_op_norm(Gs, K, L)


def _spread(values):
    values = [v for v in values if v is not None]
    if not values or min(values) <= 0:
        return None
    return max(values) / min(values)


def _cell(experiment, n=None, N=None, k=None, m=None, estimate=None, bound=None, ratio=None, verdict=None, **extra):
    row = dict(
        experiment=experiment,
        n=n,
        N=N,
        k=k,
        m=m,
        estimate=None if estimate is None else estimate.to_dict(),
        bound=bound,
        ratio=ratio,
        verdict=verdict,
    )
    row.update(extra)
    return row


def _combined_se(*ests):
    return math.sqrt(sum(e.se**2 for e in ests))


# --- grids ----------------------------------------------------------------------


def _cells(spec):
    name = spec.name
    if name == "chevet-ratio":
        out = []
        for n in spec.grid("n"):
            for N in spec.grid("N"):
                for p in spec.pair_names:
                    if p == "sparse":
                        out += [(n, N, p, k, m) for k in spec.grid("k") for m in spec.grid("m") if k <= n and m <= N]
                    else:
                        out.append((n, N, p, None, None))
        return out
    if name == "lone-scaling":
        return [(n, N) for n in spec.grid("n") for N in spec.grid("N")]
    if name == "gamma-km-scaling":
        return [
            (kind, n, N, k, m)
            for kind in ("exponential", "uniform-cube")
            for n in spec.grid("n")
            for N in spec.grid("N")
            for k in spec.grid("k")
            for m in spec.grid("m")
            if k <= n and m <= N
        ]
    if name == "tails":
        return [(n, N, p) for n in spec.grid("n") for N in spec.grid("N") for p in spec.pair_names if p != "sparse"]
    if name in ("l1-sharpness", "rotation-gap"):
        return [(n,) for n in spec.grid("n")]
    if name == "rip-grid":
        return [(n, N) for n in spec.grid("n") for N in spec.grid("N")]
    if name == "latala-comparison":
        return [
            (ens, n, N, norm)
            for ens in LATALA_ENSEMBLES
            for n in spec.grid("n")
            for N in spec.grid("N")
            if n * N <= 32
            for norm in LATALA_NORMS
        ]
    if name == "gamma-sandwich":
        return [(i,) for i in range(SANDWICH_SETS)]
    if name == "net-audit":
        ks = spec.grid("k")
        return [(n, k) for n in spec.grid("n") for k in ks if k <= n and n <= 16]
    raise ValueError(name)


# --- experiments ------------------------------------------------------------------


def _chevet_cell(spec, key, cell):
    n, N, pname, k, m = cell
    K, L = _pair(pname, n, N, k, m)
    lhs = _mc_matrix_stat(_op_stat(K, L, k, m), n, N, spec.trials, spec.seed, key + (0,))
    rhs_trials = max(spec.trials, 1000)
    rhs = bounds.chevet_rhs(K, L, rhs_trials, spec.seed, workers=1, key=key)
    low = bounds.chevet_lower(K, L, rhs_trials, spec.seed, workers=1, key=key)
    lower_ok = low.mean <= lhs.mean + 3 * _combined_se(low, lhs)
    return _cell(
        spec.name, n, N, k, m, lhs, rhs.total, lhs.mean / rhs.total, lower_ok,
        pair=pname, lower=low.to_dict(), rhs=rhs.to_dict(),
    )


def _chevet_summary(spec, rows):
    ratios = [r["ratio"] for r in rows]
    spread = _spread(ratios)
    fitted = {"cHat": max(ratios), "cHatReference": ratios[0], "ratioSpread": spread}
    verdicts = {
        "lowerBound": all(r["verdict"] for r in rows),
        "ratioStability": spread is not None and spread <= STABILITY,
    }
    return fitted, verdicts


def _lone_cell(spec, key, cell):
    n, N = cell
    stat = lambda Gs: np.max(np.sum(np.abs(Gs), axis=1), axis=-1)
    lhs = _mc_matrix_stat(stat, n, N, spec.trials, spec.seed, key)
    bound = bounds.lonenorm_bound(n, N)
    lower_ok = lhs.mean >= n / math.sqrt(2) - 3 * lhs.se
    return _cell(spec.name, n, N, None, None, lhs, bound, lhs.mean / bound, lower_ok)


def _lone_summary(spec, rows):
    spread = _spread([r["ratio"] for r in rows])
    fitted = {"ratioSpread": spread, "ratioMax": max(r["ratio"] for r in rows)}
    verdicts = {
        "lowerBound": all(r["verdict"] for r in rows),
        "ratioStability": spread is not None and spread <= LONE_STABILITY,
    }
    return fitted, verdicts


def _gkm_cell(spec, key, cell):
    kind, n, N, k, m = cell
    ens = EnsembleSpec(kind, n, N)
    exact = []

    def draw(rng, size):
        vals = []
        for G in sample_batch(ens, size, rng):
            v, e = gamma_km_value(G, k, m)
            vals.append(v)
            exact.append(e)
        return np.array(vals)

    est = summarize(draw_values(draw, spec.trials, spec.seed, key, 1), spec.seed)
    bound = bounds.subm_bound(k, m, n, N)
    return _cell(spec.name, n, N, k, m, est, bound, est.mean / bound, None, ensemble=kind, exact=all(exact))


def _gkm_summary(spec, rows):
    # one constant for the whole class, taken from the worst (1, 1) cell
    refs = [r for r in rows if r["k"] == 1 and r["m"] == 1] or rows[:1]
    c_hat = max(r["ratio"] for r in refs)
    for r in rows:
        r["verdict"] = r["ratio"] <= STABILITY * c_hat
    worst = max(r["ratio"] for r in rows) / c_hat
    fitted = {"cHat": c_hat, "worstOverCHat": worst}
    for kind in ("exponential", "uniform-cube"):
        group = [r["ratio"] for r in rows if r["ensemble"] == kind]
        if group:
            fitted[f"{kind}Spread"] = _spread(group)
    return fitted, {"calibrated": all(r["verdict"] for r in rows), "stability": worst <= STABILITY}


def tail_fit(z, sigma, sigma_prime, points=40, min_tail=100):
    """Regress ``-log P(Z - EZ >= t)`` on ``min(t^2/sigma^2, t/sigma')``.

    ``t`` runs over ``points`` equispaced values up to the deviation that
    still has ``min_tail`` exceedances.  Returns slope, intercept, R^2 and
    whether the empirical curve is nondecreasing.
    """
    dev = np.sort(np.asarray(z) - np.mean(z))
    if dev.size <= min_tail or dev[-min_tail] <= 0:
        raise ValueError("not enough samples for a tail fit")
    tmax = dev[-min_tail]
    t = np.linspace(0.0, tmax, points)
    surv = 1.0 - np.searchsorted(dev, t, side="left") / dev.size
    y = -np.log(surv)
    x = np.minimum(t**2 / sigma**2, t / sigma_prime)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
    return dict(
        slope=float(slope),
        intercept=float(intercept),
        r2=float(r2),
        monotone=bool(np.all(np.diff(y) >= 0)),
        tMax=float(tmax),
    )


def _tails_cell(spec, key, cell):
    n, N, pname = cell
    K, L = _pair(pname, n, N)
    stat = _op_stat(K, L)
    draw = lambda rng, s: exponential(rng, (s, n, N))
    z = draw_values(lambda rng, size: _chunked(stat, draw, n * N, size, rng), spec.trials, spec.seed, key, 1)
    tp = bounds.tail_params(K, L)
    fit = tail_fit(z, tp.sigma, tp.sigma_prime)
    ok = fit["monotone"] and fit["slope"] > 0 and fit["r2"] >= 0.9
    return _cell(
        spec.name, n, N, None, None, summarize(z, spec.seed), None, fit["r2"], ok,
        pair=pname, sigma=tp.sigma, sigmaPrime=tp.sigma_prime, fit=fit,
    )


def _cells_summary(spec, rows):
    return {}, {"allCells": all(r["verdict"] for r in rows)}


def _l1_sharp_cell(spec, key, cell):
    (n,) = cell
    N = math.ceil(math.exp(n))
    K, L = geo.lp(N, 1), geo.lp(n, 1)
    lhs = _mc_matrix_stat(_op_stat(K, L), n, N, spec.trials, spec.seed, key + (0,))
    rhs = bounds.chevet_rhs(K, L, max(spec.trials, 1000), spec.seed, workers=1, key=key)
    return _cell(spec.name, n, N, None, None, lhs, rhs.total, rhs.total / lhs.mean, None, rhs=rhs.to_dict())


def _l1_sharp_summary(spec, rows):
    rows = sorted(rows, key=lambda r: r["n"])
    lo, hi = rows[0], rows[-1]
    growth = hi["ratio"] / lo["ratio"]
    predicted = math.sqrt(hi["n"] / lo["n"])
    fitted = {"growth": growth, "predictedGrowth": predicted}
    return fitted, {"sharpness": len(rows) > 1 and growth >= 0.8 * predicted}


def _rotation_cell(spec, key, cell):
    (n,) = cell
    c = 0.5 if spec.c is None else spec.c
    N = math.ceil(math.exp(c * n))
    rng = substream(spec.seed, *key, 0)
    rots = np.array([random_orthogonal(n, rng) for _ in range(spec.rotations)])
    col_l1 = lambda A: np.max(np.sum(np.abs(A), axis=-2), axis=-1)

    # selection: every rotation sees the same draws of Gamma
    def select(rng, size):
        G = exponential(rng, (size, n, N))
        return col_l1(np.matmul(rots[:, None], G[None])).T  # (size, rotations)

    sel = draw_values(select, spec.trials, spec.seed, key + (1,), 1)
    best = int(np.argmax(sel.mean(axis=0)))
    u0 = rots[best]

    # evaluation on fresh draws, paired with the unrotated norm
    def evaluate(rng, size):
        G = exponential(rng, (size, n, N))
        return np.stack([col_l1(u0 @ G), col_l1(G)], axis=1)

    ev = draw_values(evaluate, spec.trials, spec.seed, key + (2,), 1)
    ratio, se = ratio_of_means(ev[:, 0], ev[:, 1])
    base = summarize(ev[:, 1], spec.seed)
    avg_ratio = float(sel.mean() / base.mean)
    return _cell(
        spec.name, n, N, None, None, EstimateWithCI(ratio, se, spec.trials, spec.seed), None, ratio, None,
        rotations=spec.rotations, bestRotation=best, baseline=base.to_dict(),
        rotated=summarize(ev[:, 0], spec.seed).to_dict(), averageRatio=avg_ratio,
    )


def _rotation_summary(spec, rows):
    ratios = [r["ratio"] for r in sorted(rows, key=lambda r: r["n"])]
    inc = len(ratios) > 1 and all(b > a for a, b in zip(ratios, ratios[1:]))
    return {"ratios": ratios}, {"monotone": inc}


def _rip_cell(spec, key, cell):
    n, N = cell
    c = 1.0 if spec.c is None else spec.c
    thr = bounds.rip_admissible_m(spec.theta, n, N, c)
    m = thr.m
    if m == 0:
        return _cell(spec.name, n, N, None, 0, None, spec.theta, None, None, branch=thr.branch, skipped=True)
    ens = EnsembleSpec("independent-lc-rows", n, N, row_kind="exponential")
    flags = []

    def draw(rng, size):
        out = []
        for G in sample_batch(ens, size, rng):
            try:
                r = ric(G, m, "exact")
            except BudgetExceeded:
                r = ric(G, m, "heuristic")
            flags.append(r.exact)
            out.append(r.delta)
        return np.array(out)

    deltas = draw_values(draw, spec.trials, spec.seed, key, 1)
    est = summarize(deltas, spec.seed)
    success = float(np.mean(deltas <= spec.theta))
    prob = max(0.0, bounds.rip_success_probability(spec.theta, n, N, m, c))
    return _cell(
        spec.name, n, N, None, m, est, spec.theta, est.mean / spec.theta, success >= prob,
        branch=thr.branch, successRate=success, successBound=prob, exact=all(flags), skipped=False,
    )


def _rip_summary(spec, rows):
    active = [r for r in rows if not r["skipped"]]
    return {"activeCells": len(active)}, {"allCells": all(r["verdict"] for r in active)}


LATALA_ENSEMBLES = ("gaussian", "uniform-cube", "uniform-bp-ball:1", "uniform-bp-ball:4")
LATALA_NORMS = ("l1", "l2", "linf", "top4", "op22", "op11")


def _latala_norm(name):
    if name == "l1":
        return lambda X: np.sum(np.abs(X), axis=(-2, -1))
    if name == "l2":
        return lambda X: np.sqrt(np.sum(X * X, axis=(-2, -1)))
    if name == "linf":
        return lambda X: np.max(np.abs(X), axis=(-2, -1))
    if name == "top4":
        return lambda X: geo.top_l2(X.reshape(X.shape[0], -1), min(4, X.shape[-1] * X.shape[-2]))
    if name == "op22":
        return lambda X: np.linalg.norm(X, ord=2, axis=(-2, -1))
    if name == "op11":
        return lambda X: np.max(np.sum(np.abs(X), axis=-2), axis=-1)
    raise ValueError(name)


def _latala_ensemble(label, n, N):
    kind, _, p = label.partition(":")
    return EnsembleSpec(kind, n, N, p=float(p) if p else None)


def _latala_cell(spec, key, cell):
    label, n, N, norm_name = cell
    ens = _latala_ensemble(label, n, N)
    norm = _latala_norm(norm_name)
    x = summarize(draw_values(lambda rng, s: norm(sample_batch(ens, s, rng)), spec.trials, spec.seed, key + (0,), 1), spec.seed)
    y = summarize(draw_values(lambda rng, s: norm(exponential(rng, (s, n, N))), spec.trials, spec.seed, key + (1,), 1), spec.seed)
    return _cell(
        spec.name, n, N, None, None, x, y.mean, x.mean / y.mean, None,
        ensemble=label, norm=norm_name, exponential=y.to_dict(),
    )


def _latala_summary(spec, rows):
    c_ref = rows[0]["ratio"]
    for r in rows:
        r["verdict"] = r["ratio"] <= STABILITY * c_ref
    spread = _spread([r["ratio"] for r in rows])
    fitted = {"cHat": max(r["ratio"] for r in rows), "cHatReference": c_ref, "ratioSpread": spread}
    return fitted, {
        "calibrated": all(r["verdict"] for r in rows),
        "ratioStability": spread is not None and spread <= STABILITY,
    }


SANDWICH_SETS = 20


def sandwich_corpus(seed=0, count=SANDWICH_SETS):
    """Finite point sets with 8 to 64 points in dimension 4 to 16."""
    sets = []
    for i in range(count):
        rng = substream(seed, 9000, i)
        d = int(rng.integers(4, 17))
        size = int(rng.integers(8, 65))
        family = i % 4
        if family == 0:
            T = rng.standard_normal((size, d))
        elif family == 1:  # signed basis vectors at random scales
            idx = rng.integers(0, d, size)
            T = np.zeros((size, d))
            T[np.arange(size), idx] = rng.choice([-1.0, 1.0], size) * rng.uniform(0.2, 2.0, size)
        elif family == 2:  # points on the l1 sphere
            T = rng.laplace(size=(size, d))
            T /= np.sum(np.abs(T), axis=1, keepdims=True)
        else:  # sparse points
            T = rng.standard_normal((size, d)) * (rng.random((size, d)) < 0.3)
        sets.append(T)
    return sets


def _sandwich_cell(spec, key, cell):
    (i,) = cell
    T = sandwich_corpus(spec.seed)[i]
    g = ch.emp_sup_process(T, "gaussian", spec.trials, spec.seed, key + (0,), 1)
    e = ch.emp_sup_process(T, "exponential", spec.trials, spec.seed, key + (1,), 1)
    g2, _ = ch.gamma_q_upper(T, 2, "euclidean")
    g1, _ = ch.gamma_q_upper(T, 1, "sup")
    mixed = ch.mixed_chain_upper(T)
    checks = {
        "gaussianUpper": g.mean <= ch.C_CHAIN * g2,
        "exponentialUpper": e.mean <= ch.C_CHAIN * (g2 + g1),
        "exponentialMixedUpper": e.mean <= ch.C_CHAIN * mixed,
        "domination": e.mean >= g.mean - 3 * _combined_se(e, g),
        "dominationHalf": e.mean >= 0.5 * g.mean,
    }
    bound = ch.C_CHAIN * (g2 + g1)
    return _cell(
        spec.name, T.shape[1], T.shape[0], None, None, e, bound, e.mean / bound, all(checks.values()),
        set=i, gaussian=g.to_dict(), gamma2=g2, gamma1=g1, mixed=mixed, checks=checks,
    )


def _sandwich_summary(spec, rows):
    names = rows[0]["checks"].keys()
    return {"cChain": ch.C_CHAIN}, {k: all(r["checks"][k] for r in rows) for k in names}


def _random_sparse_units(rng, size, n, k):
    x = np.zeros((size, n))
    for row in x:
        supp = rng.choice(n, k, replace=False)
        row[supp] = rng.standard_normal(k)
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _net_cell(spec, key, cell):
    n, k = cell
    H = ch.NetHierarchy(n, k)
    card_ok = all(lv.cardinality() <= lv.cardinality_bound() for lv in H.levels)
    rng = substream(spec.seed, *key)
    errs, disjoint, covered = [], True, True
    for x in _random_sparse_units(rng, spec.trials, n, k):
        dec = ch.decompose_sparse(x, H)
        errs.append(dec.error**2)
        disjoint &= dec.disjoint
    # covering radius of each level on random points of its cap
    for lv in H.levels:
        s = min(lv.support_size, n)
        z = _random_sparse_units(rng, 256, n, s) * rng.random((256, 1)) ** (1 / s)
        z *= np.minimum(1.0, lv.linf_cap / np.max(np.abs(z), axis=1, keepdims=True))
        covered &= bool(np.all(lv.distance(z, lv.quantize(z)) <= lv.epsilon + 1e-12))
    errs = np.array(errs)
    est = summarize(errs, spec.seed)
    worst = float(errs.max())
    ok = card_ok and disjoint and covered and worst <= 1 / 8
    return _cell(
        spec.name, n, None, k, None, est, 1 / 8, worst * 8, ok,
        maxError2=worst, cardinalityOk=card_ok, disjoint=bool(disjoint), covering=covered,
        cardinalities=[str(lv.cardinality()) for lv in H.levels],
        cardinalityBounds=[f"{float(lv.cardinality_bound()):.6g}" for lv in H.levels],
    )


RUNNERS = {
    "chevet-ratio": (_chevet_cell, _chevet_summary),
    "lone-scaling": (_lone_cell, _lone_summary),
    "gamma-km-scaling": (_gkm_cell, _gkm_summary),
    "tails": (_tails_cell, _cells_summary),
    "l1-sharpness": (_l1_sharp_cell, _l1_sharp_summary),
    "rotation-gap": (_rotation_cell, _rotation_summary),
    "rip-grid": (_rip_cell, _rip_summary),
    "latala-comparison": (_latala_cell, _latala_summary),
    "gamma-sandwich": (_sandwich_cell, _sandwich_summary),
    "net-audit": (_net_cell, _cells_summary),
}


def version_stamp():
    return {
        "chevetlab": __version__,
        "numpy": np.__version__,
        "python": ".".join(platform.python_version_tuple()[:2]),
    }


def run(spec, workers=None):
    """Run every cell of ``spec`` and return the report as a plain dict."""
    cell_fn, summary_fn = RUNNERS[spec.name]
    eid = EXPERIMENTS.index(spec.name)
    cells = _cells(spec)
    workers = default_workers() if workers is None else workers

    def one(i):
        try:
            return cell_fn(spec, (eid, i), cells[i])
        except (BudgetExceeded, MemoryError) as err:
            return _cell(spec.name, verdict=False, error=f"{type(err).__name__}: {err}", cell=list(cells[i]))

    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(one, range(len(cells))))
    else:
        rows = [one(i) for i in range(len(cells))]
    good = [r for r in rows if "error" not in r]
    fitted, verdicts = summary_fn(spec, good) if good else ({}, {})
    if len(good) < len(rows):
        verdicts["noErrors"] = False
    return {
        "spec": spec.to_dict(),
        "seed": spec.seed,
        "cells": rows,
        "fitted": fitted,
        "verdicts": verdicts,
        "passed": bool(verdicts) and all(verdicts.values()),
        "version": version_stamp(),
    }


def _clean(obj):
    # json cannot hold numpy scalars or non-finite floats
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def to_json(report):
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def to_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report["cells"]:
        est = r.get("estimate") or {}
        w.writerow(
            [r["experiment"], r.get("n"), r.get("N"), r.get("k"), r.get("m"),
             est.get("mean"), est.get("se"), r.get("bound"), r.get("ratio"), r.get("verdict")]
        )
    return buf.getvalue()


def emit(report, format="json", path=None):
    """Serialize ``report``; write it to ``path`` when given.  Returns the text."""
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    text = to_json(report) if format == "json" else to_csv(report)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
