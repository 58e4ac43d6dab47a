import math

import numpy as np
import pytest
import sympy

from chevetlab import bounds
from chevetlab import geometry as geo
from chevetlab.ensembles import exponential
from chevetlab.montecarlo import substream

INF = np.inf

PAIRS = [
    (geo.lp(16, 1), geo.lp(16, 1)),
    (geo.lp(16, 2), geo.lp(16, 2)),
    (geo.lp(16, 1), geo.lp(16, 2)),
    (geo.sparse_hull(16, 2), geo.sparse_polar(16, 2)),
    (geo.lp(16, 2), geo.lp(16, INF)),
]


def test_chevet_rhs_one_dim():
    b = bounds.chevet_rhs(geo.lp(1, 2), geo.lp(1, 2), 20000, 1)
    assert b.total == pytest.approx(b.term_k + b.term_l)
    assert abs(b.total - math.sqrt(2)) <= 3 * b.total_se
    assert b.radius_k == 1 and b.radius_l == 1


def test_chevet_lower_one_dim():
    low = bounds.chevet_lower(geo.lp(1, 2), geo.lp(1, 2), 20000, 2)
    assert low.within(2**-0.5)


def test_gaussian_one_dim():
    b = bounds.gaussian_chevet_rhs(geo.lp(1, 2), geo.lp(1, 2), 20000, 3)
    assert b.exp_l.within(math.sqrt(2 / math.pi))


def test_chevet_rhs_l2_against_straight_sum():
    n = N = 64
    b = bounds.chevet_rhs(geo.lp(N, 2), geo.lp(n, 2), 4000, 4)
    rng = np.random.default_rng(123)
    y = exponential(rng, (4000, n))
    z = exponential(rng, (4000, N))
    oracle = np.linalg.norm(y, axis=1).mean() + np.linalg.norm(z, axis=1).mean()
    assert 0.8 * oracle <= b.total <= 1.25 * oracle


def test_chevet_lower_l1_terms():
    n, N = 6, 50
    low = bounds.chevet_lower(geo.lp(N, 1), geo.lp(n, 1), 5000, 5)
    b = bounds.chevet_rhs(geo.lp(N, 1), geo.lp(n, 1), 5000, 5)
    # first term E sum |E_i| = n / sqrt 2, second E max_i |E_i|
    assert b.exp_l.within(n / math.sqrt(2))
    assert low.mean == pytest.approx(0.5 * (b.exp_l.mean + b.exp_k.mean))


@pytest.mark.parametrize("K,L", PAIRS, ids=lambda b: f"{b.shape}{b.param}")
def test_lower_below_lhs_and_gaussian_dominated(K, L):
    low = bounds.chevet_lower(K, L, 2000, 6)
    rng = substream(7)
    lhs = np.array([geo.op_norm(G, K, L).value for G in exponential(rng, (400, L.dim, K.dim))])
    se = math.hypot(low.se, lhs.std() / 20)
    assert low.mean <= lhs.mean() + 3 * se
    ge = bounds.gaussian_chevet_rhs(K, L, 2000, 8)
    ex = bounds.chevet_rhs(K, L, 2000, 9)
    assert ge.total <= 1.1 * ex.total + 3 * math.hypot(ge.total_se, ex.total_se)


def test_sparse_term_matches_top_l_band():
    m, N = 2, 16
    b = bounds.chevet_rhs(geo.sparse_hull(N, m), geo.sparse_polar(16, 2), 5000, 10)
    ratio = b.exp_k.mean / bounds.estUm_closed(m, N)
    band = [
        bounds.estUm_exact(ell, n, 2000, 11).mean / bounds.estUm_closed(ell, n)
        for ell in (1, 2, 4, 8)
        for n in (16, 64)
    ]
    assert min(band) * 0.95 <= ratio <= max(band) * 1.05


def test_trials_floor():
    with pytest.raises(ValueError):
        bounds.chevet_rhs(geo.lp(2, 1), geo.lp(2, 1), 999, 0)


def test_to_dict_fields():
    d = bounds.chevet_rhs(geo.lp(2, 1), geo.lp(2, 1), 1000, 0).to_dict()
    assert {"termK", "termL", "total", "expK", "expL"} <= set(d)
    assert d["total"] == pytest.approx(d["termK"] + d["termL"])


def test_tail_params():
    for K, L in PAIRS:
        tp = bounds.tail_params(K, L)
        assert tp.sigma_prime <= tp.sigma
    assert bounds.tail_params(geo.lp(9, 2), geo.lp(4, 2)).sigma == 1
    with pytest.raises(ValueError):
        bounds.TailParams(1.0, 2.0, 1.0, 0.5)


def test_tail_shape():
    assert bounds.tail_shape(0.0, 2.0, 1.0, 3.0) == 1
    assert bounds.tail_shape(1.0, 1.0, 1.0, 1.0) == pytest.approx(math.exp(-1))
    t = np.linspace(0, 10, 200)
    assert np.all(np.diff(bounds.tail_shape(t, 2.0, 0.5, 0.7)) <= 0)
    with pytest.raises(ValueError):
        bounds.tail_shape(-1.0, 1, 1, 1)
    with pytest.raises(ValueError):
        bounds.tail_shape(1.0, 1, 1, 0)


def test_subm_bound():
    assert bounds.subm_bound(1, 1, 1, 1) == pytest.approx(2 * math.log(3))
    assert bounds.subm_bound(5, 5, 5, 5) == pytest.approx(2 * math.sqrt(5) * math.log(3))
    assert bounds.subm_bound(2, 3, 7, 11) == pytest.approx(bounds.subm_bound(3, 2, 11, 7))
    with pytest.raises(ValueError):
        bounds.subm_bound(3, 1, 2, 1)


def test_estUm():
    assert bounds.estUm_closed(1, 1) == pytest.approx(math.log(3))
    e = bounds.estUm_exact(1, 1, 20000, 12)
    assert e.within(2**-0.5)
    # l = n: the top-n norm is the full Euclidean norm, whose square has mean n
    n = 9
    sq = bounds.expected_norm(lambda v: geo.top_l2(v, n) ** 2, n, 20000, 14)
    assert sq.within(n)
    assert bounds.estUm_exact(n, n, 20000, 14).mean ** 2 <= n
    with pytest.raises(ValueError):
        bounds.estUm_closed(3, 2)


def test_lonenorm_bound():
    assert bounds.lonenorm_bound(1, 1) == 1
    assert bounds.lonenorm_bound(7, 1) == 7
    assert bounds.lonenorm_bound(1, 50) == pytest.approx(1 + math.log(50))


def rip_oracle(theta, n, N, c):
    th, nn, NN, cc = sympy.Rational(theta), sympy.Integer(n), sympy.Integer(N), sympy.Rational(c)
    lt = sympy.log(3 / th)
    if N <= n:
        expr = sympy.Min(NN, cc * th**2 * nn / lt**3)
    else:
        L = sympy.log(3 * NN / (th * nn))
        expr = sympy.Min(NN, cc * th * nn / L * sympy.Min(1 / L, th / lt**2))
    return max(int(sympy.floor(sympy.N(expr, 50))), 0)


@pytest.mark.parametrize(
    "theta,n,N,c",
    [("1/2", 1024, 1024, 1), ("1/2", 1024, 4096, 1), ("1/10", 500, 100, 3), ("9/10", 64, 10**6, 2), ("1/4", 10**6, 10, 1)],
)
def test_rip_threshold_symbolic(theta, n, N, c):
    r = bounds.rip_admissible_m(float(sympy.Rational(theta)), n, N, c)
    assert r.m == rip_oracle(theta, n, N, c)
    assert r.branch == ("i" if N <= n else "ii")


def test_rip_threshold_clamps_and_monotone():
    assert bounds.rip_admissible_m(0.5, 10**6, 10).m == 10
    ms = [bounds.rip_admissible_m(0.3, n, 200, 1.0).m for n in range(50, 5000, 50)]
    assert all(b >= a for a, b in zip(ms, ms[1:]))
    assert bounds.rip_admissible_m(0.5, 4, 4).m == 0
    with pytest.raises(ValueError):
        bounds.rip_admissible_m(1.0, 4, 4)


def test_rip_success_probability_separate_constant():
    p1 = bounds.rip_success_probability(0.5, 1024, 1024, 44, c=1.0)
    p2 = bounds.rip_success_probability(0.5, 1024, 1024, 44, c=2.0)
    assert p1 < p2 < 1
