import json
import math

import numpy as np
import pytest

from chevetlab import chaining as ch
from chevetlab.montecarlo import substream


def test_chaining_constant_committed():
    g, e = ch.chaining_constants()
    assert max(g, e) <= ch.C_CHAIN < max(g, e) + 0.01


def test_gamma_single_point():
    val, seq = ch.gamma_q_upper(np.array([[1.0, 2.0]]), 2)
    assert val == 0 and len(seq.levels) == 1
    assert ch.gamma_q_exact(np.array([[1.0, 2.0]])) == 0


@pytest.mark.parametrize("v", [0.5, 3.0])
def test_gamma_two_points(v):
    T = np.array([[0.0], [v]])
    assert ch.gamma_q_exact(T, 2) == pytest.approx(v)
    assert ch.gamma_q_upper(T, 2)[0] == pytest.approx(v)


def test_gamma_basis_vectors():
    T = np.eye(4)
    ex = ch.gamma_q_exact(T, 2, "euclidean")
    up, _ = ch.gamma_q_upper(T, 2, "euclidean")
    assert ex <= up <= 4 * ex
    assert ex == pytest.approx(np.sqrt(2))


def brute_exact(T, q, metric):
    # independent oracle: every A0 and every A1 of any admissible size
    import itertools

    D = ch._pairwise(T, metric)
    best = np.inf
    for a0 in range(len(T)):
        for size in range(1, min(4, len(T)) + 1):
            for a1 in itertools.combinations(range(len(T)), size):
                best = min(best, np.max(D[:, a0] + 2 ** (1 / q) * D[:, list(a1)].min(axis=1)))
    return best


@pytest.mark.parametrize("q,metric", [(2, "euclidean"), (1, "sup"), (2, "sup"), (1, "euclidean")])
def test_greedy_within_factor_four(q, metric):
    rng = substream(3)
    for _ in range(25):
        size = int(rng.integers(2, 9))
        T = rng.standard_normal((size, 3))
        ex = ch.gamma_q_exact(T, q, metric)
        assert ex == pytest.approx(brute_exact(T, q, metric))
        up, seq = ch.gamma_q_upper(T, q, metric)
        assert ex - 1e-12 <= up <= 4 * ex
        assert up == pytest.approx(ch.gamma_value(T, seq, q, metric))


def test_admissible_sequence_cardinalities():
    T = substream(1).standard_normal((300, 5))
    _, seq = ch.gamma_q_upper(T, 2)
    for s, a in enumerate(seq.levels):
        assert len(a) <= (1 if s == 0 else 2 ** (2**s))
        assert set(a) <= set(range(300))
    assert len(seq.levels[-1]) == 300
    with pytest.raises(ValueError):
        ch.AdmissibleSequence([[0, 1]])
    with pytest.raises(ValueError):
        ch.AdmissibleSequence([[0], list(range(5))])


def test_mixed_chain_dominates_parts():
    T = substream(2).standard_normal((40, 6))
    g2, _ = ch.gamma_q_upper(T, 2, "euclidean")
    assert ch.mixed_chain_upper(T) >= g2 - 1e-12


def test_size_limits():
    with pytest.raises(ValueError):
        ch.gamma_q_upper(np.zeros((2, 65)))
    with pytest.raises(ValueError):
        ch.gamma_q_exact(np.zeros((9, 2)))
    with pytest.raises(ValueError):
        ch.gamma_q_upper(np.eye(2), q=3)


def test_emp_sup_examples():
    e = ch.emp_sup_process(np.array([[1.0, -2.0]]), "gaussian", 5000, 1)
    assert e.within(0.0)
    e = ch.emp_sup_process(np.array([[-1.0], [1.0]]), "gaussian", 20000, 2)
    assert e.within(math.sqrt(2 / math.pi))
    e = ch.emp_sup_process(np.array([[-1.0], [1.0]]), "exponential", 20000, 2)
    assert e.within(2**-0.5)


def test_emp_sup_against_direct_simulation():
    d = 16
    T = np.vstack([np.eye(d), -np.eye(d)])
    e = ch.emp_sup_process(T, "gaussian", 100_000, 3)
    g = np.random.default_rng(99).standard_normal((10**6, d))
    direct = np.abs(g).max(axis=1)
    se = math.hypot(e.se, direct.std() / 1e3)
    assert abs(e.mean - direct.mean()) <= 3 * se


def test_emp_sup_validation():
    with pytest.raises(ValueError):
        ch.emp_sup_process(np.eye(2), "gaussian", 50, 0)
    with pytest.raises(ValueError):
        ch.emp_sup_process(np.eye(2), "cauchy", 500, 0)


# --- nets -------------------------------------------------------------------------


def test_net_n1_k1():
    H = ch.build_level_net(1, 1)
    (lv,) = H.levels
    assert lv.epsilon == 0.25 and lv.cardinality() <= 9
    pts = lv.points()
    assert len(pts) == lv.cardinality()
    grid = np.linspace(-1, 1, 2001)[:, None]
    d = np.min(np.abs(grid - pts.T), axis=1)
    assert d.max() <= 0.25 + 1e-12


@pytest.mark.parametrize("n,k", [(4, 3), (5, 3), (8, 7)])
def test_net_points_in_cap(n, k):
    for lv in ch.NetHierarchy(n, k).levels:
        if lv.cardinality() > 50_000:
            continue
        pts = lv.points()
        assert np.all(np.linalg.norm(pts, axis=1) <= 1 + 1e-12)
        assert np.all(np.abs(pts).max(axis=1) <= lv.linf_cap + 1e-12)
        assert np.all(np.count_nonzero(pts, axis=1) <= lv.support_size)
        assert all(lv.contains(p) for p in pts[:500])


def cap_points(rng, n, lv, count):
    # rejection sampling: uniform on a random support, kept when inside the cap
    s = min(lv.support_size, n)
    out = []
    while len(out) < count:
        z = np.zeros(n)
        supp = rng.choice(n, s, replace=False)
        z[supp] = rng.uniform(-lv.linf_cap, lv.linf_cap, s)
        if np.linalg.norm(z) <= 1:
            out.append(z)
    return np.array(out)


@pytest.mark.parametrize("n,k", [(1, 1), (3, 3), (4, 3), (6, 3)])
def test_covering_against_brute_force_nearest(n, k):
    rng = substream(4)
    for lv in ch.NetHierarchy(n, k).levels:
        pts = lv.points()
        z = cap_points(rng, n, lv, 10**4)
        nearest = np.array([lv.distance(zz, pts).min() for zz in z[:2000]])
        assert nearest.max() <= lv.epsilon + 1e-12
        assert np.all(lv.distance(z, lv.quantize(z)) <= lv.epsilon + 1e-12)


@pytest.mark.parametrize("k", [1, 3, 7])
def test_cardinality_bound_exact(k):
    for n in range(k, 17):
        for lv in ch.NetHierarchy(n, k).levels:
            assert lv.cardinality() <= lv.cardinality_bound()
            assert lv.growth_constant() > 0


def test_hierarchy_validation():
    with pytest.raises(ValueError):
        ch.NetHierarchy(8, 2)
    with pytest.raises(ValueError):
        ch.NetHierarchy(2, 3)
    with pytest.raises(ValueError):
        ch.NetHierarchy(65, 7)


def test_hierarchy_json_roundtrip():
    H = ch.NetHierarchy(3, 3)
    d = json.loads(json.dumps(H.to_dict()))
    assert ch.NetHierarchy.from_dict(d) == H
    for lv, ld in zip(H.levels, d["levels"]):
        assert ld["epsilon"] == lv.epsilon
        pts = np.zeros((len(ld["points"]), 3))
        for row, enc in zip(pts, ld["points"]):
            for idx, val in enc:
                row[idx - 1] = val
        assert np.array_equal(pts, lv.points())


def test_large_levels_omit_points():
    d = ch.NetHierarchy(16, 7).to_dict(max_points=1000)
    assert all(("points" in lv) == (lv["cardinality"] <= 1000) for lv in d["levels"])


def test_decompose_basis_vector():
    dec = ch.decompose_sparse(np.eye(5)[0], ch.NetHierarchy(5, 1))
    assert dec.error <= 0.25
    assert dec.error == 0


@pytest.mark.parametrize("n,k", [(7, 7), (12, 3), (16, 7), (16, 1)])
def test_decompose_random(n, k):
    rng = substream(5)
    H = ch.NetHierarchy(n, k)
    for _ in range(500):
        x = np.zeros(n)
        supp = rng.choice(n, int(rng.integers(1, k + 1)), replace=False)
        x[supp] = rng.laplace(size=len(supp))
        x /= np.linalg.norm(x)
        dec = ch.decompose_sparse(x, H)
        assert dec.error**2 <= 1 / 8
        assert dec.disjoint
        assert set(np.flatnonzero(dec.approx)) <= set(np.flatnonzero(x))
        for lv, piece in zip(H.levels, dec.pieces):
            assert lv.contains(piece)


def test_decompose_validation():
    H = ch.NetHierarchy(4, 1)
    with pytest.raises(ValueError):
        ch.decompose_sparse(np.array([0.6, 0.8, 0, 0]), H)
    with pytest.raises(ValueError):
        ch.decompose_sparse(np.array([2.0, 0, 0, 0]), H)
    with pytest.raises(ValueError):
        ch.decompose_sparse(np.ones(3) / np.sqrt(3), H)
