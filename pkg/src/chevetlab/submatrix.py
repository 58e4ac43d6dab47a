"""Combinatorial suprema over submatrices: Gamma_{k,m} and the RIC delta_m.

Both come in an exact mode (enumeration of supports, refused above
``BUDGET`` candidates) and a heuristic mode that returns a lower bound
attained by an explicit support.  Supports are reported 0-based internally;
:meth:`to_dict` methods emit the 1-based convention.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .geometry import OpNormResult

BUDGET = 10**6
RESTARTS = 8
_CHUNK = 1 << 21


class BudgetExceeded(ValueError):
    """Exact enumeration would exceed the support budget."""


@dataclass(frozen=True)
class SupportPair:
    rows: tuple
    cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(sorted(int(i) for i in self.rows)))
        object.__setattr__(self, "cols", tuple(sorted(int(i) for i in self.cols)))

    def to_dict(self):
        return {"rows": [i + 1 for i in self.rows], "cols": [j + 1 for j in self.cols]}


@dataclass
class RicResult:
    delta: float
    support: tuple
    x: np.ndarray
    exact: bool

    def to_dict(self):
        return {
            "delta": float(self.delta),
            "support": [i + 1 for i in self.support],
            "x": [float(t) for t in self.x],
            "exact": bool(self.exact),
        }


def spectral_norms(blocks):
    """Largest singular value of each matrix in a ``(B, k, m)`` stack."""
    blocks = np.asarray(blocks, dtype=float)
    B, k, m = blocks.shape
    if k == 1 or m == 1:
        return np.sqrt(np.sum(blocks * blocks, axis=(1, 2)))
    if k == 2 and m == 2:
        a, b = blocks[:, 0, 0], blocks[:, 0, 1]
        c, d = blocks[:, 1, 0], blocks[:, 1, 1]
        f = a * a + b * b + c * c + d * d
        det = a * d - b * c
        disc = np.sqrt(np.maximum(f * f - 4 * det * det, 0.0))
        return np.sqrt((f + disc) / 2)
    if k <= m:
        gram = blocks @ np.swapaxes(blocks, 1, 2)
    else:
        gram = np.swapaxes(blocks, 1, 2) @ blocks
    return np.sqrt(np.maximum(np.linalg.eigvalsh(gram)[:, -1], 0.0))


def _top_l2_with_idx(v, m):
    idx = np.sort(np.argsort(-np.abs(v), kind="stable")[:m])
    return float(np.sqrt(np.sum(v[idx] ** 2))), idx


def _exact_gamma_one_side(G, k, m):
    # k == 1: best row, its m largest entries; m == 1 by transposition
    if k == 1:
        best, arg = -1.0, None
        for i in range(G.shape[0]):
            val, idx = _top_l2_with_idx(G[i], m)
            if val > best:
                best, arg = val, (i, idx)
        i, cols = arg
        pair = SupportPair((i,), cols)
    else:
        best, arg = -1.0, None
        for j in range(G.shape[1]):
            val, idx = _top_l2_with_idx(G[:, j], k)
            if val > best:
                best, arg = val, (j, idx)
        j, rows = arg
        pair = SupportPair(rows, (j,))
    return best, pair


def _witness(G, pair):
    sub = G[np.ix_(pair.rows, pair.cols)]
    # decompose the tall orientation so that G and G^T give identical values
    if sub.shape[0] < sub.shape[1]:
        v, s, ut = np.linalg.svd(sub.T)
        u, vt = ut.T, v.T
    else:
        u, s, vt = np.linalg.svd(sub)
    x = np.zeros(G.shape[1])
    y = np.zeros(G.shape[0])
    x[list(pair.cols)] = vt[0]
    y[list(pair.rows)] = u[:, 0]
    return float(s[0]), x, y


def _result(G, pair, exact):
    val, x, y = _witness(G, pair)
    return OpNormResult(val, exact, x, y, support=pair)


def gamma_km_value_table(G, k, m):
    """Spectral norms of all ``k x m`` submatrices, shape ``(C(n,k), C(N,m))``.

    Row/column combinations are in lexicographic order.
    """
    n, N = G.shape
    rows = np.array(list(itertools.combinations(range(n), k)), dtype=np.intp)
    cols = np.array(list(itertools.combinations(range(N), m)), dtype=np.intp)
    table = np.empty((rows.shape[0], cols.shape[0]))
    per = max(1, _CHUNK // max(1, rows.shape[0] * k * m))
    sub_rows = G[rows]  # (R, k, N)
    for s in range(0, cols.shape[0], per):
        c = cols[s : s + per]
        blocks = sub_rows[:, :, c]  # (R, k, C, m)
        blocks = np.transpose(blocks, (0, 2, 1, 3)).reshape(-1, k, m)
        table[:, s : s + per] = spectral_norms(blocks).reshape(rows.shape[0], -1)
    return table, rows, cols


def gamma_km(G, k, m, mode="exact", seed=0, restarts=RESTARTS):
    """Gamma_{k,m}: the largest spectral norm of a ``k x m`` submatrix of ``G``.

    ``mode="exact"`` enumerates all support pairs (ties go to the
    lexicographically smallest) and raises :class:`BudgetExceeded` when there
    are more than ``BUDGET`` of them; ``k == 1`` or ``m == 1`` is solved
    exactly without enumeration.  ``mode="heuristic"`` returns a lower bound.
    """
    G = np.asarray(G, dtype=float)
    n, N = G.shape
    if not (1 <= k <= n and 1 <= m <= N):
        raise ValueError(f"need 1 <= k <= {n} and 1 <= m <= {N}")
    if mode not in ("exact", "heuristic"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "heuristic":
        pair = _heuristic_support(G, k, m, seed, restarts)
        return _result(G, pair, False)
    if k == 1 or m == 1:
        _, pair = _exact_gamma_one_side(G, k, m)
        return _result(G, pair, True)
    count = comb(n, k) * comb(N, m)
    if count > BUDGET:
        raise BudgetExceeded(f"C({n},{k})*C({N},{m}) = {count} support pairs exceeds {BUDGET}")
    table, rows, cols = gamma_km_value_table(G, k, m)
    r, c = np.unravel_index(int(np.argmax(table)), table.shape)
    return _result(G, SupportPair(rows[r], cols[c]), True)


def _table_max_2x2(G):
    n, N = G.shape
    ri, rj = np.triu_indices(n, 1)
    ca, cb = np.triu_indices(N, 1)
    S = G * G
    P = S[:, ca] + S[:, cb]  # (n, C)
    f = P[ri] + P[rj]
    Ga, Gb = G[:, ca], G[:, cb]
    det = Ga[ri] * Gb[rj] - Gb[ri] * Ga[rj]
    disc = np.sqrt(np.maximum(f * f - 4 * det * det, 0.0))
    return float(np.sqrt(np.max(f + disc) / 2))


def gamma_km_value(G, k, m, seed=0):
    """Value of :func:`gamma_km_auto` without building a witness.

    Returns ``(value, exact)``.
    """
    G = np.asarray(G, dtype=float)
    n, N = G.shape
    if k == 1:
        return float(np.max(top_l2_rows(G, m))), True
    if m == 1:
        return float(np.max(top_l2_rows(G.T, k))), True
    if comb(n, k) * comb(N, m) <= BUDGET:
        if k == 2 and m == 2:
            return _table_max_2x2(G), True
        return float(gamma_km_value_table(G, k, m)[0].max()), True
    pair = _heuristic_support(G, k, m, seed, RESTARTS)
    return float(spectral_norms(G[np.ix_(pair.rows, pair.cols)][None])[0]), False


def top_l2_rows(G, m):
    a = -np.partition(-np.abs(G), m - 1, axis=1)[:, :m]
    return np.sqrt(np.sum(a * a, axis=1))


def gamma_km_auto(G, k, m, seed=0):
    """Exact when the budget allows, heuristic lower bound otherwise."""
    try:
        return gamma_km(G, k, m, mode="exact")
    except BudgetExceeded:
        return gamma_km(G, k, m, mode="heuristic", seed=seed)


def _sparse_power(G, k, m, x, iters=100):
    # alternate: best k rows for G x, then best m columns for G^T y
    J = I = None
    for _ in range(iters):
        gx = G @ x
        J_new = np.sort(np.argsort(-np.abs(gx), kind="stable")[:k])
        y = np.zeros(G.shape[0])
        y[J_new] = gx[J_new]
        y /= max(np.linalg.norm(y), 1e-300)
        gy = G.T @ y
        I_new = np.sort(np.argsort(-np.abs(gy), kind="stable")[:m])
        x = np.zeros(G.shape[1])
        x[I_new] = gy[I_new]
        x /= max(np.linalg.norm(x), 1e-300)
        if J is not None and np.array_equal(J, J_new) and np.array_equal(I, I_new):
            break
        J, I = J_new, I_new
    return J_new, I_new


def _swap_search(G, J, I):
    # best-improvement 1-swap local search, rows then columns, until fixpoint
    n, N = G.shape
    J, I = list(J), list(I)
    cur = spectral_norms(G[np.ix_(J, I)][None])[0]
    improved = True
    while improved:
        improved = False
        for axis in (0, 1):
            S = J if axis == 0 else I
            outside = np.setdiff1d(np.arange(n if axis == 0 else N), S)
            if outside.size == 0:
                continue
            cands = []
            for pos in range(len(S)):
                for o in outside:
                    T = S.copy()
                    T[pos] = o
                    cands.append(T)
            cands = np.array(cands, dtype=np.intp)
            if axis == 0:
                blocks = G[cands][:, :, I]
            else:
                blocks = np.transpose(G[:, cands][J], (1, 0, 2))
            vals = spectral_norms(blocks)
            b = int(np.argmax(vals))
            if vals[b] > cur * (1 + 1e-12):
                cur = vals[b]
                if axis == 0:
                    J = sorted(cands[b].tolist())
                else:
                    I = sorted(cands[b].tolist())
                improved = True
    return SupportPair(J, I), cur


def _heuristic_support(G, k, m, seed, restarts):
    n, N = G.shape
    rng = np.random.default_rng(seed)
    starts = []
    i0, j0 = np.unravel_index(int(np.argmax(np.abs(G))), G.shape)
    e = np.zeros(N)
    e[j0] = 1.0
    starts.append(e)
    for _ in range(restarts - 1):
        starts.append(rng.standard_normal(N))
    best, best_pair = -1.0, None
    for x0 in starts:
        J, I = _sparse_power(G, k, m, x0)
        pair, val = _swap_search(G, J, I)
        if val > best or (val == best and (pair.rows, pair.cols) < (best_pair.rows, best_pair.cols)):
            best, best_pair = val, pair
    return best_pair


def _ric_deviation(gram_blocks):
    w = np.linalg.eigvalsh(gram_blocks)
    return np.maximum(np.abs(w[:, 0] - 1.0), np.abs(w[:, -1] - 1.0))


def _ric_result(G, support, exact):
    n, N = G.shape
    S = list(support)
    block = G[:, S].T @ G[:, S] / n - np.eye(len(S))
    w, v = np.linalg.eigh(block)
    i = int(np.argmax(np.abs(w)))
    x = np.zeros(N)
    x[S] = v[:, i]
    return RicResult(float(abs(w[i])), tuple(int(s) for s in S), x, exact)


def ric(G, m, mode="exact", seed=0, restarts=RESTARTS):
    """Restricted isometry constant of order ``m`` of ``G / sqrt(n)``.

    delta = max over ``|I| = m`` of ``|| G_I^T G_I / n - Id ||``.
    """
    G = np.asarray(G, dtype=float)
    n, N = G.shape
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= {N}")
    if mode not in ("exact", "heuristic"):
        raise ValueError(f"unknown mode {mode!r}")
    gram = G.T @ G / n
    if mode == "exact":
        count = comb(N, m)
        if count > BUDGET:
            raise BudgetExceeded(f"C({N},{m}) = {count} supports exceeds {BUDGET}")
        cols = np.array(list(itertools.combinations(range(N), m)), dtype=np.intp)
        devs = np.empty(cols.shape[0])
        per = max(1, _CHUNK // (m * m))
        for s in range(0, cols.shape[0], per):
            c = cols[s : s + per]
            devs[s : s + per] = _ric_deviation(gram[c[:, :, None], c[:, None, :]])
        return _ric_result(G, cols[int(np.argmax(devs))], True)

    rng = np.random.default_rng(seed)
    diag_dev = np.abs(np.diag(gram) - 1.0)
    best, best_S = -1.0, None
    for r in range(restarts):
        if r == 0:
            S = [int(np.argmax(diag_dev))]
        else:
            S = [int(rng.integers(N))]
        # greedy growth
        while len(S) < m:
            outside = np.setdiff1d(np.arange(N), S)
            cands = np.array([S + [o] for o in outside], dtype=np.intp)
            vals = _ric_deviation(gram[cands[:, :, None], cands[:, None, :]])
            S = S + [int(outside[int(np.argmax(vals))])]
        cur = _ric_deviation(gram[np.ix_(S, S)][None])[0]
        improved = True
        while improved:
            improved = False
            outside = np.setdiff1d(np.arange(N), S)
            if outside.size == 0:
                break
            cands = []
            for pos in range(m):
                for o in outside:
                    T = list(S)
                    T[pos] = int(o)
                    cands.append(T)
            cands = np.array(cands, dtype=np.intp)
            vals = _ric_deviation(gram[cands[:, :, None], cands[:, None, :]])
            b = int(np.argmax(vals))
            if vals[b] > cur * (1 + 1e-12) + 1e-15:
                cur, S, improved = vals[b], list(cands[b]), True
        S = sorted(int(s) for s in S)
        if cur > best:
            best, best_S = cur, S
    return _ric_result(G, best_S, False)
