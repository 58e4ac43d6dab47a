"""Symmetric convex bodies, their norms, and operator norms between them.

A body is described by :class:`BallSpec`.  Everything is built on two
primitives evaluated row-wise over the last axis of an array:

* ``support(v, K) = sup_{x in K} <x, v>``  (the norm with unit ball ``K°``)
* ``support_point(v, K)``, a maximizer of that supremum.

The gauge of ``K`` is then ``support(., polar(K))``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

SHAPES = ("lp", "sparse_hull", "sparse_polar")
ENUM_LIMIT = 20
RESTARTS = 32


@dataclass(frozen=True)
class BallSpec:
    """Unit ball in ``R^dim``.

    ``lp``: the l_p ball (``param = p``, may be ``inf``).
    ``sparse_hull``: convex hull of ``param``-sparse unit vectors.
    ``sparse_polar``: polar of that hull; its gauge is the Euclidean norm of
    the ``param`` largest coordinates in absolute value.
    """

    dim: int
    shape: str
    param: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.shape == "lp":
            if not self.param >= 1:
                raise ValueError("p must be >= 1")
        else:
            if int(self.param) != self.param or not 1 <= self.param <= self.dim:
                raise ValueError("sparsity must be an integer in [1, dim]")
            object.__setattr__(self, "param", int(self.param))

    @property
    def sparsity(self):
        return int(self.param)

    def polar(self):
        if self.shape == "lp":
            return BallSpec(self.dim, "lp", conjugate(self.param))
        if self.shape == "sparse_hull":
            return BallSpec(self.dim, "sparse_polar", self.param)
        return BallSpec(self.dim, "sparse_hull", self.param)

    def is_lp(self, p):
        return self.shape == "lp" and self.param == p

    def to_dict(self):
        param = self.param
        if param == np.inf:
            param = "inf"
        return {"dim": self.dim, "shape": self.shape, "param": param}

    @classmethod
    def from_dict(cls, d):
        param = d["param"]
        param = np.inf if param in ("inf", "Infinity") else float(param)
        return cls(int(d["dim"]), d["shape"], param)


def lp(dim, p):
    return BallSpec(dim, "lp", float(p))


def sparse_hull(dim, m):
    return BallSpec(dim, "sparse_hull", m)


def sparse_polar(dim, k):
    return BallSpec(dim, "sparse_polar", k)


def conjugate(p):
    if p == 1:
        return np.inf
    if p == np.inf:
        return 1.0
    return p / (p - 1.0)


def _sorted_abs(v):
    a = np.abs(v)
    order = np.argsort(-a, axis=-1, kind="stable")
    return np.take_along_axis(a, order, axis=-1), order


def top_l2(v, m):
    """Euclidean norm of the ``m`` largest entries (in absolute value)."""
    v = np.asarray(v, dtype=float)
    if m >= v.shape[-1]:
        return np.sqrt(np.sum(v * v, axis=-1))
    a = -np.partition(-np.abs(v), m - 1, axis=-1)[..., :m]
    return np.sqrt(np.sum(a * a, axis=-1))


def _ksupport_split(z, k):
    # z sorted nonincreasing along last axis.  Finds r in [0, k) with
    # z[k-r-2] > tail_r/(r+1) >= z[k-r-1] (0-based), tail_r = sum z[k-r-1:].
    total = z.sum(axis=-1)
    csum = np.cumsum(z, axis=-1)
    viol = []
    for r in range(k):
        head = k - r - 1
        tail = total - (csum[..., head - 1] if head > 0 else 0.0)
        avg = tail / (r + 1)
        left = z[..., head - 1] if head > 0 else np.inf
        viol.append(np.maximum(avg - left, 0.0) + np.maximum(z[..., head] - avg, 0.0))
    viol = np.stack(viol, axis=-1)
    ok = viol <= 1e-12 * np.maximum(total, 1.0)[..., None]
    # ties make several r valid (all give the same norm); take the smallest
    return np.where(ok.any(axis=-1), np.argmax(ok, axis=-1), np.argmin(viol, axis=-1))


def ksupport_norm(v, k):
    """Gauge of the convex hull of ``k``-sparse unit vectors."""
    v = np.asarray(v, dtype=float)
    z, _ = _sorted_abs(v)
    r = _ksupport_split(z, k)
    head = k - r - 1
    idx = np.arange(z.shape[-1])
    in_head = idx < head[..., None]
    head_sq = np.sum(np.where(in_head, z * z, 0.0), axis=-1)
    tail = np.sum(np.where(in_head, 0.0, z), axis=-1)
    return np.sqrt(head_sq + tail * tail / (r + 1))


def _ksupport_point(v, k):
    z, order = _sorted_abs(v)
    r = _ksupport_split(z, k)
    nu = ksupport_norm(v, k)
    head = k - r - 1
    idx = np.arange(z.shape[-1])
    in_head = idx < head[..., None]
    tail = np.sum(np.where(in_head, 0.0, z), axis=-1)
    safe = np.where(nu > 0, nu, 1.0)
    mag_sorted = np.where(in_head, z, (tail / (r + 1))[..., None]) / safe[..., None]
    mag = np.empty_like(mag_sorted)
    np.put_along_axis(mag, order, mag_sorted, axis=-1)
    sign = np.sign(v)
    out = mag * sign
    # zero vector: any point of the body is a maximizer
    zero = nu == 0
    if np.any(zero):
        e = np.zeros(v.shape[-1])
        e[0] = 1.0
        out[zero] = e
    return out


def support(v, K):
    """``sup_{x in K} <x, v>`` along the last axis; the norm with unit ball ``K°``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != K.dim:
        raise ValueError(f"dimension mismatch: {v.shape[-1]} vs {K.dim}")
    if K.shape == "lp":
        q = conjugate(K.param)
        if q == np.inf:
            return np.max(np.abs(v), axis=-1)
        if q == 1:
            return np.sum(np.abs(v), axis=-1)
        if q == 2:
            return np.sqrt(np.sum(v * v, axis=-1))
        return np.sum(np.abs(v) ** q, axis=-1) ** (1.0 / q)
    if K.shape == "sparse_hull":
        return top_l2(v, K.sparsity)
    return ksupport_norm(v, K.sparsity)


dual_norm = support


def gauge(x, K):
    """Minkowski functional of ``K``."""
    return support(x, K.polar())


def support_point(v, K):
    """A point of ``K`` attaining ``support(v, K)`` (row-wise)."""
    v = np.asarray(v, dtype=float)
    if K.shape == "lp":
        p = K.param
        if p == 1:
            i = np.argmax(np.abs(v), axis=-1)
            out = np.zeros_like(v)
            s = np.sign(np.take_along_axis(v, i[..., None], axis=-1))
            s[s == 0] = 1.0
            np.put_along_axis(out, i[..., None], s, axis=-1)
            return out
        if p == np.inf:
            s = np.sign(v)
            s[s == 0] = 1.0
            return s
        q = conjugate(p)
        norm = support(v, K)
        safe = np.where(norm > 0, norm, 1.0)[..., None]
        out = np.sign(v) * (np.abs(v) / safe) ** (q - 1)
        if p == 2:
            out = v / safe
        return _fix_zero(out, norm)
    if K.shape == "sparse_hull":
        m = K.sparsity
        _, order = _sorted_abs(v)
        mask = np.zeros(v.shape, dtype=bool)
        np.put_along_axis(mask, order[..., :m], True, axis=-1)
        w = np.where(mask, v, 0.0)
        norm = np.sqrt(np.sum(w * w, axis=-1))
        safe = np.where(norm > 0, norm, 1.0)[..., None]
        return _fix_zero(w / safe, norm)
    return _ksupport_point(v, K.sparsity)


def _fix_zero(out, norm):
    zero = norm == 0
    if np.any(zero):
        e = np.zeros(out.shape[-1])
        e[0] = 1.0
        out[zero] = e
    return out


def circumradius(K):
    """R(K) = sup_{x in K} |x|."""
    if K.shape == "lp":
        p = K.param
        if p <= 2:
            return 1.0
        return float(K.dim ** (0.5 - 1.0 / p))
    if K.shape == "sparse_hull":
        return 1.0
    # flat vector of top-k Euclidean norm one
    return float(np.sqrt(K.dim / K.sparsity))


def codomain_radius(L):
    """R(L°) = sup_{|x| = 1} ||x||_L."""
    return circumradius(L.polar())


def max_sup_norm(K):
    """sup_{x in K} ||x||_inf, i.e. max_i ||e_i||_{K°}."""
    # every shape here is permutation invariant
    e = np.zeros(K.dim)
    e[0] = 1.0
    return float(support(e, K))


@dataclass
class OpNormResult:
    value: float
    exact: bool
    witness_x: np.ndarray | None = None
    witness_y: np.ndarray | None = None
    support: tuple | None = None

    def to_dict(self):
        d = {"value": float(self.value), "exact": bool(self.exact)}
        if self.witness_x is not None:
            d["witnessX"] = [float(t) for t in self.witness_x]
        if self.witness_y is not None:
            d["witnessY"] = [float(t) for t in self.witness_y]
        return d

    @classmethod
    def from_dict(cls, d):
        wx = d.get("witnessX")
        wy = d.get("witnessY")
        return cls(
            float(d["value"]),
            bool(d["exact"]),
            None if wx is None else np.asarray(wx, dtype=float),
            None if wy is None else np.asarray(wy, dtype=float),
        )


def _as_sparse_pair(K, L):
    """Map (K, L) to (m, k) when the pair is (conv U_m, U_k°) up to l2 aliases."""
    if K.shape == "sparse_hull":
        m = K.sparsity
    elif K.is_lp(2):
        m = K.dim
    else:
        return None
    if L.shape == "sparse_polar":
        k = L.sparsity
    elif L.is_lp(2):
        k = L.dim
    else:
        return None
    if K.shape != "sparse_hull" and L.shape != "sparse_polar":
        return None
    return m, k


def _sign_vectors(d):
    # first coordinate fixed to +1: x and -x give the same norm
    grid = np.array(list(itertools.product((1.0, -1.0), repeat=d - 1)), dtype=float)
    grid = grid.reshape(-1, d - 1)
    return np.hstack([np.ones((grid.shape[0], 1)), grid])


def _enumerate_cube(G, L, chunk=1 << 14):
    """max over sign vectors x of ||G x||_L."""
    N = G.shape[1]
    best, best_x = -np.inf, None
    signs = _sign_vectors(N)
    for s in range(0, signs.shape[0], chunk):
        xs = signs[s : s + chunk]
        vals = gauge(xs @ G.T, L)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_x = float(vals[i]), xs[i]
    return best, best_x


def alternating_lower_bound(G, K, L, restarts=RESTARTS, seed=0, iters=200):
    """Lower bound on ||G : K -> L|| by alternating support-point updates.

    Each step replaces ``x`` by the point of ``K`` maximizing ``<G^T y, x>``
    and ``y`` by the point of ``L°`` maximizing ``<G x, y>``; the bilinear
    value never decreases.
    """
    G = np.asarray(G, dtype=float)
    Lp = L.polar()
    rng = np.random.default_rng(seed)
    starts = rng.standard_normal((restarts, G.shape[1]))
    # deterministic first start: the all-ones direction
    starts[0] = 1.0
    x = support_point(starts, K)
    val = np.full(restarts, -np.inf)
    y = None
    for _ in range(iters):
        y = support_point(x @ G.T, Lp)
        x = support_point(y @ G, K)
        new = np.einsum("ri,ij,rj->r", y, G, x)
        if np.all(new <= val + 1e-13 * np.maximum(1.0, np.abs(new))):
            val = np.maximum(val, new)
            break
        val = np.maximum(val, new)
    vals = np.einsum("ri,ij,rj->r", y, G, x)
    i = int(np.argmax(vals))
    return OpNormResult(float(vals[i]), False, x[i], y[i])


def op_norm(G, K, L, seed=0):
    """||G : (R^N, K) -> (R^n, L)|| for an ``n x N`` matrix ``G``.

    Exact for: K = l1, L = l_inf, (l2, l2), sparse pairs (delegated to
    :func:`chevetlab.submatrix.gamma_km` when its enumeration budget allows),
    K = l_inf with N <= 20 and L = l1 with n <= 20.  Anything else returns an
    alternating-maximization lower bound flagged ``exact=False``.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2:
        raise ValueError("expected a matrix")
    n, N = G.shape
    if K.dim != N or L.dim != n:
        raise ValueError(f"shape {G.shape} does not match K.dim={K.dim}, L.dim={L.dim}")
    Lp = L.polar()

    pair = _as_sparse_pair(K, L)
    if pair is not None:
        from .submatrix import BudgetExceeded, gamma_km

        m, k = pair
        try:
            return gamma_km(G, k, m, mode="exact")
        except BudgetExceeded:
            return gamma_km(G, k, m, mode="heuristic", seed=seed)

    if K.is_lp(1):
        vals = gauge(G.T, L)
        j = int(np.argmax(vals))
        x = np.zeros(N)
        x[j] = 1.0
        y = support_point(G[:, j], Lp)
        return OpNormResult(float(vals[j]), True, x, y)

    if L.is_lp(np.inf):
        vals = support(G, K)
        i = int(np.argmax(vals))
        x = support_point(G[i], K)
        y = np.zeros(n)
        y[i] = 1.0
        return OpNormResult(float(vals[i]), True, x, y)

    if K.is_lp(2) and L.is_lp(2):
        u, s, vt = np.linalg.svd(G)
        return OpNormResult(float(s[0]), True, vt[0], u[:, 0])

    if K.is_lp(np.inf) and N <= ENUM_LIMIT:
        val, x = _enumerate_cube(G, L)
        return OpNormResult(val, True, x, support_point(G @ x, Lp))

    if L.is_lp(1) and n <= ENUM_LIMIT:
        # ||G : K -> l1|| = ||G^T : l_inf -> K°||
        val, y = _enumerate_cube(G.T, K.polar())
        return OpNormResult(val, True, support_point(y @ G, K), y)

    return alternating_lower_bound(G, K, L, seed=seed)


def batch_op_norm(Gs, K, L):
    """Exact ``||G : K -> L||`` for a stack of matrices, closed-form pairs only.

    Supports K = l1, L = l_inf and (l2, l2); raises otherwise.
    """
    Gs = np.asarray(Gs, dtype=float)
    if K.is_lp(1):
        return np.max(gauge(np.swapaxes(Gs, -1, -2), L), axis=-1)
    if L.is_lp(np.inf):
        return np.max(support(Gs, K), axis=-1)
    if K.is_lp(2) and L.is_lp(2):
        return np.linalg.norm(Gs, ord=2, axis=(-2, -1))
    raise ValueError("no closed form for this pair")
