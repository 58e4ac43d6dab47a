"""gamma_q functionals on finite sets and leveled nets of sparse vectors.

Convention: an admissible sequence is ``A_0, A_1, ...`` with ``|A_0| = 1``,
``|A_s| <= 2^(2^s)`` and ``A_s`` a subset of ``T``; the functional sums
``2^(s/q) dist(x, A_s)`` from ``s = 0``.

Chaining constant
-----------------
For any admissible sequence and any choice of projections ``pi_s(t) in A_s``
(with ``pi_S(t) = t`` once ``A_S = T``), write ``d_s = |t - pi_s t|`` and
``b_s = ||t - pi_s t||_inf``.

*Gaussian.*  Union-bound the increments over the at most
``|A_s| |A_{s-1}|`` pairs at level ``s`` with threshold
``u 2^(s/2) |a - b|``.  Off an event of probability
``p_g(u) = sum_s 2 |A_s||A_{s-1}| exp(-u^2 2^(s-1))`` we get
``sup_t X_t - X_{t_0} <= (1 + sqrt2) u sup_t sum_s 2^(s/2) d_s``.
Integrating over ``u`` gives
``E sup <= (1 + sqrt2) * int_0^inf min(1, p_g) du * gamma``.

*Symmetric exponential (variance 1).*  The moment generating function gives
``P(|<a, E>| > v) <= 2 exp(-min(v^2 / (4|a|^2), v / (2||a||_inf)))``.  With
threshold ``u (2 * 2^(s/2) |D| + 2 * 2^s ||D||_inf)`` each pair fails with
probability at most ``2 exp(-u 2^s)`` for ``u >= 1``, and off the bad event
``sup_t X_t - X_{t_0} <= 6 u sup_t sum_s (2^(s/2) d_s + 2^s b_s)``.

:data:`C_CHAIN` is the larger of the two resulting constants, rounded up.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad
from scipy.special import logsumexp

from .ensembles import exponential
from .montecarlo import draw_values, summarize

MAX_POINTS = 4096
MAX_DIM = 64
MAX_EXACT = 8
MAX_NET_DIM = 64

C_CHAIN = 10.66


def _log_pairs(s):
    # log(|A_s| |A_{s-1}|) with |A_0| = 1 and |A_s| = 2^(2^s)
    prev = 0.0 if s == 1 else 2 ** (s - 1)
    return (2**s + prev) * math.log(2.0)


def _tail_gauss(u, levels=60):
    terms = [math.log(2.0) + _log_pairs(s) - u * u * 2 ** (s - 1) for s in range(1, levels)]
    return min(1.0, math.exp(min(0.0, logsumexp(terms))))


def _tail_exp(u, levels=60):
    if u < 1:
        return 1.0
    terms = [math.log(2.0) + _log_pairs(s) - u * 2**s for s in range(1, levels)]
    return min(1.0, math.exp(min(0.0, logsumexp(terms))))


def chaining_constants():
    """(Gaussian, exponential) constants from the union-bound chaining argument."""
    ig = quad(_tail_gauss, 0, 60, points=[1, 1.5, 2, 3], limit=400)[0]
    ie = quad(_tail_exp, 0, 60, points=[1, 1.1, 1.5, 2, 3], limit=400)[0]
    return (1 + math.sqrt(2)) * ig, 6 * ie


def _as_points(T):
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[0] < 1:
        raise ValueError("T must contain at least one point")
    if T.shape[0] > MAX_POINTS or T.shape[1] > MAX_DIM:
        raise ValueError(f"T limited to {MAX_POINTS} points in dimension <= {MAX_DIM}")
    return T


def _pairwise(T, metric):
    diff = T[:, None, :] - T[None, :, :]
    if metric == "euclidean":
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if metric == "sup":
        return np.max(np.abs(diff), axis=-1)
    raise ValueError(f"unknown metric {metric!r}")


def _dist_to(x, pts, metric):
    diff = x[:, None, :] - pts[None, :, :]
    if metric == "euclidean":
        d = np.sqrt(np.sum(diff * diff, axis=-1))
    else:
        d = np.max(np.abs(diff), axis=-1)
    return d.min(axis=1)


@dataclass
class AdmissibleSequence:
    """Levels ``A_s`` as index arrays into the point set."""

    levels: list = field(default_factory=list)

    def __post_init__(self):
        for s, a in enumerate(self.levels):
            cap = 1 if s == 0 else 2 ** (2**s)
            if len(a) > cap or (s == 0 and len(a) != 1):
                raise ValueError(f"level {s} has {len(a)} points, allowed {cap}")


def farthest_point_order(T, metric="euclidean"):
    """Farthest-point traversal started at the point nearest the centroid."""
    T = _as_points(T)
    c = T.mean(axis=0)
    start = int(np.argmin(_dist_to(T, c[None, :], metric)))
    order = [start]
    d = _dist_to(T, T[[start]], metric)
    for _ in range(T.shape[0] - 1):
        nxt = int(np.argmax(d))
        if d[nxt] == 0:
            # duplicates: append the rest in index order
            taken = set(order)
            order.extend(i for i in range(T.shape[0]) if i not in taken)
            break
        order.append(nxt)
        d = np.minimum(d, _dist_to(T, T[[nxt]], metric))
    return np.array(order, dtype=np.intp)


def sequence_from_order(order):
    size = len(order)
    levels = [order[:1]]
    s = 1
    while len(levels[-1]) < size:
        levels.append(order[: min(size, 2 ** (2**s))])
        s += 1
    return AdmissibleSequence(levels)


def gamma_value(T, seq, q, metric):
    """``sup_x sum_s 2^(s/q) dist(x, A_s)`` for a given sequence."""
    T = _as_points(T)
    total = np.zeros(T.shape[0])
    for s, a in enumerate(seq.levels):
        total += 2.0 ** (s / q) * _dist_to(T, T[a], metric)
    return float(total.max())


def gamma_q_upper(T, q=2, metric="euclidean"):
    """Upper bound on gamma_q(T, metric) from a greedy admissible sequence."""
    if q not in (1, 2):
        raise ValueError("q must be 1 or 2")
    T = _as_points(T)
    seq = sequence_from_order(farthest_point_order(T, metric))
    return gamma_value(T, seq, q, metric), seq


def gamma_q_exact(T, q=2, metric="euclidean"):
    """Exhaustive minimum over admissible sequences drawn from T (``|T| <= 8``).

    From ``s = 2`` on ``A_s = T``, so only ``A_0`` and ``A_1`` vary, and a
    largest admissible ``A_1`` is never worse than a smaller one.
    """
    T = _as_points(T)
    size = T.shape[0]
    if size > MAX_EXACT:
        raise ValueError(f"exact gamma limited to {MAX_EXACT} points")
    D = _pairwise(T, metric)
    if size == 1:
        return 0.0
    w1 = 2.0 ** (1.0 / q)
    best = np.inf
    for a0 in range(size):
        for a1 in itertools.combinations(range(size), min(4, size)):
            val = np.max(D[:, a0] + w1 * D[:, list(a1)].min(axis=1))
            best = min(best, val)
    return float(best)


def mixed_chain_upper(T):
    """``sup_t sum_s (2^(s/2) |t - pi_s t| + 2^s ||t - pi_s t||_inf)``.

    One greedy Euclidean sequence serves both terms; ``pi_s`` picks, per
    level, the point of ``A_s`` with the smallest weighted cost.  This is the
    quantity the exponential chaining bound controls directly.
    """
    T = _as_points(T)
    seq = sequence_from_order(farthest_point_order(T, "euclidean"))
    total = np.zeros(T.shape[0])
    for s, a in enumerate(seq.levels):
        diff = T[:, None, :] - T[a][None, :, :]
        cost = 2.0 ** (s / 2) * np.sqrt(np.sum(diff * diff, axis=-1)) + 2.0**s * np.max(
            np.abs(diff), axis=-1
        )
        total += cost.min(axis=1)
    return float(total.max())


def emp_sup_process(T, law, trials, seed, key=(), workers=None):
    """Monte Carlo estimate of ``E sup_{z in T} <z, xi>`` for i.i.d. ``xi``."""
    if trials < 100:
        raise ValueError("need at least 100 trials")
    T = _as_points(T)
    d = T.shape[1]
    if law == "gaussian":
        gen = lambda rng, size: rng.standard_normal((size, d))
    elif law == "exponential":
        gen = lambda rng, size: exponential(rng, (size, d))
    else:
        raise ValueError(f"unknown law {law!r}")
    vals = draw_values(lambda rng, size: np.max(gen(rng, size) @ T.T, axis=1), trials, seed, key, workers)
    return summarize(vals, seed)


# --- leveled nets of sparse vectors -------------------------------------------


@dataclass(frozen=True)
class NetLevel:
    """Lattice net of the vectors with support <= 2^i in B_2 and 2^(-i/2) B_inf.

    Net points are the multiples of ``pitch`` with at most ``2^i`` nonzero
    coordinates, each at most ``steps * pitch`` in absolute value.  Distances
    are measured in the norm whose unit ball is that cap,
    ``max(|v|, 2^(i/2) ||v||_inf)``.
    """

    n: int
    k: int
    i: int

    @property
    def support_size(self):
        return 2**self.i

    @property
    def epsilon(self):
        return self.support_size / (4 * self.k)

    @property
    def pitch(self):
        return self.epsilon / math.sqrt(self.support_size)

    @property
    def steps(self):
        # 2^(-i/2) / pitch = 4k / 2^i
        return (4 * self.k) // self.support_size

    @property
    def linf_cap(self):
        return 2.0 ** (-self.i / 2)

    def cardinality(self):
        s = min(self.support_size, self.n)
        return sum(math.comb(self.n, j) * (2 * self.steps) ** j for j in range(s + 1))

    def cardinality_bound(self):
        """binom(n, 2^i) (12k / 2^i)^(2^i), as an exact rational."""
        s = self.support_size
        return math.comb(self.n, s) * Fraction(12 * self.k, s) ** s

    def growth_constant(self):
        """C with cardinality = exp(C 2^i log(2n / 2^i))."""
        s = self.support_size
        return math.log(self.cardinality()) / (s * math.log(2 * self.n / s))

    def distance(self, x, y):
        v = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.maximum(
            np.sqrt(np.sum(v * v, axis=-1)), 2.0 ** (self.i / 2) * np.max(np.abs(v), axis=-1)
        )

    def quantize(self, z):
        """Net point nearest coordinatewise to ``z``; zero coordinates stay zero.

        For ``z`` in the cap the result is within ``epsilon`` of ``z``.
        """
        z = np.asarray(z, dtype=float)
        q = np.clip(np.rint(z / self.pitch), -self.steps, self.steps)
        return q * self.pitch

    def contains(self, p, tol=1e-12):
        p = np.asarray(p, dtype=float)
        q = p / self.pitch
        on_lattice = np.all(np.abs(q - np.rint(q)) <= 1e-9)
        return bool(
            on_lattice
            and np.count_nonzero(np.rint(q)) <= self.support_size
            and np.max(np.abs(p), initial=0.0) <= self.linf_cap + tol
            and np.linalg.norm(p) <= 1 + tol
        )

    def points(self, limit=200_000):
        """All net points as a dense ``(cardinality, n)`` array."""
        card = self.cardinality()
        if card > limit:
            raise ValueError(f"level {self.i} has {card} points, above limit {limit}")
        vals = [j * self.pitch for j in range(-self.steps, self.steps + 1) if j != 0]
        out = [np.zeros(self.n)]
        for size in range(1, min(self.support_size, self.n) + 1):
            for supp in itertools.combinations(range(self.n), size):
                for v in itertools.product(vals, repeat=size):
                    p = np.zeros(self.n)
                    p[list(supp)] = v
                    out.append(p)
        return np.array(out)


@dataclass(frozen=True)
class NetHierarchy:
    n: int
    k: int

    def __post_init__(self):
        r = (self.k + 1).bit_length() - 1
        if self.k < 1 or 2**r - 1 != self.k:
            raise ValueError("k must be of the form 2^r - 1")
        if self.k > self.n or self.n > MAX_NET_DIM:
            raise ValueError(f"need k <= n <= {MAX_NET_DIM}")

    @property
    def r(self):
        return (self.k + 1).bit_length() - 1

    @property
    def levels(self):
        return [NetLevel(self.n, self.k, i) for i in range(self.r)]

    def to_dict(self, max_points=10_000):
        """JSON form; levels larger than ``max_points`` omit the point list."""
        levels = []
        for lv in self.levels:
            d = {
                "i": lv.i,
                "epsilon": lv.epsilon,
                "pitch": lv.pitch,
                "cardinality": lv.cardinality(),
                "cardinalityBound": float(lv.cardinality_bound()),
                "growthConstant": lv.growth_constant(),
            }
            if lv.cardinality() <= max_points:
                d["points"] = [
                    [[int(j) + 1, float(p[j])] for j in np.flatnonzero(p)] for p in lv.points()
                ]
            levels.append(d)
        return {"n": self.n, "k": self.k, "levels": levels}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n"]), int(d["k"]))


def build_level_net(n, k):
    return NetHierarchy(n, k)


@dataclass
class SparseDecomposition:
    target: np.ndarray
    pieces: list
    approx: np.ndarray
    error: float

    @property
    def disjoint(self):
        seen = np.zeros(self.target.shape[0], dtype=bool)
        for p in self.pieces:
            s = p != 0
            if np.any(seen & s):
                return False
            seen |= s
        return True


def decompose_sparse(x, H):
    """Approximate a k-sparse unit vector by disjoint net pieces, one per level.

    Coordinates ranked ``2^i .. 2^(i+1) - 1`` by magnitude form block ``i``;
    each block lies in the level-``i`` cap and is replaced by its net point.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (H.n,):
        raise ValueError(f"expected a vector of length {H.n}")
    if np.count_nonzero(x) > H.k:
        raise ValueError(f"x has more than k={H.k} nonzero coordinates")
    if abs(np.linalg.norm(x) - 1) > 1e-9:
        raise ValueError("x must be a unit vector")
    order = np.argsort(-np.abs(x), kind="stable")
    pieces = []
    for lv in H.levels:
        idx = order[lv.support_size - 1 : 2 * lv.support_size - 1]
        block = np.zeros(H.n)
        block[idx] = x[idx]
        pieces.append(lv.quantize(block))
    approx = np.sum(pieces, axis=0)
    return SparseDecomposition(x, pieces, approx, float(np.linalg.norm(x - approx)))
