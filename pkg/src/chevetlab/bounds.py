"""Closed-form and Monte Carlo evaluation of the displayed bounds.

Absolute constants are never baked in: expressions are returned
constant-free, or the constant is an explicit argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .ensembles import exponential
from .montecarlo import EstimateWithCI, draw_values, summarize


@dataclass(frozen=True)
class ChevetBound:
    """``R(K) E||Y_n||_L + R(L°) E||Y_N||_{K°}`` with its ingredients."""

    radius_k: float
    radius_l: float
    exp_l: EstimateWithCI  # E || sum_{i<=n} xi_i e_i ||_L
    exp_k: EstimateWithCI  # E || sum_{i<=N} xi_i e_i ||_{K°}

    @property
    def term_k(self):
        return self.radius_k * self.exp_l.mean

    @property
    def term_l(self):
        return self.radius_l * self.exp_k.mean

    @property
    def total(self):
        return self.term_k + self.term_l

    @property
    def total_se(self):
        return math.hypot(self.radius_k * self.exp_l.se, self.radius_l * self.exp_k.se)

    def to_dict(self):
        return {
            "radiusK": self.radius_k,
            "radiusL": self.radius_l,
            "expL": self.exp_l.to_dict(),
            "expK": self.exp_k.to_dict(),
            "termK": self.term_k,
            "termL": self.term_l,
            "total": self.total,
            "totalSe": self.total_se,
        }


@dataclass(frozen=True)
class TailParams:
    sigma: float
    sigma_prime: float
    a: float
    b: float

    def __post_init__(self):
        if self.sigma_prime > self.sigma * (1 + 1e-12) or self.b > self.a * (1 + 1e-12):
            raise ValueError("need sigma' <= sigma and b <= a")


@dataclass(frozen=True)
class RipThreshold:
    theta: float
    n: int
    N: int
    m: int
    branch: str
    c: float


def _vector_law(law):
    if law == "exponential":
        return exponential
    if law == "gaussian":
        return lambda rng, shape: rng.standard_normal(shape)
    raise ValueError(f"unknown law {law!r}")


def expected_norm(norm, dim, trials, seed, law="exponential", key=(), workers=None):
    """Monte Carlo ``E norm(xi)`` for an i.i.d. vector ``xi`` in ``R^dim``."""
    gen = _vector_law(law)
    vals = draw_values(lambda rng, size: norm(gen(rng, (size, dim))), trials, seed, key, workers)
    return summarize(vals, seed)


def _check_pair(K, L, trials):
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    return K.dim, L.dim


def _chevet(K, L, trials, seed, law, workers, key):
    N, n = _check_pair(K, L, trials)
    key = tuple(key)
    exp_l = expected_norm(lambda v: geo.gauge(v, L), n, trials, seed, law, key + (1,), workers)
    exp_k = expected_norm(lambda v: geo.support(v, K), N, trials, seed, law, key + (2,), workers)
    return ChevetBound(geo.circumradius(K), geo.codomain_radius(L), exp_l, exp_k)


def chevet_rhs(K, L, trials, seed, workers=None, key=()):
    """Constant-free right-hand side of the Chevet-type bound, exponential vectors."""
    return _chevet(K, L, trials, seed, "exponential", workers, key)


def gaussian_chevet_rhs(K, L, trials, seed, workers=None, key=()):
    """The classical Gaussian Chevet right-hand side, constant-free."""
    return _chevet(K, L, trials, seed, "gaussian", workers, key)


def chevet_lower(K, L, trials, seed, workers=None, key=()):
    """Half of ``max_i ||e_i||_{K°} E||Y_n||_L + max_i ||e_i||_L E||Y_N||_{K°}``.

    A lower bound on ``E ||Gamma : K -> L||`` for the exponential matrix.
    """
    b = chevet_rhs(K, L, trials, seed, workers, key)
    ck = geo.max_sup_norm(K)
    cl = geo.max_sup_norm(L.polar())
    value = 0.5 * (ck * b.exp_l.mean + cl * b.exp_k.mean)
    se = 0.5 * math.hypot(ck * b.exp_l.se, cl * b.exp_k.se)
    return EstimateWithCI(value, se, b.exp_l.trials, seed)


def tail_params(K, L):
    sigma = geo.circumradius(K) * geo.codomain_radius(L)
    sigma_prime = geo.max_sup_norm(K) * geo.max_sup_norm(L.polar())
    return TailParams(sigma, sigma_prime, sigma, sigma_prime)


def tail_shape(t, sigma, sigma_prime, c):
    """``exp(-c min(t^2 / sigma^2, t / sigma'))``: a shape, not a probability claim."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or c <= 0:
        raise ValueError("need t >= 0 and c > 0")
    return np.exp(-c * np.minimum(t * t / sigma**2, t / sigma_prime))


def subm_bound(k, m, n, N):
    """``sqrt(m) ln(3N/m) + sqrt(k) ln(3n/k)``."""
    if not (1 <= k <= n and 1 <= m <= N):
        raise ValueError("need 1 <= k <= n and 1 <= m <= N")
    return math.sqrt(m) * math.log(3 * N / m) + math.sqrt(k) * math.log(3 * n / k)


def estUm_closed(ell, n):
    """``sqrt(l) ln(3n/l)``, the order of E||Y_n||_{U_l°}."""
    if not 1 <= ell <= n:
        raise ValueError("need 1 <= l <= n")
    return math.sqrt(ell) * math.log(3 * n / ell)


def estUm_exact(ell, n, trials, seed, workers=None):
    """Monte Carlo E of the top-``l`` Euclidean norm of an exponential vector."""
    if not 1 <= ell <= n:
        raise ValueError("need 1 <= l <= n")
    return expected_norm(lambda v: geo.top_l2(v, ell), n, trials, seed, workers=workers)


def lonenorm_bound(n, N):
    """``n + ln N``, the order of E||Gamma : l1^N -> l1^n||."""
    return n + math.log(N)


def rip_admissible_m(theta, n, N, c=1.0):
    """Largest sparsity allowed by the RIP threshold with constant ``c``.

    Branch (i), ``N <= n``: ``m = min(N, c theta^2 n / ln^3(3/theta))``.
    Branch (ii), ``N > n``:
    ``m <= c (theta n / L) min(1 / L, theta / ln^2(3/theta))`` with
    ``L = ln(3N / (theta n))``.  Returns 0 when nothing is admissible.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if n < 1 or N < 1 or c <= 0:
        raise ValueError("need positive n, N and c")
    lt = math.log(3 / theta)
    if N <= n:
        m = math.floor(min(N, c * theta**2 * n / lt**3))
        branch = "i"
    else:
        L = math.log(3 * N / (theta * n))
        m = math.floor(min(N, c * theta * n / L * min(1 / L, theta / lt**2)))
        branch = "ii"
    return RipThreshold(theta, n, N, max(m, 0), branch, c)


def rip_success_probability(theta, n, N, m, c=1.0):
    """``1 - exp(-c theta^2 n / ln^2 n) - 2 exp(-c sqrt(m) ln(3N/m))``.

    Its constant is separate from the one in :func:`rip_admissible_m`.
    """
    first = math.exp(-c * theta**2 * n / math.log(n) ** 2) if n > 1 else 1.0
    return 1 - first - 2 * math.exp(-c * math.sqrt(m) * math.log(3 * N / m))
