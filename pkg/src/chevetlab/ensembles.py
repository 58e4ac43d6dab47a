"""Samplers for isotropic log-concave random matrices.

All kinds produce matrices whose entries, flattened, are centered with
identity covariance.  Every kind except ``rotated-exponential`` is also
unconditional (its law is invariant under entrywise sign flips).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .montecarlo import draw_values, substream

KINDS = (
    "gaussian",
    "exponential",
    "uniform-cube",
    "uniform-bp-ball",
    "rotated-exponential",
    "independent-lc-rows",
)
ROW_KINDS = ("gaussian", "exponential", "uniform-cube", "uniform-bp-ball")
UNCONDITIONAL_KINDS = tuple(k for k in KINDS if k != "rotated-exponential")

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class EnsembleSpec:
    """Law of an ``n x N`` random matrix (``N == 1`` encodes a vector).

    ``p`` is used by ``uniform-bp-ball`` (also as a row kind),
    ``rotation_seed`` by ``rotated-exponential`` and ``row_kind`` by
    ``independent-lc-rows``.
    """

    kind: str
    n: int
    N: int = 1
    p: float | None = None
    rotation_seed: int | None = None
    row_kind: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if int(self.n) < 1 or int(self.N) < 1:
            raise ValueError("dimensions must be positive")
        bp_rows = self.kind == "uniform-bp-ball" or (
            self.kind == "independent-lc-rows" and self.row_kind == "uniform-bp-ball"
        )
        if bp_rows:
            if self.p is None or not np.isfinite(self.p) or self.p < 1:
                raise ValueError("uniform-bp-ball needs a finite p >= 1")
        if self.kind == "rotated-exponential" and self.rotation_seed is None:
            raise ValueError("rotated-exponential needs a rotation seed")
        if self.kind == "independent-lc-rows" and self.row_kind not in ROW_KINDS:
            raise ValueError(f"row kind must be one of {ROW_KINDS}")

    @property
    def dim(self):
        return self.n * self.N

    @property
    def unconditional(self):
        return self.kind != "rotated-exponential"

    def to_dict(self):
        d = {"kind": self.kind, "n": self.n, "N": self.N}
        if self.p is not None:
            d["p"] = self.p
        if self.rotation_seed is not None:
            d["rotationSeed"] = self.rotation_seed
        if self.row_kind is not None:
            d["rowKind"] = self.row_kind
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            n=int(d["n"]),
            N=int(d["N"]),
            p=None if d.get("p") is None else float(d["p"]),
            rotation_seed=None if d.get("rotationSeed") is None else int(d["rotationSeed"]),
            row_kind=d.get("rowKind"),
        )

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class IsotropyReport:
    dim: int
    max_abs_mean: float
    max_abs_cov_dev: float
    trials: int
    se_scale: float
    mean_se_scale: float

    @property
    def passed(self):
        return (
            self.max_abs_cov_dev <= 4 * self.se_scale
            and self.max_abs_mean <= 4 * self.mean_se_scale
        )


def random_orthogonal(dim, rng):
    """Haar-distributed element of O(dim).

    QR of a Gaussian matrix with the signs of ``diag(R)`` folded into ``Q``,
    which makes the factorization unique and the result exactly Haar.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


@lru_cache(maxsize=64)
def _rotation(n, seed):
    u = random_orthogonal(n, substream(seed))
    u.setflags(write=False)
    return u


def rotation_for(spec):
    """The fixed orthogonal matrix of a ``rotated-exponential`` spec."""
    return _rotation(spec.n, spec.rotation_seed)


def bp_ball_variance(p, N):
    """Coordinate variance of the uniform distribution on the unit l_p^N ball."""
    return float(
        np.exp(
            gammaln(3 / p) + gammaln(N / p + 1) - gammaln(1 / p) - gammaln((N + 2) / p + 1)
        )
    )


def exponential(rng, shape):
    """Symmetric exponential entries with density 2^{-1/2} exp(-sqrt2 |x|)."""
    mag = rng.standard_exponential(shape) / SQRT2
    sign = 2.0 * rng.integers(0, 2, size=shape) - 1.0
    return sign * mag


def uniform_bp_rows(rng, shape, p):
    """Rows (last axis) uniform on the l_p ball, rescaled to unit variance."""
    N = shape[-1]
    g = rng.standard_gamma(1.0 / p, size=shape) ** (1.0 / p)
    g *= 2.0 * rng.integers(0, 2, size=shape) - 1.0
    w = rng.standard_exponential(shape[:-1])
    radius = (np.sum(np.abs(g) ** p, axis=-1) + w) ** (1.0 / p)
    return g / radius[..., None] / np.sqrt(bp_ball_variance(p, N))


def _draw_rows(kind, rng, shape, p):
    if kind == "gaussian":
        return rng.standard_normal(shape)
    if kind == "exponential":
        return exponential(rng, shape)
    if kind == "uniform-cube":
        return rng.uniform(-SQRT3, SQRT3, size=shape)
    if kind == "uniform-bp-ball":
        return uniform_bp_rows(rng, shape, p)
    raise ValueError(kind)


def sample_batch(spec, size, rng, rotation=None):
    """``size`` independent draws, shape ``(size, n, N)``.

    ``rotation`` overrides the orthogonal matrix of a rotated kind.
    """
    shape = (size, spec.n, spec.N)
    if spec.kind == "rotated-exponential":
        u = rotation_for(spec) if rotation is None else np.asarray(rotation, dtype=float)
        return np.matmul(u, exponential(rng, shape))
    if spec.kind == "independent-lc-rows":
        return _draw_rows(spec.row_kind, rng, shape, spec.p)
    return _draw_rows(spec.kind, rng, shape, spec.p)


def sample(spec, rng, rotation=None):
    """One ``n x N`` draw."""
    return sample_batch(spec, 1, rng, rotation)[0]


def sample_rotated_exponential(n, N, rotation, rng, size=1):
    """Draws of ``U @ Gamma`` for an explicit rotation ``U`` and exponential ``Gamma``."""
    return np.matmul(np.asarray(rotation, dtype=float), exponential(rng, (size, n, N)))


def isotropy_report(x):
    """Moment audit of flattened samples ``x`` with shape ``(trials, dim)``."""
    x = np.asarray(x, dtype=float)
    t, d = x.shape
    if t < 2:
        raise ValueError("need at least two samples")
    mean = x.mean(axis=0)
    second = x.T @ x / t
    fourth = (x * x).T @ (x * x) / t
    prod_var = np.maximum(fourth - second**2, 0.0)
    return IsotropyReport(
        dim=d,
        max_abs_mean=float(np.max(np.abs(mean))),
        max_abs_cov_dev=float(np.max(np.abs(second - np.eye(d)))),
        trials=t,
        se_scale=float(np.sqrt(prod_var.max() / t)),
        mean_se_scale=float(np.sqrt(x.var(axis=0, ddof=1).max() / t)),
    )


def check_isotropy(spec, trials, seed, workers=None):
    if trials < 1000:
        raise ValueError("isotropy audit needs at least 1000 trials")
    x = draw_values(
        lambda rng, size: sample_batch(spec, size, rng).reshape(size, -1),
        trials,
        seed,
        key=(0,),
        workers=workers,
    )
    return isotropy_report(x)
