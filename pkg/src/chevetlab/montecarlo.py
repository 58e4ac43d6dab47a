"""Seeded Monte Carlo plumbing.

Every random quantity in the package is drawn from a stream derived from a
master seed plus an integer key path, so results never depend on how work is
split between threads.  Trials are grouped into fixed-size blocks; block ``b``
of a computation keyed by ``key`` always reads from the stream
``(seed, *key, b)``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

BLOCK_SIZE = 500


@dataclass(frozen=True)
class EstimateWithCI:
    """Sample mean with its standard error."""

    mean: float
    se: float
    trials: int
    seed: int

    def __post_init__(self):
        if self.trials < 2:
            raise ValueError("an estimate needs at least two trials")
        if not self.se >= 0:
            raise ValueError("standard error must be nonnegative")

    def within(self, value, nse=3.0):
        return abs(self.mean - value) <= nse * self.se

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["mean"]), float(d["se"]), int(d["trials"]), int(d["seed"]))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream addressed by ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def default_workers() -> int:
    env = os.environ.get("CHEVETLAB_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def draw_values(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    trials: int,
    seed: int,
    key: Sequence[int] = (),
    workers: int | None = None,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Collect ``trials`` outputs of ``draw`` along axis 0.

    ``draw(rng, size)`` must return an array whose first axis has length
    ``size``.  Output is identical for any ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    sizes = [block_size] * (trials // block_size)
    if trials % block_size:
        sizes.append(trials % block_size)
    key = tuple(key)

    def run(b):
        out = np.asarray(draw(substream(seed, *key, b), sizes[b]))
        if out.shape[0] != sizes[b]:
            raise ValueError("draw returned the wrong number of samples")
        return out

    workers = default_workers() if workers is None else workers
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, range(len(sizes))))
    else:
        blocks = [run(b) for b in range(len(sizes))]
    return np.concatenate(blocks, axis=0)


def summarize(values, seed: int) -> EstimateWithCI:
    values = np.asarray(values, dtype=float)
    t = values.shape[0]
    return EstimateWithCI(
        mean=float(values.mean()),
        se=float(values.std(ddof=1) / np.sqrt(t)),
        trials=int(t),
        seed=int(seed),
    )


def estimate(draw, trials, seed, key=(), workers=None) -> EstimateWithCI:
    """Monte Carlo mean of a scalar-valued ``draw``."""
    return summarize(draw_values(draw, trials, seed, key, workers), seed)


def ratio_of_means(num, den):
    """Ratio of two paired sample means with a delta-method standard error."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    t = num.shape[0]
    r = num.mean() / den.mean()
    resid = (num - r * den) / den.mean()
    return float(r), float(resid.std(ddof=1) / np.sqrt(t))
