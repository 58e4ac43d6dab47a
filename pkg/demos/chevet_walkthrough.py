"""Walk through one Chevet-type estimate for an exponential matrix.

Compares the expected l2 -> l2 norm of an n x N matrix with symmetric
exponential entries against the two-term upper bound and its lower
companion, then repeats the comparison for a Gaussian matrix.

    python3 demos/chevet_walkthrough.py
"""

import numpy as np

from chevetlab import bounds
from chevetlab import geometry as geo
from chevetlab.ensembles import exponential
from chevetlab.montecarlo import substream

n, N, trials = 16, 48, 4000
K, L = geo.lp(N, 2), geo.lp(n, 2)

rhs = bounds.chevet_rhs(K, L, trials, seed=1)
low = bounds.chevet_lower(K, L, trials, seed=1)
rng = substream(2)
lhs = np.array([np.linalg.norm(G, 2) for G in exponential(rng, (trials, n, N))])

print(f"n={n}, N={N}, exponential entries")
print(f"  lower bound     {low.mean:8.3f} +- {low.se:.3f}")
print(f"  E ||G||         {lhs.mean():8.3f} +- {lhs.std() / np.sqrt(trials):.3f}")
print(f"  upper bound     {rhs.total:8.3f}  (terms {rhs.term_k:.3f} + {rhs.term_l:.3f})")
print("  (the upper bound holds up to a universal constant, so it may sit slightly below)")
print(f"  sqrt(n)+sqrt(N) {np.sqrt(n) + np.sqrt(N):8.3f}")

g = bounds.gaussian_chevet_rhs(K, L, trials, seed=3)
lhs_g = np.array([np.linalg.norm(G, 2) for G in rng.standard_normal((trials, n, N))])
print("gaussian entries")
print(f"  E ||G||         {lhs_g.mean():8.3f}")
print(f"  upper bound     {g.total:8.3f}")
