"""Largest k x m submatrix norms of an exponential matrix.

Prints the exact value of Gamma_{k,m} next to the closed-form bound for a
32 x 32 matrix, and the restricted isometry constant of a tall matrix at a
few sparsity levels.

    python3 demos/sparse_submatrices.py
"""

import numpy as np

from chevetlab import bounds
from chevetlab.ensembles import exponential
from chevetlab.montecarlo import substream
from chevetlab.submatrix import gamma_km_auto, ric

rng = substream(11)
G = exponential(rng, (32, 32))

print(" k  m   Gamma_km  exact    bound   ratio")
for k in (1, 2, 4):
    for m in (1, 2, 4):
        r = gamma_km_auto(G, k, m)
        b = bounds.subm_bound(k, m, 32, 32)
        print(f"{k:2d} {m:2d} {r.value:10.3f}  {str(r.exact):5s} {b:8.3f} {r.value / b:7.3f}")

A = exponential(rng, (200, 20))
print("\nrestricted isometry of a 200 x 20 matrix")
for m in (1, 2, 3):
    r = ric(A, m)
    print(f"  m={m}  delta={r.delta:.3f}  support={r.to_dict()['support']}")
print(f"  admissible m at theta=0.5: {bounds.rip_admissible_m(0.5, 200, 20).m}")
