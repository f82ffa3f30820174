"""
How the energy scales with the charge
=====================================

Two scaling statements are checked numerically: the harmonic family
z -> z^k on the round sphere has energy per k^3 falling toward 4 pi^2 / 3,
and the squashed (k,k) family has energy exactly proportional to |Q|^(3/4).
On flat space a pure sigma2 configuration has no interior critical scale.
"""

import numpy as np

from hopfluid.catalog import harmonic_map, harmonic_potential
from hopfluid.cli import run_scan
from hopfluid.geometry import S3
from hopfluid.quadrature import default_spec
from hopfluid.variational import energy

# %%
# Large k concentrates the profile near the poles, so a finer rule helps.
print(" k    E/k^3")
for k in (1, 2, 4, 8, 16):
    spec = default_spec(S3, order=64 if k < 8 else 256)
    e = energy(harmonic_map(k), harmonic_potential(k), qspec=spec).total
    print(f"{k:2d}  {e / k**3:.6f}")
print("limit:", 4 * np.pi**2 / 3)

# %%
# Squashed (k,k) family: E / |Q|^(3/4) does not depend on k.
for row in run_scan("s3_squashed_kl", "kl=1..4"):
    print(f"k=l={int(row[0])}  Q={row[2]:.6f}  E/|Q|^(3/4)={row[3]:.10f}")

# %%
# Derrick scan: E(lambda) / (lambda E(1)) stays at 1, so the energy is
# linear in the scale and nothing in between is stationary.
for lam, e, q, ratio, status in run_scan("r3_derrick", "lambda=0.5..2:4"):
    print(f"lambda={lam:.2f}  E={e:.6f}  ratio={ratio:.12f}")
