"""
Shooting for a hopfion profile
==============================

For the alpha-Hopf ansatz the field equations reduce to a first-order
equation for the profile alpha(s), but the metric scale a is an unknown
too.  Both boundary values alpha(0) = pi and alpha(pi/2) = 0 can only be
met for one value of a.  This script shows the shooting defect, the solved
scale, and the agreement with the closed form.
"""

import numpy as np
from scipy.integrate import quad

from hopfluid.catalog import squashed_a2
from hopfluid.maps import squashed_profile
from hopfluid.profiles import _H_total, solve_coupled_h, solve_profile, squashed_problem

k, l = 2, 1
problem = squashed_problem(k, l)

# %%
# Separating variables, the profile equation balances an integral over s,
# which depends on a through the metric, against a fixed integral over alpha.
K, _ = quad(lambda b: np.sin(b) / np.sqrt(2 * problem.potential.of_height(np.cos(b))), 0, np.pi)
print("alpha-side integral K =", K)

# %%
# The s-side integral H(a) is increasing, so H(a) - K has a single root.
for a in np.geomspace(0.2, 3.0, 7):
    print(f"a = {a:6.3f}   H(a) - K = {_H_total(problem, a) - K:+.6f}")

# %%
# Root finding recovers a^2 and the profile to near machine precision.
sol = solve_profile(problem)
print("solved a^2:", sol.a**2, " closed form:", squashed_a2(k, l))
s = np.linspace(0.01, np.pi / 2 - 0.01, 1000)
print("max profile error:", np.max(np.abs(sol.profile(s) - squashed_profile(k, l)(s))))
print("smooth at the poles:", sol.smooth, "exponents:", sol.pole_exponents)

# %%
# With the old-baby potential on the round sphere the profile comes from a
# coupled pair of equations for alpha and an auxiliary function h.  The pair
# forces h to be linear, after which alpha follows by quadrature.
for k in (1, 2, 3):
    c = solve_coupled_h(k)
    r1, r2 = c.residuals(s)
    print(
        f"k={k}: h(0)={c.h0:.4f}, slope={c.h.slope:.4f}, residual={max(abs(r1).max(), abs(r2).max()):.1e}"
    )
