"""
The Hopf map as a steady fluid
==============================

Every map from a 3-manifold to the 2-sphere carries a divergence-free
"dual" velocity field: the Hodge dual of the pulled-back area form.  For
critical points of the sigma2 energy this field solves the steady Euler
equations.  This script walks through the check for the Hopf map and for
a charge-two hopfion on a squashed 3-sphere.
"""

import numpy as np

from hopfluid.cases import gate_grid
from hopfluid.catalog import hopf_map, squashed_map
from hopfluid.fluid import beltrami_classify, dual_flow, euler_defects
from hopfluid.geometry import S3
from hopfluid.maps import Potential, strain_spectrum
from hopfluid.topology import helicity, hopf_charge
from hopfluid.variational import el_residual, energy

# %%
# The Hopf map onto the sphere of radius 1/2 stretches every horizontal
# plane by the same factor, so sigma2 = lambda1^2 lambda2^2 is constant.
m = hopf_map()
x = gate_grid(S3, 12)
spec = strain_spectrum(m, x)
print("sigma2 range on the grid:", spec.sigma2.min(), spec.sigma2.max())

# %%
# It is critical for the pure sigma2 energy, its charge is 1, and the dual
# flow has helicity equal to that charge.
print("EL residual:", el_residual(m, None, x).sup_norm)
print("charge:", hopf_charge(m).raw_integral)
flow = dual_flow(m)
print("helicity:", helicity(flow))

# %%
# The dual flow is the Hopf rotation itself: a linear Beltrami field.
rep = beltrami_classify(flow.velocity, flow.metric, S3, x)
print("Beltrami class:", rep.classification, "constant:", rep.constant)

# %%
# A less symmetric example: the (2,1) hopfion on the squashed sphere with
# the new-baby potential.  Its Bernoulli function is no longer constant,
# yet both forms of the steady Euler equations still hold.
m21 = squashed_map(2, 1)
P = Potential.new_baby()
e = energy(m21, P)
print(f"E = {e.total:.6f}  (sigma2 {e.sigma2_term:.6f}, potential {e.potential_term:.6f})")
d = euler_defects(dual_flow(m21, P), gate_grid(S3, 16))
print("curl form:", d.curl_form, "convective form:", d.convective_form, "div:", d.divergence)
print("charge:", round(hopf_charge(m21).raw_integral, 10))

# %%
# Equipartition: for these solutions the sigma2 and potential terms agree.
print("sigma2 - potential:", np.round(e.sigma2_term - e.potential_term, 12))
