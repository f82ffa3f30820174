"""Closed-form configurations and their reference values.

Each builder returns a fully specified map (and potential where one belongs
to the configuration).  Reference energies are the printed closed forms,
kept separate from anything computed so that reports can show both.
"""

from __future__ import annotations

import numpy as np
import sympy as sp

from .geometry import MetricSpec
from .maps import (
    RHO_SYM,
    S_SYM,
    T_SYM,
    Z_SYM,
    Potential,
    Profile,
    alpha_hopf,
    axisymmetric,
    conformal_profile,
    cylinder_winding,
    harmonic_profile,
    linear_profile,
    oldbaby_profile,
    squashed_profile,
    winding_profile,
)

HALF = 0.5


def hopf_map():
    """The Hopf fibration onto the sphere of radius 1/2 (``k = l = 1``, ``alpha = 2s``)."""
    return alpha_hopf(1, 1, linear_profile(), MetricSpec.round(), HALF)


def winding_map():
    """Winding map of the plane times a circle; ``alpha(r) = arccos(1 - 2/sqrt(r^2+1))``."""
    return cylinder_winding(winding_profile())


def winding_potential():
    return Potential.quartic_sixteenth()


def harmonic_map(k):
    """``z -> z^k`` composed with the Hopf map, on the round sphere."""
    return alpha_hopf(k, k, harmonic_profile(k), MetricSpec.round(), HALF)


def harmonic_potential(k):
    return Potential.charge_dependent(k)


def squashed_a2(k, l):
    return 3 * np.pi / (4 * np.sqrt(2)) * (k + l) / (k * k + k * l + l * l)


def conformal_a2(k, l):
    return np.pi / (4 * np.sqrt(2)) * (k + l) / (k * l)


def squashed_map(k, l, a=None):
    a = np.sqrt(squashed_a2(k, l)) if a is None else a
    return alpha_hopf(k, l, squashed_profile(k, l), MetricSpec.squashed(k, l, a), HALF)


def conformal_map(k, l, a=None):
    a = np.sqrt(conformal_a2(k, l)) if a is None else a
    return alpha_hopf(k, l, conformal_profile(k, l), MetricSpec.conformal(k, l, a), HALF)


def oldbaby_map(k):
    return alpha_hopf(k, k, oldbaby_profile(k), MetricSpec.round(), HALF)


def weighted_profile(k, l):
    """``2 arctan(sin^l s / cos^k s)``: the map ``[z0^k : z1^l]`` in alpha-Hopf form."""
    s = S_SYM
    return Profile.from_expression(
        2 * sp.atan2(sp.sin(s) ** l, sp.cos(s) ** k), tag=f"weighted({k},{l})"
    )


def weighted_map(k, l):
    return alpha_hopf(k, l, weighted_profile(k, l), MetricSpec.weighted_sasakian(k, l), HALF)


def khesin_functions(k=2, l=1, h=None):
    """``(f_-, f_+)`` with ``f_+ + f_- = l h`` and ``f_+ - f_- = k h``."""
    h = 1 + T_SYM if h is None else sp.sympify(h)
    return sp.Rational(l - k, 2) * h, sp.Rational(l + k, 2) * h


def rational_map(k, l):
    """Axisymmetric map ``z1^l / z0^k`` after inverse stereographic projection of flat space."""
    r2 = RHO_SYM**2 + Z_SYM**2
    mod_z1 = 2 * RHO_SYM / (1 + r2)
    mod_z0 = sp.sqrt(4 * Z_SYM**2 + (r2 - 1) ** 2) / (1 + r2)
    theta = 2 * sp.atan(mod_z1**l / mod_z0**k)
    psi = sp.atan2(r2 - 1, 2 * Z_SYM)
    return axisymmetric(k, l, theta, psi)


def gaussian_test_map(amplitude=4.0):
    """Finite-energy axisymmetric test configuration on flat space (charge zero)."""
    theta = amplitude * RHO_SYM**2 * sp.exp(-(RHO_SYM**2) - Z_SYM**2)
    return axisymmetric(1, 1, theta, Z_SYM)


# ---------------------------------------------------------------------------
# printed reference values


def winding_energy_reference():
    return 8 * np.pi**2


def winding_pressure(r):
    return -1.0 / (np.asarray(r) ** 2 + 1) ** 2


def harmonic_energy_reference(k):
    if k == 1:
        return 2 * np.pi**2
    return 2 * np.pi**2 / 3 * (k**3 + (k * k - 1) * np.pi / np.sin(np.pi / k))


def squashed_energy_reference(k, l):
    return 2**1.25 * np.pi**3.5 * np.sqrt(3) * k * l * np.sqrt((k + l) / (k * k + k * l + l * l))


def conformal_energy_reference(k, l):
    return 2**-1.75 * np.pi**3.5 * np.sqrt(k * l * (k + l))


def weighted_volume_reference(k, l):
    return 2 * np.pi**2 / (k * l)
