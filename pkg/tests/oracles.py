"""Independent reference computations used to derive frozen test values.

Everything here is written directly from the closed forms with scipy's
adaptive ``quad`` and shares no code with the package.
"""

import numpy as np
from scipy.integrate import quad


def alpha_hopf_energy(alpha, dalpha, k, l, metric, potential=lambda t: 0.0, R=0.5):
    """``(sigma2 term, potential term)`` of ``(s, p1, p2) -> angles (alpha(s), -k p1 + l p2)``.

    ``metric(s) -> (g_ss, g_11, g_22)`` must be diagonal.  The pulled-back
    area form of the radius-R sphere is ``R^2 sin(alpha) alpha' ds ^ (-k dp1 + l dp2)``.
    """

    def sig2(s):
        gss, g11, g22 = metric(s)
        return (
            R**4 * (np.sin(alpha(s)) * dalpha(s)) ** 2 * (k * k / (gss * g11) + l * l / (gss * g22))
        )

    def vol(s):
        gss, g11, g22 = metric(s)
        return np.sqrt(gss * g11 * g22)

    four_pi2 = 4 * np.pi**2
    e_s2 = (
        0.5
        * four_pi2
        * quad(lambda s: sig2(s) * vol(s), 0, np.pi / 2, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    )
    e_p = (
        four_pi2
        * quad(
            lambda s: potential(np.cos(alpha(s))) * vol(s),
            0,
            np.pi / 2,
            epsabs=1e-14,
            epsrel=1e-13,
            limit=200,
        )[0]
    )
    return e_s2, e_p


def round_metric(s):
    return 1.0, np.cos(s) ** 2, np.sin(s) ** 2


def squashed_metric(k, l, a):
    def g(s):
        S, C = np.sin(s) ** 2, np.cos(s) ** 2
        return a * a * (k * k * S + l * l * C), a * a * k * k * C, a * a * l * l * S

    return g


def conformal_metric(k, l, a):
    def g(s):
        S, C = np.sin(s) ** 2, np.cos(s) ** 2
        w = a * a * k * k * l * l / (k * k * S + l * l * C)
        return w, w * C, w * S

    return g


def winding_sigma2_integral():
    """``int sigma2 dvol`` for alpha(r) = arccos(1 - 2/sqrt(r^2+1)) on the flat cylinder chart."""

    def alpha(r):
        return np.arccos(1 - 2 / np.sqrt(r * r + 1))

    def dalpha(r, h=1e-6):
        return (alpha(r + h) - alpha(r - h)) / (2 * h) if r > h else (alpha(r + h) - alpha(r)) / h

    def dens(r):
        return (np.sin(alpha(r)) * dalpha(r)) ** 2 * (1 / r**2 + 1) * r

    return 4 * np.pi**2 * quad(dens, 0, np.inf, limit=400)[0]
