"""Hopf charge, helicity and energy-bound ratios for the ansatz families.

For a 2-form ``F = f1(s) ds^dphi1 + f2(s) ds^dphi2`` on the three-sphere
chart the primitive regular at both poles is

    A = a1(s) dphi1 + a2(s) dphi2,   a1(s) = -int_s^{pi/2} f1,  a2(s) = int_0^s f2,

(``dphi2`` collapses at ``s = 0`` and ``dphi1`` at ``s = pi/2``), and
``A ^ F = (a2 f1 - a1 f2) ds^dphi1^dphi2``.  The Whitehead integral then
reduces to a nested 1-D quadrature in ``s``.

For axisymmetric maps on flat space, ``T(rho, z)`` and ``P = l theta - k psi``,
the pulled-back unit area form splits as
``l sin T dT^dtheta - k h drho^dz`` with ``h = sin T (T_rho psi_z - T_z psi_rho)``;
the primitive ``l (1 - cos T) dtheta + b dz`` with ``b = -k int_0^rho h``
is regular on the axis and gives a nested 2-D quadrature in ``(rho, z)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InadmissibleProfile, ZeroCharge
from .geometry import geometry_jet
from .maps import AnsatzMap, field_state
from .quadrature import axis_rule

ADMISSIBLE_TOL = 1e-8
CHARGE_DEFECT_TOL = 1e-6


@dataclass
class ChargeResult:
    raw_integral: float
    rounded: int
    defect: float
    error_estimate: float = 0.0

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class BoundCheck:
    energy: float
    charge_or_helicity: float
    bound_constant: Union[float, str]
    ratio: float
    satisfied: Union[bool, str]

    def as_dict(self):
        return dict(self.__dict__)


def _nested_s_integral(f12, n):
    """``int_0^{pi/2} (a2 f1 - a1 f2) ds`` with ``f12(s) -> (f1, f2)``."""
    s, w = axis_rule(0.0, np.pi / 2, False, n)
    u, wu = axis_rule(0.0, 1.0, False, n)
    f1, f2 = f12(s)
    # a2(s_i) = s_i int_0^1 f2(s_i u) du ; a1(s_i) = -(pi/2 - s_i) int_0^1 f1(s_i + (pi/2 - s_i) u) du
    inner_lo = (s[:, None] * u[None, :]).reshape(-1)
    inner_hi = (s[:, None] + (np.pi / 2 - s[:, None]) * u[None, :]).reshape(-1)
    _, g2 = f12(inner_lo)
    g1, _ = f12(inner_hi)
    a2 = s * np.sum(g2.reshape(n, n) * wu, axis=1)
    a1 = -(np.pi / 2 - s) * np.sum(g1.reshape(n, n) * wu, axis=1)
    return float(np.sum(w * (a2 * f1 - a1 * f2)))


def _two_level(func, n):
    coarse, fine = func(n), func(2 * n)
    return fine, abs(fine - coarse)


def _check_admissible(m: AnsatzMap):
    if m.family != "alpha_hopf" or m.profile is None:
        return
    for end in m.profile.endpoints:
        if min(abs(end), abs(end - np.pi)) > ADMISSIBLE_TOL:
            raise InadmissibleProfile(
                f"profile endpoints {m.profile.endpoints} are not in {{0, pi}}"
            )


def _alpha_hopf_charge(m: AnsatzMap, n: int):
    scale = 1.0 / m.target_radius**2

    def f12(s):
        x = np.stack([s, np.zeros_like(s), np.zeros_like(s)], axis=-1)
        F = field_state(m, x).F * scale
        return F[..., 0, 1], F[..., 0, 2]

    def q(nn):
        return m.chart.orientation * 4 * np.pi**2 * _nested_s_integral(f12, nn) / (16 * np.pi**2)

    return _two_level(q, n)


def _axisymmetric_charge(m: AnsatzMap, n: int):
    k, l = m.k, m.l

    def h_and_theta(rho, z):
        T, T_rho, T_z = m.theta.first(rho, z)
        _, q_rho, q_z = m.psi.first(rho, z)
        h = np.sin(T) * (T_rho * q_z - T_z * q_rho)
        return h, T, T_rho

    def q(nn):
        rho, wr = axis_rule(0.0, np.inf, False, nn)
        z, wz = axis_rule(-np.inf, np.inf, False, nn)
        u, wu = axis_rule(0.0, 1.0, False, nn)
        R, Z = np.meshgrid(rho, z, indexing="ij")
        h, T, T_rho = h_and_theta(R, Z)
        inner_h, _, _ = h_and_theta(
            R[..., None] * u, np.broadcast_to(Z[..., None], R.shape + (nn,))
        )
        b = -k * R * np.sum(inner_h * wu, axis=-1)
        dens = k * l * (1 - np.cos(T)) * h + l * b * np.sin(T) * T_rho
        total = 2 * np.pi * np.einsum("i,j,ij->", wr, wz, dens, optimize=True)
        return total / (16 * np.pi**2)

    return _two_level(q, n)


def hopf_charge(m: AnsatzMap, n: Optional[int] = None) -> ChargeResult:
    """Hopf invariant by the reduced Whitehead integral (unit-sphere normalisation).

    ``n`` is the node count per axis (default 128 for the three-sphere
    reduction, 64 for the axisymmetric one, whose cost grows as ``n^3``).
    """
    if m.family == "constant":
        return ChargeResult(0.0, 0, 0.0, 0.0)
    if m.family == "alpha_hopf":
        _check_admissible(m)
        raw, err = _alpha_hopf_charge(m, n or 128)
    elif m.family == "axisymmetric":
        raw, err = _axisymmetric_charge(m, n or 64)
    else:
        raise ValueError(f"Hopf charge is not defined for family {m.family!r}")
    rounded = int(np.rint(raw))
    return ChargeResult(float(raw), rounded, float(abs(raw - rounded)), float(err))


def helicity(flow, n: int = 128) -> float:
    """``(1/pi^2) int A ^ i_V nu_g`` for flows on the three-sphere chart.

    Supports velocity fields with no ``s`` component whose components depend
    on ``s`` only (dual flows of alpha-Hopf maps, Khesin flows, constant
    combinations of the coordinate rotations).
    """
    if flow.chart.name != "s3":
        raise ValueError("helicity is implemented on the three-sphere chart only")
    probe = np.array([[0.3, 0.0, 0.0], [0.3, 1.1, 2.3], [1.1, 0.4, 5.0], [1.1, 0.0, 0.0]])
    v = flow.velocity(probe)
    if (
        np.max(np.abs(v[..., 0])) > 1e-12
        or np.max(np.abs(v[0] - v[1])) > 1e-12
        or np.max(np.abs(v[2] - v[3])) > 1e-12
    ):
        raise ValueError(
            "helicity reduction needs an s-independent-direction, rotation-invariant flow"
        )
    o = flow.chart.orientation

    def f12(s):
        x = np.stack([s, np.zeros_like(s), np.zeros_like(s)], axis=-1)
        geo = geometry_jet(flow.metric, flow.chart, x)
        V = flow.velocity(x)
        return o * geo.sqrtg * V[..., 2], -o * geo.sqrtg * V[..., 1]

    def h(nn):
        return o * 4 * np.pi**2 * _nested_s_integral(f12, nn) / np.pi**2

    return _two_level(h, n)[0]


def bound_check_sigma2(
    m: AnsatzMap, mu1: float, charge: Optional[float] = None, sigma2_energy: Optional[float] = None
) -> BoundCheck:
    """Ratio ``E_sigma2 / (8 pi^2 mu1 |Q|)`` with the pullback normalised to the unit sphere.

    ``charge`` and ``sigma2_energy`` may be supplied by the caller (e.g. for
    charts where the Whitehead reduction is not implemented).
    """
    from .variational import energy

    if charge is None:
        charge = hopf_charge(m).raw_integral
    if abs(charge) < 0.5:
        raise ZeroCharge(
            "Hopf charge is zero; the bound holds trivially and the ratio is undefined"
        )
    if sigma2_energy is None:
        sigma2_energy = energy(m).sigma2_term / m.target_radius**4
    bound = 8 * np.pi**2 * mu1
    ratio = sigma2_energy / (bound * abs(charge))
    return BoundCheck(
        float(sigma2_energy), float(charge), float(bound), float(ratio), bool(ratio >= 1 - 1e-6)
    )


def bound_ratio_mass_term(
    m: AnsatzMap, potential, exponent: float = 0.75, charge=None, total_energy=None
) -> BoundCheck:
    """Report ``E / |Q|^exponent``; the constant of the lower bound is not known, so no verdict."""
    from .variational import energy

    if charge is None:
        charge = hopf_charge(m).raw_integral
    if abs(charge) < 0.5:
        raise ZeroCharge("Hopf charge is zero; the ratio is undefined")
    if total_energy is None:
        total_energy = energy(m, potential).total
    ratio = total_energy / abs(charge) ** exponent
    return BoundCheck(float(total_energy), float(charge), "unspecified", float(ratio), "ratio-only")
