"""Parametric maps from a 3-manifold chart into a round 2-sphere.

All four ansatz families share one shape,

    phi = R * (sin T cos P, sin T sin P, cos T),

with a polar angle ``T`` and an azimuth ``P`` given as functions on the
chart.  Closed-form first and second derivatives of ``T`` and ``P`` are
pushed through the chain rule, which gives the full 2-jet of the map; all
downstream quantities (pullback area form, the dual vector field, strain
spectrum, fibre curvature) are built from that jet.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import mpmath
import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

from .errors import RankDeficient
from .geometry import (
    CYLINDRICAL,
    EPS,
    R2XS1,
    S3,
    Chart,
    GeometryJet,
    MetricSpec,
    covariant_derivative_along,
    fd_jacobian,
    geometry_jet,
    hodge_from,
)

RANK_TOL = 1e-12
_ONE_INSIDE = np.nextafter(1.0, 0.0)

S_SYM = sp.Symbol("s", real=True)
T_SYM = sp.Symbol("t", real=True)
RHO_SYM = sp.Symbol("rho", real=True)
Z_SYM = sp.Symbol("z", real=True)


# ---------------------------------------------------------------------------
# profiles


def _lambdify(expr, args):
    f = sp.lambdify(args, expr, modules="numpy", cse=True)

    def call(*xs):
        out = f(*xs)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(*xs).shape).copy()

    return call


class Profile:
    """A profile function with access to its first two derivatives.

    Closed-form profiles are built from a sympy expression in ``s`` and
    differentiated symbolically once; tabulated profiles interpolate values
    and slopes with not-a-knot cubic splines.
    """

    def __init__(self, value, d1, d2, domain, tag, endpoints=None, expr=None):
        self._value = value
        self._d1 = d1
        self._d2 = d2
        self.domain = tuple(float(v) for v in domain)
        self.tag = tag
        self.expr = expr
        self.endpoints = endpoints if endpoints is not None else self._endpoints()

    @classmethod
    def from_expression(cls, expr, domain=(0.0, np.pi / 2), tag="closed_form"):
        expr = sp.sympify(expr)
        d1 = sp.diff(expr, S_SYM)
        d2 = sp.diff(d1, S_SYM)
        return cls(
            _lambdify(expr, (S_SYM,)),
            _lambdify(d1, (S_SYM,)),
            _lambdify(d2, (S_SYM,)),
            domain,
            tag,
            expr=expr,
        )

    @classmethod
    def tabulated(cls, s, values, slopes=None, tag="tabulated"):
        """Interpolated profile; ``slopes`` (exact derivatives at the nodes) are optional."""
        s = np.asarray(s, dtype=float)
        values = np.asarray(values, dtype=float)
        spline = CubicSpline(s, values, bc_type="not-a-knot")
        if slopes is None:
            dspline = spline.derivative()
        else:
            dspline = CubicSpline(s, np.asarray(slopes, dtype=float), bc_type="not-a-knot")
        ddspline = dspline.derivative()
        return cls(
            spline,
            dspline,
            ddspline,
            (s[0], s[-1]),
            tag,
            endpoints=(float(values[0]), float(values[-1])),
        )

    def _endpoints(self):
        ends = []
        for e in self.domain:
            # step inward when the closed form is not finite at the boundary itself
            for probe in (e, e + 1e-12 if e == self.domain[0] else e - 1e-12):
                probe = probe if np.isfinite(probe) else 1e12
                with np.errstate(all="ignore"):
                    v = float(self._value(np.array(probe)))
                if np.isfinite(v):
                    break
            ends.append(v)
        return tuple(ends)

    def __call__(self, s):
        return np.asarray(self._value(np.asarray(s, dtype=float)), dtype=float)

    def d1(self, s):
        return np.asarray(self._d1(np.asarray(s, dtype=float)), dtype=float)

    def d2(self, s):
        return np.asarray(self._d2(np.asarray(s, dtype=float)), dtype=float)

    def __repr__(self):
        return f"Profile({self.tag!r}, endpoints={self.endpoints})"


def linear_profile(slope=2.0, offset=0.0):
    return Profile.from_expression(offset + slope * S_SYM, tag=f"linear({slope},{offset})")


def harmonic_profile(k):
    """``2 arctan(tan^k s)``, the profile of the z^k composed with the Hopf map."""
    expr = 2 * sp.atan2(sp.sin(S_SYM) ** k, sp.cos(S_SYM) ** k)
    return Profile.from_expression(expr, tag=f"harmonic({k})")


def _A(k, l):
    return k**2 * sp.sin(S_SYM) ** 2 + l**2 * sp.cos(S_SYM) ** 2


def squashed_profile(k, l):
    if k == l:
        return Profile.from_expression(sp.pi * sp.cos(S_SYM) ** 2, tag="pi_cos2")
    k, l = sp.Integer(k), sp.Integer(l)
    A = k**2 + l**2 - (k**2 - l**2) * sp.cos(2 * S_SYM)
    expr = sp.pi * (4 * k**3 - sp.sqrt(2) * A ** sp.Rational(3, 2)) / (4 * (k**3 - l**3))
    return Profile.from_expression(expr, tag=f"squashed({k},{l})")


def conformal_profile(k, l):
    if k == l:
        return Profile.from_expression(sp.pi * sp.cos(S_SYM) ** 2, tag="pi_cos2")
    k, l = sp.Integer(k), sp.Integer(l)
    A = k**2 + l**2 - (k**2 - l**2) * sp.cos(2 * S_SYM)
    expr = l * sp.pi / (k - l) * (k * sp.sqrt(2) / sp.sqrt(A) - 1)
    return Profile.from_expression(expr, tag=f"conformal({k},{l})")


def oldbaby_profile(k):
    """``arccos(2(1 + k^-2) cos^2 s - 2 k^-2 cos^4 s - 1)``.

    Written as ``2 atan2(sin s sqrt(k^2 - 1 + sin^2 s), cos s sqrt(k^2 + sin^2 s))``,
    which is the same function without the cancellation of the arccos form
    near the poles.
    """
    sn, cs = sp.sin(S_SYM), sp.cos(S_SYM)
    # k = 1: keep sin s instead of sqrt(sin^2 s), which sympy turns into |sin s|
    root = sn if k == 1 else sp.sqrt(k * k - 1 + sn**2)
    expr = 2 * sp.atan2(sn * root, cs * sp.sqrt(k * k + sn**2))
    return Profile.from_expression(expr, tag=f"oldbaby({k})")


def winding_profile():
    expr = sp.acos(1 - 2 / sp.sqrt(S_SYM**2 + 1))
    return Profile.from_expression(expr, domain=(0.0, np.inf), tag="winding")


def perturbed_profile(base: Profile, coefficients, power=4):
    """``base + sin^power(2s) * sum_j c_j cos(2 j s)``; the bump vanishes at both poles."""
    if base.expr is None:
        raise ValueError("perturbation needs a closed-form base profile")
    bump = sum(float(c) * sp.cos(2 * j * S_SYM) for j, c in enumerate(coefficients))
    expr = base.expr + sp.sin(2 * S_SYM) ** power * bump
    return Profile.from_expression(expr, domain=base.domain, tag=f"{base.tag}+bump")


# ---------------------------------------------------------------------------
# potentials on the target


_POTENTIALS = {
    "constant": lambda p: sp.Float(p.get("c", 0.0)),
    "baby": lambda p: (1 - T_SYM ** sp.nsimplify(p["a"])) ** sp.nsimplify(p["b"]),
    "old_baby": lambda p: 1 - T_SYM,
    "new_baby": lambda p: 1 - T_SYM**2,
    "quartic_sixteenth": lambda p: (1 - T_SYM) ** 4 / 16,
    "charge_dependent": lambda p: (
        sp.Integer(p["k"]) ** 4
        / 32
        * (1 - T_SYM**2) ** sp.Rational(2 * (p["k"] - 1), p["k"])
        * ((1 + T_SYM) ** sp.Rational(1, p["k"]) + (1 - T_SYM) ** sp.Rational(1, p["k"])) ** 4
    ),
}


@dataclass(frozen=True)
class Potential:
    """A potential on the target sphere depending on the normalised height ``t = y_3/|y|``."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _POTENTIALS:
            raise ValueError(f"unknown potential family {self.family!r}")

    @cached_property
    def expr(self):
        return _POTENTIALS[self.family](self.params)

    @cached_property
    def _funcs(self):
        return _lambdify(self.expr, (T_SYM,)), _lambdify(sp.diff(self.expr, T_SYM), (T_SYM,))

    def of_height(self, t):
        return self._funcs[0](np.asarray(t, dtype=float))

    def dheight(self, t):
        """``dP/dt``, evaluated one ulp inside ``[-1, 1]``.

        Several potentials have an infinite slope at the target poles; the
        slope always multiplies a tangential factor that vanishes there, so a
        large finite value keeps the product finite where ``inf * 0`` would not.
        """
        t = np.clip(np.asarray(t, dtype=float), -_ONE_INSIDE, _ONE_INSIDE)
        return self._funcs[1](t)

    @classmethod
    def constant(cls, c=0.0):
        return cls("constant", {"c": c})

    @classmethod
    def old_baby(cls):
        return cls("old_baby")

    @classmethod
    def new_baby(cls):
        return cls("new_baby")

    @classmethod
    def quartic_sixteenth(cls):
        return cls("quartic_sixteenth")

    @classmethod
    def charge_dependent(cls, k):
        return cls("charge_dependent", {"k": int(k)})

    @classmethod
    def baby(cls, a, b):
        return cls("baby", {"a": a, "b": b})


def _height(y):
    y = np.asarray(y, dtype=float)
    return np.clip(y[..., 2] / np.linalg.norm(y, axis=-1), -1.0, 1.0)


def potential_eval(P: Potential, y) -> np.ndarray:
    return P.of_height(_height(y))


def potential_grad(P: Potential, y) -> np.ndarray:
    """Gradient of the potential on the sphere through ``y`` (tangent, ambient components)."""
    y = np.asarray(y, dtype=float)
    radius = np.linalg.norm(y, axis=-1)
    t = _height(y)
    n = y / radius[..., None]
    e3 = np.array([0.0, 0.0, 1.0])
    return (P.dheight(t) / radius)[..., None] * (e3 - t[..., None] * n)


# ---------------------------------------------------------------------------
# angle functions of the ansatz families


class PlaneFunction:
    """Sympy-backed function of ``(rho, z)`` embedded in cylindrical coordinates."""

    def __init__(self, expr):
        self.expr = sp.sympify(expr)
        args = (RHO_SYM, Z_SYM)
        grads = [sp.diff(self.expr, v) for v in args]
        self._f = _lambdify(self.expr, args)
        self._g = [_lambdify(e, args) for e in grads]
        self._h = [[_lambdify(sp.diff(gi, v), args) for v in args] for gi in grads]

    def scaled(self, lam):
        return PlaneFunction(
            self.expr.subs({RHO_SYM: lam * RHO_SYM, Z_SYM: lam * Z_SYM}, simultaneous=True)
        )

    def first(self, rho, z):
        """Value and ``(d/drho, d/dz)`` on plane coordinates."""
        return self._f(rho, z), self._g[0](rho, z), self._g[1](rho, z)

    def jet(self, x):
        rho, z = x[..., 0], x[..., 2]
        val = self._f(rho, z)
        d = np.zeros(x.shape)
        dd = np.zeros(x.shape + (3,))
        idx = (0, 2)
        for a in range(2):
            d[..., idx[a]] = self._g[a](rho, z)
            for b in range(2):
                dd[..., idx[a], idx[b]] = self._h[a][b](rho, z)
        return val, d, dd


FAMILIES = ("alpha_hopf", "axisymmetric", "cylinder_winding", "constant")


@dataclass(frozen=True)
class AnsatzMap:
    """A map ``phi: M -> S^2(target_radius)`` from one of the ansatz families.

    * ``alpha_hopf``: ``T = alpha(s)``, ``P = -k phi1 + l phi2`` on the S^3 chart;
    * ``cylinder_winding``: ``T = alpha(r)``, ``P = theta - phi`` on R^2 x S^1;
    * ``axisymmetric``: ``T = Theta(rho, z)``, ``P = l theta - k psi(rho, z)``;
    * ``constant``: fixed angles ``point = (T0, P0)``.
    """

    family: str
    chart: Chart
    metric: MetricSpec
    k: int = 1
    l: int = 1
    profile: Optional[Profile] = None
    theta: Optional[PlaneFunction] = None
    psi: Optional[PlaneFunction] = None
    point: tuple = (0.0, 0.0)
    target_radius: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown ansatz family {self.family!r}")
        if self.target_radius <= 0:
            raise ValueError("target_radius must be positive")

    # -- angles -----------------------------------------------------------
    def angles_jet(self, x):
        """``(T, dT, ddT, P, dP, ddP)`` at points ``x`` (closed form)."""
        shape = x.shape[:-1]
        zero1 = np.zeros(shape + (3,))
        zero2 = np.zeros(shape + (3, 3))
        if self.family == "alpha_hopf" or self.family == "cylinder_winding":
            s = x[..., 0]
            T = self.profile(s)
            dT = zero1.copy()
            dT[..., 0] = self.profile.d1(s)
            ddT = zero2.copy()
            ddT[..., 0, 0] = self.profile.d2(s)
            if self.family == "alpha_hopf":
                P = -self.k * x[..., 1] + self.l * x[..., 2]
                dP = np.broadcast_to(np.array([0.0, -self.k, self.l]), shape + (3,))
            else:
                P = x[..., 1] - x[..., 2]
                dP = np.broadcast_to(np.array([0.0, 1.0, -1.0]), shape + (3,))
            return T, dT, ddT, P, dP, zero2
        if self.family == "axisymmetric":
            T, dT, ddT = self.theta.jet(x)
            q, dq, ddq = self.psi.jet(x)
            e_theta = np.zeros(3)
            e_theta[1] = self.l
            P = self.l * x[..., 1] - self.k * q
            return T, dT, ddT, P, e_theta - self.k * dq, -self.k * ddq
        T = np.full(shape, float(self.point[0]))
        P = np.full(shape, float(self.point[1]))
        return T, zero1, zero2, P, zero1, zero2

    # -- map jets -----------------------------------------------------------
    def evaluate(self, x):
        x = self.chart.validate(x)
        T, _, _, P, _, _ = self.angles_jet(x)
        return self.target_radius * np.stack(
            [np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1
        )

    def jet(self, x, method="closed"):
        """``(phi, dphi[..., A, i], ddphi[..., A, i, j])``."""
        x = self.chart.validate(x)
        if method == "fd":
            phi = self.evaluate(x)
            dphi = fd_jacobian(self.evaluate, x, self.chart)
            ddphi = fd_jacobian(lambda y: fd_jacobian(self.evaluate, y, self.chart), x, self.chart)
            return phi, dphi, ddphi
        if method != "closed":
            raise ValueError(f"unknown derivative method {method!r}")
        T, dT, ddT, P, dP, ddP = self.angles_jet(x)
        sT, cT, sP, cP = np.sin(T), np.cos(T), np.sin(P), np.cos(P)
        zero = np.zeros_like(T)
        n = np.stack([sT * cP, sT * sP, cT], -1)
        nT = np.stack([cT * cP, cT * sP, -sT], -1)
        nP = np.stack([-sT * sP, sT * cP, zero], -1)
        nTP = np.stack([-cT * sP, cT * cP, zero], -1)
        nPP = np.stack([-sT * cP, -sT * sP, zero], -1)
        R = self.target_radius
        dphi = R * (nT[..., :, None] * dT[..., None, :] + nP[..., :, None] * dP[..., None, :])
        outer = lambda a, b: a[..., :, None] * b[..., None, :]  # noqa: E731
        TT, TP, PP = outer(dT, dT), outer(dT, dP) + outer(dP, dT), outer(dP, dP)
        ddphi = R * (
            -n[..., :, None, None] * TT[..., None, :, :]
            + nTP[..., :, None, None] * TP[..., None, :, :]
            + nPP[..., :, None, None] * PP[..., None, :, :]
            + nT[..., :, None, None] * ddT[..., None, :, :]
            + nP[..., :, None, None] * ddP[..., None, :, :]
        )
        return R * n, dphi, ddphi

    def differential(self, x, method="closed"):
        return self.jet(x, method)[1]

    def with_profile(self, profile):
        return AnsatzMap(**{**self.__dict__, "profile": profile})

    def with_metric(self, metric):
        return AnsatzMap(**{**self.__dict__, "metric": metric})


def alpha_hopf(k, l, profile, metric=None, target_radius=0.5):
    return AnsatzMap(
        "alpha_hopf",
        S3,
        metric or MetricSpec.round(),
        k=k,
        l=l,
        profile=profile,
        target_radius=target_radius,
    )


def cylinder_winding(profile=None, target_radius=1.0):
    return AnsatzMap(
        "cylinder_winding",
        R2XS1,
        MetricSpec.cylinder(),
        profile=profile or winding_profile(),
        target_radius=target_radius,
    )


def axisymmetric(k, l, theta_expr, psi_expr, target_radius=1.0):
    return AnsatzMap(
        "axisymmetric",
        CYLINDRICAL,
        MetricSpec.euclidean3(),
        k=k,
        l=l,
        theta=PlaneFunction(theta_expr),
        psi=PlaneFunction(psi_expr),
        target_radius=target_radius,
    )


def constant_map(point=(0.0, 0.0), chart=S3, metric=None, target_radius=1.0):
    """Constant map at polar/azimuthal angles ``point``."""
    if metric is None:
        metric = MetricSpec.round() if chart is S3 else MetricSpec.euclidean3()
    return AnsatzMap("constant", chart, metric, point=tuple(point), target_radius=target_radius)


def evaluate(m: AnsatzMap, x):
    return m.evaluate(x)


def differential(m: AnsatzMap, x, method="closed"):
    return m.differential(x, method)


# ---------------------------------------------------------------------------
# field state: everything first- and second-order at a batch of points


@dataclass
class FieldState:
    """Jets of a map and of its dual vector field at a batch of points.

    ``F`` is the pullback of the target area form, ``V`` the vector with
    ``i_V nu_g = F`` (so ``|V|^2 = |F|^2 = sigma2``).
    """

    map: AnsatzMap
    geo: GeometryJet
    phi: np.ndarray
    dphi: np.ndarray
    ddphi: np.ndarray

    @property
    def x(self):
        return self.geo.x

    @cached_property
    def _cross(self):
        # [..., i, j, A] = (d_i phi x d_j phi)^A
        a = np.swapaxes(self.dphi, -1, -2)
        return np.cross(a[..., :, None, :], a[..., None, :, :])

    @cached_property
    def F(self):
        R = self.map.target_radius
        return np.einsum("...ijA,...A->...ij", self._cross, self.phi) / R

    @cached_property
    def dF(self):
        R = self.map.target_radius
        q = np.cross(np.swapaxes(self.dphi, -1, -2), self.phi[..., None, :])  # d_j phi x phi
        out = np.einsum("...ijA,...Am->...ijm", self._cross, self.dphi)
        out += np.einsum("...Aim,...jA->...ijm", self.ddphi, q)
        out -= np.einsum("...Ajm,...iA->...ijm", self.ddphi, q)
        return out / R

    @cached_property
    def V(self):
        return hodge_from(self.geo, self.F)

    @cached_property
    def dV(self):
        geo = self.geo
        return (
            geo.orientation
            * 0.5
            * np.einsum("ijk,...jkm->...im", EPS, self.dF)
            / geo.sqrtg[..., None, None]
            - self.V[..., :, None] * geo.dlog_sqrtg[..., None, :]
        )

    @cached_property
    def _F_up(self):
        return self.geo.ginv @ self.F @ self.geo.ginv

    @cached_property
    def sigma2(self):
        return 0.5 * np.einsum("...ij,...ij->...", self._F_up, self.F)

    @cached_property
    def dsigma2(self):
        geo = self.geo
        # d(g^ia g^jb F_ij F_ab)/2 = F^ab dF_abm + dg^ia_m (F g^-1 F^T)... collected below
        FgF = self.F @ geo.ginv @ np.swapaxes(self.F, -1, -2)  # [i, a] = F_ij g^jb F_ab
        return np.einsum("...ab,...abm->...m", self._F_up, self.dF) + np.einsum(
            "...iam,...ia->...m", geo.dginv, FgF
        )

    @cached_property
    def pullback(self):
        """Pullback metric ``h_ij = dphi_i . dphi_j``."""
        return np.einsum("...ai,...aj->...ij", self.dphi, self.dphi)

    @cached_property
    def dpullback(self):
        t = np.einsum("...aim,...aj->...ijm", self.ddphi, self.dphi)
        return t + np.swapaxes(t, -2, -3)

    @cached_property
    def dirichlet(self):
        """``|dphi|^2``."""
        return np.einsum("...ij,...ij->...", self.geo.ginv, self.pullback)

    @cached_property
    def ddirichlet(self):
        return np.einsum("...ijm,...ij->...m", self.geo.dginv, self.pullback) + np.einsum(
            "...ij,...ijm->...m", self.geo.ginv, self.dpullback
        )

    def regular_mask(self, tol=RANK_TOL):
        return self.sigma2 >= tol

    def require_regular(self, tol=RANK_TOL):
        bad = ~self.regular_mask(tol)
        if np.any(bad):
            raise RankDeficient(
                f"{int(bad.sum())} point(s) with sigma2 < {tol:g} (critical points)"
            )

    @cached_property
    def _sign(self):
        return _orientation_sign(self.V)

    @cached_property
    def U(self):
        """Unit vertical field (sign convention: positive last component)."""
        self.require_regular()
        return self._sign[..., None] * self.V / np.sqrt(self.sigma2)[..., None]

    @cached_property
    def dU(self):
        self.require_regular()
        norm = np.sqrt(self.sigma2)
        dnorm = self.dsigma2 / (2 * norm[..., None])
        out = self.dV / norm[..., None, None] - self.V[..., :, None] * dnorm[..., None, :] / (
            self.sigma2[..., None, None]
        )
        return self._sign[..., None, None] * out

    @cached_property
    def mean_curvature(self):
        """``nabla_U U`` of the unit vertical field."""
        return covariant_derivative_along(self.geo, self.U, self.dU, self.U)


def _orientation_sign(v):
    """+1/-1 per point so that the last non-negligible component becomes positive."""
    sign = np.ones(v.shape[:-1])
    decided = np.zeros(v.shape[:-1], dtype=bool)
    scale = np.max(np.abs(v), axis=-1)
    for idx in (2, 1, 0):
        c = v[..., idx]
        usable = (~decided) & (np.abs(c) > 1e-9 * scale)
        sign = np.where(usable, np.sign(c), sign)
        decided |= usable
    return sign


def field_state(m: AnsatzMap, x, method: str = "closed") -> FieldState:
    x = m.chart.validate(x)
    geo = geometry_jet(m.metric, m.chart, x, method=method)
    phi, dphi, ddphi = m.jet(x, method)
    return FieldState(m, geo, phi, dphi, ddphi)


def pullback_area_form(m: AnsatzMap, x, method: str = "closed") -> np.ndarray:
    """Components ``(phi^* omega)_ij`` of the pulled-back target area form."""
    return field_state(m, x, method).F


# ---------------------------------------------------------------------------
# strain spectrum and vertical geometry


@dataclass
class StrainSpectrum:
    lambda1_sq: np.ndarray
    lambda2_sq: np.ndarray
    U: np.ndarray
    E1: np.ndarray
    E2: np.ndarray

    @property
    def sigma2(self):
        return self.lambda1_sq * self.lambda2_sq


def _generalized_eigh(h, g):
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    M = Linv @ h @ np.swapaxes(Linv, -1, -2)
    w, Q = np.linalg.eigh(0.5 * (M + np.swapaxes(M, -1, -2)))
    return w, np.swapaxes(Linv, -1, -2) @ Q


def strain_spectrum(m: AnsatzMap, x, method: str = "closed") -> StrainSpectrum:
    """Eigen-data of the Cauchy-Green tensor ``g^-1 dphi^T dphi``.

    Eigenvalues come out in ascending order ``0 <= l1^2 <= l2^2``; the
    eigenvectors are g-orthonormal.  Raises RankDeficient where both nonzero
    eigenvalues fall below the rank tolerance.
    """
    x = m.chart.validate(x)
    g = geometry_jet(m.metric, m.chart, x).g
    dphi = m.differential(x, method)
    h = np.einsum("...ai,...aj->...ij", dphi, dphi)
    w, vecs = _generalized_eigh(h, g)
    w = np.maximum(w, 0.0)
    if np.any(w[..., 2] < RANK_TOL):
        raise RankDeficient("Cauchy-Green tensor vanishes (rank of dphi below 1)")
    U = vecs[..., :, 0]
    U = _orientation_sign(U)[..., None] * U
    return StrainSpectrum(w[..., 1], w[..., 2], U, vecs[..., :, 1], vecs[..., :, 2])


def vertical_unit(m: AnsatzMap, x, method: str = "closed") -> np.ndarray:
    """Unit vector spanning ``ker dphi``, from the eigen-decomposition."""
    spec = strain_spectrum(m, x, method)
    if np.any(spec.sigma2 < RANK_TOL):
        raise RankDeficient("sigma2 below tolerance: vertical direction undefined")
    return spec.U


def fiber_mean_curvature(m: AnsatzMap, x, method: str = "closed") -> np.ndarray:
    """``nabla_U U`` for the unit vertical field.

    ``method='closed'`` differentiates ``U = V/|V|`` through the 2-jet of the
    map; ``method='fd'`` differentiates the eigenvector field numerically and
    uses finite-difference Christoffel symbols (an independent oracle).
    """
    x = m.chart.validate(x)
    if method == "closed":
        return field_state(m, x).mean_curvature
    geo = geometry_jet(m.metric, m.chart, x, method="fd")
    U = vertical_unit(m, x)
    dU = fd_jacobian(lambda y: vertical_unit(m, y), x, m.chart)
    return covariant_derivative_along(geo, U, dU, U)


def _sin_alpha_near_poles(profile: Profile, s_small):
    """``sin alpha`` at ``s_small`` and ``pi/2 - s_small``.

    Closed-form profiles are evaluated in 50-digit arithmetic: near ``alpha = pi``
    the double value of ``alpha`` cannot resolve ``sin alpha`` below ~1e-16,
    which is reached quickly for large pole exponents.
    """
    if profile.expr is None:
        return (
            np.sin(profile(np.array(s_small))),
            np.sin(profile(np.pi / 2 - np.array(s_small))),
        )
    f = sp.lambdify(S_SYM, sp.sin(profile.expr), "mpmath")
    with mpmath.workdps(50):
        lo = [abs(f(mpmath.mpf(v))) for v in s_small]
        hi = [abs(f(mpmath.pi / 2 - mpmath.mpf(v))) for v in s_small]
    return lo, hi


def pole_exponents(profile: Profile, s_small=(1e-4, 1e-5)):
    """Local exponents ``a, b`` with ``sin alpha ~ sin^a s`` at 0 and ``~ cos^b s`` at pi/2."""
    s1, s2 = s_small

    def slope(vals):
        if vals[0] == 0 or vals[1] == 0:
            return np.inf
        return float(mpmath.log(abs(vals[0]) / abs(vals[1])) / np.log(np.sin(s1) / np.sin(s2)))

    lo, hi = _sin_alpha_near_poles(profile, s_small)
    return slope(lo), slope(hi)


def is_smooth_alpha_hopf(k, l, profile: Profile, tol=0.05) -> bool:
    """Pole criterion for smoothness of the alpha-Hopf map: ``a >= |l|`` and ``b >= |k|``."""
    a, b = pole_exponents(profile)
    return a >= abs(l) - tol and b >= abs(k) - tol
