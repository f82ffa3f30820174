"""Steady Euler flows: dual flows of maps, Khesin flows, Beltrami classification.

A flow is a divergence-free vector field ``V`` with a Bernoulli function
``P``; the pressure is ``p = P - |V|^2/2``.  The steady Euler equations are
checked in two equivalent forms,

    V x curl V = grad P           (curl form)
    nabla_V V + grad p = 0        (convective form),

together with ``div V = 0``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import sympy as sp

from .geometry import (
    S3,
    Chart,
    MetricSpec,
    ScalarFieldHandle,
    VectorFieldHandle,
    covariant_derivative_along,
    cross_from,
    curl_from,
    div_from,
    geometry_jet,
)
from .maps import T_SYM, AnsatzMap, Potential, _lambdify, field_state
from .variational import potential_differential, potential_on_source

NOT_BELTRAMI_ANGLE = 1e-6
DIV_TOL = 1e-6
LINEAR_SPREAD = 1e-8


@dataclass(frozen=True)
class FlowField:
    """Velocity and Bernoulli function on a chart; ``provenance`` records the construction."""

    chart: Chart
    metric: MetricSpec
    velocity: VectorFieldHandle
    bernoulli: ScalarFieldHandle
    provenance: str = "explicit"
    info: dict = field(default_factory=dict)

    def V(self, x):
        return self.velocity(x)

    def speed_sq(self, x):
        geo = geometry_jet(self.metric, self.chart, x)
        v = self.velocity(geo.x)
        return geo.inner(v, v)

    def pressure(self, x):
        return self.bernoulli(x) - 0.5 * self.speed_sq(x)

    def pressure_differential(self, x, method="closed"):
        geo = geometry_jet(self.metric, self.chart, x, method=method)
        v = self.velocity(geo.x)
        jac = self.velocity.jac(geo.x, method)
        dspeed = np.einsum("...ijm,...i,...j->...m", geo.dg, v, v, optimize=True) + 2 * np.einsum(
            "...ij,...i,...jm->...m", geo.g, v, jac, optimize=True
        )
        return self.bernoulli.d(geo.x, method) - 0.5 * dspeed


def dual_flow(m: AnsatzMap, potential: Optional[Potential] = None) -> FlowField:
    """``V = (* phi^* omega)^sharp`` with Bernoulli function ``P o phi``."""
    potential = potential or Potential.constant(0.0)
    local = threading.local()

    def state(x):
        # the residual routines ask for V, dV and dP at the same points in turn
        last = getattr(local, "last", None)
        if last is not None and last[0].shape == x.shape and np.array_equal(last[0], x):
            return last[1]
        st = field_state(m, x)
        local.last = (np.array(x, copy=True), st)
        return st

    def comps(x):
        return state(x).V

    def jac(x):
        return state(x).dV

    def P(x):
        return potential_on_source(m, potential, x)

    def dP(x):
        return potential_differential(state(x), potential)

    return FlowField(
        m.chart,
        m.metric,
        VectorFieldHandle(m.chart, comps, jac),
        ScalarFieldHandle(m.chart, P, dP),
        provenance="from_map",
        info={"map": m, "potential": potential},
    )


def _as_t_function(f):
    expr = sp.sympify(f)
    return _lambdify(expr, (T_SYM,)), _lambdify(sp.diff(expr, T_SYM), (T_SYM,)), expr


def khesin_flow(f_minus, f_plus, pressure_nodes: int = 32) -> FlowField:
    """``V = f_-(cos^2 s) xi_- + f_+(cos^2 s) xi_+`` on the round three-sphere.

    ``f_minus`` and ``f_plus`` are sympy expressions (or numbers) in ``t``.
    The pressure ``p(C) = 2 int_0^C f_- f_+ dt`` is evaluated by Gauss-Legendre
    quadrature at every point; ``P = p + |V|^2/2``.
    """
    fm, dfm, em = _as_t_function(f_minus)
    fp, dfp, ep = _as_t_function(f_plus)
    metric = MetricSpec.round()
    u, w = np.polynomial.legendre.leggauss(pressure_nodes)
    u, w = 0.5 * (u + 1.0), 0.5 * w

    def comps(x):
        C = np.cos(x[..., 0]) ** 2
        a, b = fm(C), fp(C)
        return np.stack([np.zeros_like(C), a + b, b - a], axis=-1)

    def jac(x):
        s = x[..., 0]
        C = np.cos(s) ** 2
        dC = -np.sin(2 * s)
        da, db = dfm(C) * dC, dfp(C) * dC
        out = np.zeros(x.shape + (3,))
        out[..., 1, 0] = da + db
        out[..., 2, 0] = db - da
        return out

    def pressure(x):
        C = np.cos(x[..., 0]) ** 2
        t = C[..., None] * u
        return 2 * C * np.sum(w * fm(t) * fp(t), axis=-1)

    def speed_sq(x):
        s = x[..., 0]
        v = comps(x)
        return np.cos(s) ** 2 * v[..., 1] ** 2 + np.sin(s) ** 2 * v[..., 2] ** 2

    def P(x):
        return pressure(x) + 0.5 * speed_sq(x)

    def dP(x):
        s = x[..., 0]
        C = np.cos(s) ** 2
        dC = -np.sin(2 * s)
        v = comps(x)
        j = jac(x)
        dspeed = (
            -np.sin(2 * s) * v[..., 1] ** 2
            + np.sin(2 * s) * v[..., 2] ** 2
            + 2 * np.cos(s) ** 2 * v[..., 1] * j[..., 1, 0]
            + 2 * np.sin(s) ** 2 * v[..., 2] * j[..., 2, 0]
        )
        out = np.zeros(x.shape)
        out[..., 0] = 2 * fm(C) * fp(C) * dC + 0.5 * dspeed
        return out

    return FlowField(
        S3,
        metric,
        VectorFieldHandle(S3, comps, jac),
        ScalarFieldHandle(S3, P, dP),
        provenance="khesin",
        info={"f_minus": str(em), "f_plus": str(ep), "pressure": pressure},
    )


def constant_coefficient_flow(chart: Chart, metric: MetricSpec, components, bernoulli=0.0):
    """Flow with constant coordinate components and a constant Bernoulli function."""
    comps = np.asarray(components, dtype=float)

    def V(x):
        return np.broadcast_to(comps, np.shape(x)).copy()

    def jac(x):
        return np.zeros(np.shape(x) + (3,))

    return FlowField(
        chart,
        metric,
        VectorFieldHandle(chart, V, jac),
        ScalarFieldHandle(
            chart,
            lambda x: np.full(np.shape(x)[:-1], float(bernoulli)),
            lambda x: np.zeros(np.shape(x)),
        ),
        provenance="explicit",
    )


def reeb_field(k, l) -> VectorFieldHandle:
    """``V_{k,l} = l d/dphi1 + k d/dphi2``."""
    return constant_coefficient_flow(S3, MetricSpec.weighted_sasakian(k, l), (0.0, l, k)).velocity


def vertical_field_kl(k, l, a) -> VectorFieldHandle:
    """``(l d/dphi1 + k d/dphi2) / (a k l)``, unit for the squashed and conformal metrics."""
    return constant_coefficient_flow(
        S3, MetricSpec.squashed(k, l, a), (0.0, l / (a * k * l), k / (a * k * l))
    ).velocity


# ---------------------------------------------------------------------------
# residuals


def euler_residual_curl_form(flow: FlowField, x, method: str = "closed"):
    """``(V x curl V - grad P, div V)`` at the points ``x``."""
    geo = geometry_jet(flow.metric, flow.chart, x, method=method)
    v = flow.velocity(geo.x)
    jac = flow.velocity.jac(geo.x, method)
    c = curl_from(geo, v, jac)
    gradP = geo.raise_(flow.bernoulli.d(geo.x, method))
    return cross_from(geo, v, c) - gradP, div_from(geo, v, jac)


def euler_residual_convective_form(flow: FlowField, x, method: str = "closed"):
    """``nabla_V V + grad p`` at the points ``x``."""
    geo = geometry_jet(flow.metric, flow.chart, x, method=method)
    v = flow.velocity(geo.x)
    jac = flow.velocity.jac(geo.x, method)
    return covariant_derivative_along(geo, v, jac, v) + geo.raise_(
        flow.pressure_differential(geo.x, method)
    )


@dataclass
class EulerDefects:
    curl_form: float
    divergence: float
    convective_form: float
    bernoulli_transport: float


def euler_defects(flow: FlowField, x, method: str = "closed") -> EulerDefects:
    """Sup-norms (metric lengths) of both residual forms, ``div V`` and ``V(P)``."""
    geo = geometry_jet(flow.metric, flow.chart, x)
    d1, dv = euler_residual_curl_form(flow, x, method)
    d3 = euler_residual_convective_form(flow, x, method)
    vP = np.einsum("...i,...i->...", flow.velocity(geo.x), flow.bernoulli.d(geo.x, method))
    return EulerDefects(
        float(np.max(geo.norm(d1))),
        float(np.max(np.abs(dv))),
        float(np.max(geo.norm(d3))),
        float(np.max(np.abs(vP))),
    )


def level_set_commutation(flow: FlowField, x, method: str = "closed"):
    """``(max |g(grad P, V)|, max |g(grad P, curl V)|)``."""
    geo = geometry_jet(flow.metric, flow.chart, x, method=method)
    v = flow.velocity(geo.x)
    c = curl_from(geo, v, flow.velocity.jac(geo.x, method))
    dP = flow.bernoulli.d(geo.x, method)
    return (
        float(np.max(np.abs(np.einsum("...i,...i->...", dP, v)))),
        float(np.max(np.abs(np.einsum("...i,...i->...", dP, c)))),
    )


# ---------------------------------------------------------------------------
# Beltrami fields


@dataclass
class BeltramiReport:
    classification: str
    proportionality_samples: list
    max_angle_defect: float
    constant: Optional[float] = None
    note: str = ""

    def as_dict(self):
        f = (
            np.array([v for _, v in self.proportionality_samples])
            if self.proportionality_samples
            else None
        )
        return {
            "classification": self.classification,
            "constant": self.constant,
            "max_angle_defect": self.max_angle_defect,
            "f_min": float(f.min()) if f is not None else None,
            "f_max": float(f.max()) if f is not None else None,
            "note": self.note,
        }


def beltrami_classify(
    v: VectorFieldHandle, metric: MetricSpec, chart: Chart, sample_points, method: str = "closed"
) -> BeltramiReport:
    """Decide whether ``curl V = f V`` and whether ``f`` is constant over the samples.

    Classes: ``potential`` (curl vanishes), ``linear`` (constant ``f``),
    ``nonlinear`` (varying ``f``), ``not_beltrami`` (not divergence-free or
    curl not parallel to ``V``).
    """
    geo = geometry_jet(metric, chart, sample_points, method=method)
    x = geo.x
    vec = v(x)
    jac = v.jac(x, method)
    dv = div_from(geo, vec, jac)
    c = curl_from(geo, vec, jac)
    vnorm = geo.norm(vec)
    cnorm = geo.norm(c)
    if np.max(np.abs(dv)) > DIV_TOL:
        return BeltramiReport("not_beltrami", [], float("nan"), note="not divergence-free")
    scale = max(float(np.max(vnorm)), 1e-300)
    if np.all(cnorm <= 1e-8 * scale):
        return BeltramiReport("potential", [], 0.0, constant=0.0)
    proj = geo.inner(c, vec) / np.maximum(vnorm**2, 1e-300)
    perp = geo.norm(c - proj[..., None] * vec)
    angle = np.arctan2(perp, np.abs(proj) * vnorm)
    max_angle = float(np.max(angle))
    samples = [(tuple(p), float(f)) for p, f in zip(x.reshape(-1, 3), proj.reshape(-1))]
    if max_angle > NOT_BELTRAMI_ANGLE:
        return BeltramiReport("not_beltrami", samples, max_angle, note="curl not parallel to V")
    f = proj.reshape(-1)
    mean = float(np.mean(f))
    if float(np.std(f)) <= LINEAR_SPREAD * abs(mean):
        return BeltramiReport("linear", samples, max_angle, constant=mean)
    return BeltramiReport("nonlinear", samples, max_angle)


def proportionality_constant(
    v: VectorFieldHandle, metric: MetricSpec, chart: Chart, sample_points, method: str = "fd"
) -> float:
    """Measured ``f`` of a linear Beltrami field (finite-difference curl by default)."""
    rep = beltrami_classify(v, metric, chart, sample_points, method=method)
    if rep.classification != "linear":
        raise ValueError(f"field is {rep.classification}, not a linear Beltrami field")
    return rep.constant


# ---------------------------------------------------------------------------
# forced Euler equations of the full model


def strain_divergence(state) -> np.ndarray:
    """``(div c)_j = nabla_i c^i_j`` for the Cauchy-Green tensor ``c = g^-1 h``."""
    geo = state.geo
    c = np.einsum("...ik,...kj->...ij", geo.ginv, state.pullback)
    dc = np.einsum("...ikm,...kj->...ijm", geo.dginv, state.pullback) + np.einsum(
        "...ik,...kjm->...ijm", geo.ginv, state.dpullback
    )
    return (
        np.einsum("...iji->...j", dc)
        + np.einsum("...iim,...mj->...j", geo.gamma, c)
        - np.einsum("...mij,...im->...j", geo.gamma, c)
    )


@dataclass
class ForcedEulerResult:
    force: np.ndarray
    defect: np.ndarray
    orthogonality: np.ndarray


def forced_euler_check(
    m: AnsatzMap, potential: Optional[Potential], kappa: float, x, method: str = "closed"
) -> ForcedEulerResult:
    """Force ``F = kappa g^-1(div c - 1/2 d|dphi|^2)``, defect ``nabla_V V + grad p - F``, ``g(F, V)``."""
    potential = potential or Potential.constant(0.0)
    state = field_state(m, x, method)
    geo = state.geo
    F = kappa * geo.raise_(strain_divergence(state) - 0.5 * state.ddirichlet)
    V, dV = state.V, state.dV
    dspeed = np.einsum("...ijm,...i,...j->...m", geo.dg, V, V, optimize=True) + 2 * np.einsum(
        "...ij,...i,...jm->...m", geo.g, V, dV, optimize=True
    )
    dp = potential_differential(state, potential) - 0.5 * dspeed
    defect = covariant_derivative_along(geo, V, dV, V) + geo.raise_(dp) - F
    return ForcedEulerResult(F, defect, geo.inner(F, V))


def flow_from_callables(
    chart: Chart,
    metric: MetricSpec,
    velocity: Callable,
    bernoulli: Callable,
    velocity_jac: Optional[Callable] = None,
    bernoulli_d: Optional[Callable] = None,
):
    """Wrap user callables as a FlowField (partials by finite differences when omitted)."""
    return FlowField(
        chart,
        metric,
        VectorFieldHandle(chart, velocity, velocity_jac),
        ScalarFieldHandle(chart, bernoulli, bernoulli_d),
    )
