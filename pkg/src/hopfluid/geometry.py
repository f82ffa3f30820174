"""Coordinate-chart Riemannian geometry in three dimensions.

Every operation is vectorised over a leading batch of points: a point array
has shape ``(..., 3)`` and results carry the same leading shape.  Index
conventions used throughout the package:

* ``g[..., i, j]`` metric components in the coordinate basis;
* ``dg[..., i, j, m]`` is the partial derivative of ``g_ij`` along ``x^m``
  (the differentiation index is always the last one);
* ``gamma[..., i, j, k]`` is the Christoffel symbol with upper index ``i``;
* ``jac[..., i, m]`` is the derivative of the vector component ``V^i`` along
  ``x^m``.

Derivatives come from closed forms registered per metric family.  Central
finite differences are the fallback and serve as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import OutOfDomain, SingularPoint, StepTooLarge

FD_STEP = 1e-5
SINGULAR_TOL = 1e-12

# Levi-Civita symbol
EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Chart:
    """A single coordinate box.

    ``singular_loci`` lists ``(axis, value)`` pairs of coordinate hyperplanes
    where the metric degenerates.  ``orientation`` is +1 when the coordinate
    order is positively oriented for the manifold's standard orientation.
    """

    name: str
    coords: tuple
    domain: tuple
    periodic: tuple
    singular_loci: tuple = ()
    orientation: int = 1
    dim: int = 3

    @property
    def scales(self) -> np.ndarray:
        """Per-axis length used to scale finite-difference steps."""
        out = []
        for lo, hi in self.domain:
            width = hi - lo
            out.append(width if np.isfinite(width) else 1.0)
        return np.array(out)

    def validate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 3:
            raise ValueError(f"points must have trailing dimension 3, got {x.shape}")
        for axis, (lo, hi) in enumerate(self.domain):
            if self.periodic[axis]:
                continue
            c = x[..., axis]
            if np.any(c < lo) or np.any(c > hi) or not np.all(np.isfinite(c)):
                raise OutOfDomain(f"{self.coords[axis]} outside [{lo}, {hi}] on chart {self.name}")
        for axis, value in self.singular_loci:
            if np.any(np.abs(x[..., axis] - value) <= SINGULAR_TOL):
                raise SingularPoint(
                    f"point on singular locus {self.coords[axis]}={value} of chart {self.name}"
                )
        return x


CARTESIAN = Chart(
    "cartesian",
    ("x", "y", "z"),
    ((-np.inf, np.inf),) * 3,
    (False, False, False),
)
CYLINDRICAL = Chart(
    "cylindrical",
    ("rho", "theta", "z"),
    ((0.0, np.inf), (0.0, _TWO_PI), (-np.inf, np.inf)),
    (False, True, False),
    singular_loci=((0, 0.0),),
)
R2XS1 = Chart(
    "r2xs1",
    ("r", "theta", "phi"),
    ((0.0, np.inf), (0.0, _TWO_PI), (0.0, _TWO_PI)),
    (False, True, True),
    singular_loci=((0, 0.0),),
)
# (s, phi1, phi2) is negatively oriented w.r.t. the boundary orientation of S^3 in C^2.
S3 = Chart(
    "s3",
    ("s", "phi1", "phi2"),
    ((0.0, np.pi / 2), (0.0, _TWO_PI), (0.0, _TWO_PI)),
    (False, True, True),
    singular_loci=((0, 0.0), (0, np.pi / 2)),
    orientation=-1,
)

CHARTS = {c.name: c for c in (CARTESIAN, CYLINDRICAL, R2XS1, S3)}


# ---------------------------------------------------------------------------
# metric families


def _diag(*entries):
    shape = np.broadcast(*entries).shape
    out = np.zeros(shape + (3, 3))
    for i, e in enumerate(entries):
        out[..., i, i] = e
    return out


def _s_jet(x, g_entries, dg_entries):
    """Assemble g and dg for metrics depending on the first coordinate only."""
    g = np.zeros(x.shape[:-1] + (3, 3))
    dg = np.zeros(x.shape[:-1] + (3, 3, 3))
    for (i, j), value in g_entries.items():
        g[..., i, j] = g[..., j, i] = value
    for (i, j), value in dg_entries.items():
        dg[..., i, j, 0] = dg[..., j, i, 0] = value
    return g, dg


def _euclidean_jet(x, chart, params):
    if chart.name == "cartesian":
        return np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3)).copy(), np.zeros(
            x.shape[:-1] + (3, 3, 3)
        )
    if chart.name in ("cylindrical", "r2xs1"):
        rho = x[..., 0]
        one = np.ones_like(rho)
        return _s_jet(x, {(0, 0): one, (1, 1): rho**2, (2, 2): one}, {(1, 1): 2 * rho})
    raise ValueError(f"flat metric not available on chart {chart.name}")


def _round_jet(x, chart, params):
    s = x[..., 0]
    S, C, sin2 = np.sin(s) ** 2, np.cos(s) ** 2, np.sin(2 * s)
    return _s_jet(
        x,
        {(0, 0): np.ones_like(s), (1, 1): C, (2, 2): S},
        {(1, 1): -sin2, (2, 2): sin2},
    )


def _squashed_jet(x, chart, params):
    k, l, a = params["k"], params["l"], params["a"]
    s = x[..., 0]
    S, C, sin2 = np.sin(s) ** 2, np.cos(s) ** 2, np.sin(2 * s)
    a2 = a * a
    return _s_jet(
        x,
        {(0, 0): a2 * (k * k * S + l * l * C), (1, 1): a2 * k * k * C, (2, 2): a2 * l * l * S},
        {
            (0, 0): a2 * (k * k - l * l) * sin2,
            (1, 1): -a2 * k * k * sin2,
            (2, 2): a2 * l * l * sin2,
        },
    )


def _conformal_jet(x, chart, params):
    k, l, a = params["k"], params["l"], params["a"]
    s = x[..., 0]
    S, C, sin2 = np.sin(s) ** 2, np.cos(s) ** 2, np.sin(2 * s)
    A = k * k * S + l * l * C
    omega = a * a * k * k * l * l / A
    domega = -omega * (k * k - l * l) * sin2 / A
    return _s_jet(
        x,
        {(0, 0): omega, (1, 1): omega * C, (2, 2): omega * S},
        {
            (0, 0): domega,
            (1, 1): domega * C - omega * sin2,
            (2, 2): domega * S + omega * sin2,
        },
    )


def _weighted_sasakian_jet(x, chart, params):
    k, l = params["k"], params["l"]
    s = x[..., 0]
    S, C, sin2 = np.sin(s) ** 2, np.cos(s) ** 2, np.sin(2 * s)
    w = k * S + l * C
    dw = (k - l) * sin2
    P = S * C
    dP = sin2 * (C - S)
    cube = dP / w**3 - 3 * P * dw / w**4  # derivative of P / w^3
    g11 = k * k * P / w**3 + C**2 / w**2
    g22 = l * l * P / w**3 + S**2 / w**2
    g12 = -k * l * P / w**3 + P / w**2
    d11 = k * k * cube - 2 * C * sin2 / w**2 - 2 * C**2 * dw / w**3
    d22 = l * l * cube + 2 * S * sin2 / w**2 - 2 * S**2 * dw / w**3
    d12 = -k * l * cube + dP / w**2 - 2 * P * dw / w**3
    return _s_jet(
        x,
        {(0, 0): 1.0 / w, (1, 1): g11, (2, 2): g22, (1, 2): g12},
        {(0, 0): -dw / w**2, (1, 1): d11, (2, 2): d22, (1, 2): d12},
    )


_FAMILIES = {
    "euclidean3": (_euclidean_jet, ("cartesian", "cylindrical"), ()),
    "cylinder_R2xS1": (_euclidean_jet, ("r2xs1",), ()),
    "s3_round": (_round_jet, ("s3",), ()),
    "s3_squashed": (_squashed_jet, ("s3",), ("k", "l", "a")),
    "s3_conformal": (_conformal_jet, ("s3",), ("k", "l", "a")),
    "s3_weighted_sasakian": (_weighted_sasakian_jet, ("s3",), ("k", "l")),
}


@dataclass(frozen=True)
class MetricSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown metric family {self.family!r}")
        required = _FAMILIES[self.family][2]
        missing = [p for p in required if p not in self.params]
        if missing:
            raise ValueError(f"metric {self.family} needs parameters {missing}")

    @classmethod
    def euclidean3(cls):
        return cls("euclidean3")

    @classmethod
    def cylinder(cls):
        return cls("cylinder_R2xS1")

    @classmethod
    def round(cls):
        return cls("s3_round")

    @classmethod
    def squashed(cls, k, l, a):
        return cls("s3_squashed", {"k": k, "l": l, "a": a})

    @classmethod
    def conformal(cls, k, l, a):
        return cls("s3_conformal", {"k": k, "l": l, "a": a})

    @classmethod
    def weighted_sasakian(cls, k, l):
        return cls("s3_weighted_sasakian", {"k": k, "l": l})

    def with_params(self, **updates):
        return MetricSpec(self.family, {**self.params, **updates})

    @property
    def charts(self):
        return _FAMILIES[self.family][1]


def _check_pair(spec: MetricSpec, chart: Chart):
    if chart.name not in spec.charts:
        raise ValueError(f"metric {spec.family} is not defined on chart {chart.name}")


def metric_at(spec: MetricSpec, chart: Chart, x) -> np.ndarray:
    """Metric components ``g_ij`` at the points ``x``."""
    return metric_jet(spec, chart, x)[0]


def metric_jet(spec: MetricSpec, chart: Chart, x, method: str = "closed"):
    """Return ``(g, dg)``; ``method='fd'`` differentiates ``g`` numerically."""
    _check_pair(spec, chart)
    x = chart.validate(x)
    jet = _FAMILIES[spec.family][0]
    g, dg = jet(x, chart, spec.params)
    if method == "fd":
        dg = fd_jacobian(lambda y: jet(y, chart, spec.params)[0], x, chart)
    elif method != "closed":
        raise ValueError(f"unknown derivative method {method!r}")
    return g, dg


def fd_jacobian(f: Callable, x, chart: Chart, step: float = FD_STEP) -> np.ndarray:
    """Second-order central differences of ``f`` along every coordinate.

    The differentiation index is appended last.  Raises StepTooLarge when the
    stencil would leave the chart box or reach a singular locus.
    """
    x = np.asarray(x, dtype=float)
    hs = step * chart.scales
    for axis, (lo, hi) in enumerate(chart.domain):
        if chart.periodic[axis]:
            continue
        c = x[..., axis]
        if np.any(c - hs[axis] < lo) or np.any(c + hs[axis] > hi):
            raise StepTooLarge(f"stencil along {chart.coords[axis]} leaves the chart")
    for axis, value in chart.singular_loci:
        if np.any(np.abs(x[..., axis] - value) <= hs[axis]):
            raise StepTooLarge(f"stencil along {chart.coords[axis]} touches {value}")
    cols = []
    for m in range(3):
        e = np.zeros(3)
        e[m] = hs[m]
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * hs[m]))
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# geometry bundle


@dataclass
class GeometryJet:
    """Metric data evaluated at a batch of points."""

    x: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    ginv: np.ndarray
    sqrtg: np.ndarray
    dlog_sqrtg: np.ndarray
    gamma: np.ndarray
    orientation: int

    @property
    def dginv(self) -> np.ndarray:
        """Derivative of the inverse metric, ``[..., i, j, m]``."""
        return -np.einsum(
            "...ip,...pqm,...qj->...ijm", self.ginv, self.dg, self.ginv, optimize=True
        )

    def lower(self, v):
        return np.einsum("...ij,...j->...i", self.g, v)

    def raise_(self, w):
        return np.einsum("...ij,...j->...i", self.ginv, w)

    def inner(self, a, b):
        return np.einsum("...i,...ij,...j->...", a, self.g, b, optimize=True)

    def norm(self, a):
        return np.sqrt(np.maximum(self.inner(a, a), 0.0))


def christoffel_from(ginv, dg) -> np.ndarray:
    # dg[l, k, j] = d_j g_lk; every term below is indexed [l, j, k]
    term = np.swapaxes(dg, -1, -2) + dg - np.moveaxis(dg, -1, -3)
    return 0.5 * np.einsum("...il,...ljk->...ijk", ginv, term)


def geometry_jet(spec: MetricSpec, chart: Chart, x, method: str = "closed") -> GeometryJet:
    x = np.asarray(x, dtype=float)
    g, dg = metric_jet(spec, chart, x, method=method)
    ginv = np.linalg.inv(g)
    det = np.linalg.det(g)
    if np.any(det <= 0):
        raise SingularPoint(f"degenerate metric {spec.family} at requested points")
    sqrtg = np.sqrt(det)
    dlog = 0.5 * np.einsum("...ij,...jim->...m", ginv, dg)
    return GeometryJet(
        x=x,
        g=g,
        dg=dg,
        ginv=ginv,
        sqrtg=sqrtg,
        dlog_sqrtg=dlog,
        gamma=christoffel_from(ginv, dg),
        orientation=chart.orientation,
    )


def christoffel_at(spec: MetricSpec, chart: Chart, x, method: str = "closed") -> np.ndarray:
    """Christoffel symbols ``Gamma^i_{jk}`` of the Levi-Civita connection."""
    return geometry_jet(spec, chart, x, method=method).gamma


def volume_density(spec: MetricSpec, chart: Chart, x) -> np.ndarray:
    """Riemannian volume density ``sqrt(det g)`` (always positive)."""
    g = metric_at(spec, chart, x)
    det = np.linalg.det(g)
    if np.any(det <= 0):
        raise SingularPoint(f"degenerate metric {spec.family} at requested points")
    return np.sqrt(det)


# ---------------------------------------------------------------------------
# first-order operators on arrays


def lower_jacobian(geo: GeometryJet, v, jac):
    """Partial derivatives of the 1-form ``v_flat``: ``[..., k, m] = d_m (g_kl v^l)``."""
    return np.einsum("...klm,...l->...km", geo.dg, v) + np.einsum("...kl,...lm->...km", geo.g, jac)


def curl_from(geo: GeometryJet, v, jac) -> np.ndarray:
    """``curl V = (* d V_flat)^sharp``, from the vector and its partials."""
    dflat = lower_jacobian(geo, v, jac)  # [k, j] = d_j V_k
    return geo.orientation * np.einsum("ijk,...kj->...i", EPS, dflat) / geo.sqrtg[..., None]


def div_from(geo: GeometryJet, v, jac) -> np.ndarray:
    return np.einsum("...ii->...", jac) + np.einsum("...i,...i->...", v, geo.dlog_sqrtg)


def cross_from(geo: GeometryJet, a, b) -> np.ndarray:
    """Riemannian cross product, defined by ``(a x b)_flat = i_b i_a nu_g``."""
    low = (
        geo.orientation
        * geo.sqrtg[..., None]
        * np.einsum("ijk,...i,...j->...k", EPS, a, b, optimize=True)
    )
    return geo.raise_(low)


def hodge_from(geo: GeometryJet, two_form) -> np.ndarray:
    """Vector ``V`` with ``i_V nu_g = omega`` for a 2-form ``omega[..., j, k]``."""
    return (
        geo.orientation * 0.5 * np.einsum("ijk,...jk->...i", EPS, two_form) / geo.sqrtg[..., None]
    )


def covariant_derivative_along(geo: GeometryJet, v, jac, w) -> np.ndarray:
    """``nabla_w V`` for a vector field ``V`` with partials ``jac``."""
    return np.einsum("...im,...m->...i", jac, w) + np.einsum(
        "...ijk,...j,...k->...i", geo.gamma, w, v, optimize=True
    )


# ---------------------------------------------------------------------------
# field handles


@dataclass(frozen=True)
class VectorFieldHandle:
    """A vector field in the coordinate basis of ``chart``.

    ``jacobian`` (optional) returns ``[..., i, m] = d_m V^i``; without it the
    partials are taken by central differences.
    """

    chart: Chart
    components: Callable
    jacobian: Optional[Callable] = None

    def __call__(self, x):
        return np.asarray(self.components(x), dtype=float)

    def jac(self, x, method: str = "closed"):
        if self.jacobian is not None and method == "closed":
            return np.asarray(self.jacobian(x), dtype=float)
        return fd_jacobian(self.components, x, self.chart)


@dataclass(frozen=True)
class ScalarFieldHandle:
    """A scalar function with optional closed-form gradient (``df``) and Hessian."""

    chart: Chart
    value: Callable
    differential: Optional[Callable] = None
    hessian: Optional[Callable] = None

    def __call__(self, x):
        return np.asarray(self.value(x), dtype=float)

    def d(self, x, method: str = "closed"):
        if self.differential is not None and method == "closed":
            return np.asarray(self.differential(x), dtype=float)
        return fd_jacobian(self.value, x, self.chart)

    def dd(self, x, method: str = "closed"):
        if self.hessian is not None and method == "closed":
            return np.asarray(self.hessian(x), dtype=float)
        return fd_jacobian(lambda y: self.d(y, method), x, self.chart)


def grad(f: ScalarFieldHandle, spec: MetricSpec, chart: Chart, x, method: str = "closed"):
    geo = geometry_jet(spec, chart, x)
    return geo.raise_(f.d(geo.x, method))


def div(v: VectorFieldHandle, spec: MetricSpec, chart: Chart, x, method: str = "closed"):
    geo = geometry_jet(spec, chart, x, method=method)
    return div_from(geo, v(geo.x), v.jac(geo.x, method))


def curl(v: VectorFieldHandle, spec: MetricSpec, chart: Chart, x, method: str = "closed"):
    geo = geometry_jet(spec, chart, x, method=method)
    return curl_from(geo, v(geo.x), v.jac(geo.x, method))


def cross(a, b, spec: MetricSpec, chart: Chart, x):
    geo = geometry_jet(spec, chart, x)
    return cross_from(geo, np.asarray(a, float), np.asarray(b, float))


def hodge_dual_vector(two_form, spec: MetricSpec, chart: Chart, x):
    """Vector dual to a 2-form given by antisymmetric components ``[..., j, k]``."""
    geo = geometry_jet(spec, chart, x)
    return hodge_from(geo, np.asarray(two_form, dtype=float))


def laplace_beltrami(
    f: ScalarFieldHandle, spec: MetricSpec, chart: Chart, x, method: str = "closed"
):
    """``g^ij (d_i d_j f - Gamma^k_ij d_k f)``."""
    geo = geometry_jet(spec, chart, x, method=method)
    df = f.d(geo.x, method)
    hess = f.dd(geo.x, method)
    return np.einsum("...ij,...ij->...", geo.ginv, hess) - np.einsum(
        "...ij,...kij,...k->...", geo.ginv, geo.gamma, df, optimize=True
    )


def grad_field(f: ScalarFieldHandle, spec: MetricSpec, chart: Chart) -> VectorFieldHandle:
    """``grad f`` as a field handle, with closed-form partials when ``f`` has a Hessian."""

    def comp(x):
        return grad(f, spec, chart, x)

    if f.hessian is None:
        return VectorFieldHandle(chart, comp)

    def jac(x):
        geo = geometry_jet(spec, chart, x)
        return np.einsum("...ijm,...j->...im", geo.dginv, f.d(geo.x)) + np.einsum(
            "...ij,...jm->...im", geo.ginv, f.dd(geo.x)
        )

    return VectorFieldHandle(chart, comp, jac)
