"""Energy densities, functionals and first-variation quantities.

The energy of a map with potential ``P`` and Dirichlet coupling ``kappa`` is

    E = 1/2 * int (kappa |dphi|^2 + sigma2 + 2 P(phi)) dvol,

reported term by term in :class:`EnergyBreakdown`.  The pointwise
Euler-Lagrange residual is the vector on the source

    R = sigma2 * mu - 1/2 grad^H sigma2 + grad(P o phi),

with ``mu`` the mean curvature of the fibres; ``R = 0`` is the criticality
condition at regular points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import fd_jacobian, geometry_jet
from .maps import (
    AnsatzMap,
    FieldState,
    Potential,
    _generalized_eigh,
    field_state,
    potential_grad,
    strain_spectrum,
)
from .quadrature import QuadratureSpec, integrate


@dataclass
class EnergyBreakdown:
    """Energy terms, each already carrying its factor 1/2.

    ``total = kappa * dirichlet_term + sigma2_term + potential_term``.
    """

    sigma2_term: float
    potential_term: float
    dirichlet_term: float
    kappa: float
    total: float
    quadrature_error_estimate: float

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class ELResidual:
    vector_residual: np.ndarray
    sup_norm: float
    points: np.ndarray
    skipped: int = 0


def _potential(potential):
    return potential if potential is not None else Potential.constant(0.0)


def sigma2_density(m: AnsatzMap, x, method: str = "closed") -> np.ndarray:
    """``sigma2 = |phi^* omega|^2``, zero at critical points."""
    return field_state(m, x, method).sigma2


def dirichlet_density(m: AnsatzMap, x, method: str = "closed") -> np.ndarray:
    return field_state(m, x, method).dirichlet


def potential_on_source(m: AnsatzMap, potential: Potential, x) -> np.ndarray:
    """``P o phi``."""
    phi = m.evaluate(x)
    return potential.of_height(phi[..., 2] / m.target_radius)


def potential_differential(state: FieldState, potential: Potential) -> np.ndarray:
    """``d(P o phi)`` from the 2-jet of the map."""
    R = state.map.target_radius
    t = np.clip(state.phi[..., 2] / R, -1.0, 1.0)
    return (potential.dheight(t) / R)[..., None] * state.dphi[..., 2, :]


def energy(
    m: AnsatzMap,
    potential: Optional[Potential] = None,
    kappa: float = 0.0,
    qspec: Optional[QuadratureSpec] = None,
) -> EnergyBreakdown:
    """Integrate the three energy terms over the chart of ``m``."""
    potential = _potential(potential)

    def s2(x):
        return 0.5 * field_state(m, x).sigma2

    def pot(x):
        return potential_on_source(m, potential, x)

    def dir_(x):
        return 0.5 * field_state(m, x).dirichlet

    r_s2 = integrate(s2, m.chart, qspec, m.metric)
    r_pot = integrate(pot, m.chart, qspec, m.metric)
    if kappa != 0.0:
        r_dir = integrate(dir_, m.chart, qspec, m.metric)
    else:
        r_dir = type(r_s2)(0.0, 0.0)
    total = kappa * r_dir.value + r_s2.value + r_pot.value
    err = abs(kappa) * r_dir.error_estimate + r_s2.error_estimate + r_pot.error_estimate
    return EnergyBreakdown(r_s2.value, r_pot.value, r_dir.value, float(kappa), total, err)


# ---------------------------------------------------------------------------
# pointwise first variation


def _horizontal_grad(state: FieldState, d_scalar):
    geo = state.geo
    grad = geo.raise_(d_scalar)
    U = state.U
    return grad - geo.inner(grad, U)[..., None] * U


def residual_vectors(state: FieldState, potential: Potential) -> np.ndarray:
    """``sigma2 mu - 1/2 grad^H sigma2 + grad(P o phi)`` at every point of ``state``."""
    state.require_regular()
    gradP = state.geo.raise_(potential_differential(state, potential))
    return (
        state.sigma2[..., None] * state.mean_curvature
        - 0.5 * _horizontal_grad(state, state.dsigma2)
        + gradP
    )


def el_residual(
    m: AnsatzMap,
    potential: Optional[Potential],
    x,
    method: str = "closed",
    skip_critical: bool = False,
) -> ELResidual:
    """Euler-Lagrange residual vectors and their sup-norm (measured with ``g``).

    The residual is defined at regular points only.  By default a point with
    ``sigma2`` below the rank tolerance raises RankDeficient; with
    ``skip_critical`` such points are dropped from ``points`` and counted in
    ``skipped`` (branch loci such as the pole circle of ``z -> z^k``).
    """
    state = field_state(m, x, method)
    skipped = 0
    if skip_critical:
        mask = state.regular_mask()
        skipped = int(np.count_nonzero(~mask))
        if skipped:
            state = field_state(m, state.x[mask], method)
    R = residual_vectors(state, _potential(potential))
    sup = float(np.max(state.geo.norm(R))) if R.size else 0.0
    return ELResidual(R, sup, state.x, skipped)


def tension_sigma2(m: AnsatzMap, x, method: str = "closed") -> np.ndarray:
    """``-dphi(l2^2 g(T,E1) E1 + l1^2 g(T,E2) E2)``, ambient target components.

    ``T = mu - grad^H sigma2 / (2 sigma2)``; ``E1, E2`` are horizontal
    eigenvectors of the Cauchy-Green tensor with eigenvalues ``l1^2, l2^2``.
    """
    state = field_state(m, x, method)
    state.require_regular()
    spec = strain_spectrum(m, state.x, method)
    T = state.mean_curvature - _horizontal_grad(state, state.dsigma2) / (
        2 * state.sigma2[..., None]
    )
    g = state.geo
    X = (spec.lambda2_sq * g.inner(T, spec.E1))[..., None] * spec.E1 + (
        spec.lambda1_sq * g.inner(T, spec.E2)
    )[..., None] * spec.E2
    return -np.einsum("...ai,...i->...a", state.dphi, X)


def pseudo_inverse_strain(state: FieldState, w):
    """Apply the pseudo-inverse of the Cauchy-Green tensor to horizontal vectors ``w``."""
    vals, vecs = _generalized_eigh(state.pullback, state.geo.g)
    out = np.zeros_like(w)
    for j in (1, 2):
        e = vecs[..., :, j]
        out += (state.geo.inner(w, e) / vals[..., j])[..., None] * e
    return out


def tension_identity_defect(m: AnsatzMap, potential: Optional[Potential], x) -> np.ndarray:
    """``|tau - grad P + dphi(c^+ R)|`` per point; zero by construction at regular points."""
    potential = _potential(potential)
    state = field_state(m, x)
    R = residual_vectors(state, potential)
    tau = tension_sigma2(m, state.x)
    gP = potential_grad(potential, state.phi)
    push = np.einsum("...ai,...i->...a", state.dphi, pseudo_inverse_strain(state, R))
    return np.linalg.norm(tau - gP + push, axis=-1)


# ---------------------------------------------------------------------------
# stress tensor


def stress_tensor_sigma2(m: AnsatzMap, x, method: str = "closed") -> np.ndarray:
    """Lower-index components of ``S = sigma2/2 (g^V - g^H)``.

    Evaluated in the equivalent form ``sigma2/2 g - (|dphi|^2 h - h g^-1 h)``
    with ``h`` the pullback metric, which is polynomial in ``dphi`` and so
    stays defined (and vanishes) at critical points.
    """
    state = field_state(m, x, method)
    return _stress_from_state(state)


def _stress_from_state(state: FieldState):
    h = state.pullback
    g = state.geo.g
    hgh = np.einsum("...ij,...jk,...kl->...il", h, state.geo.ginv, h, optimize=True)
    return 0.5 * state.sigma2[..., None, None] * g - (state.dirichlet[..., None, None] * h - hgh)


def stress_tensor_from_vertical(m: AnsatzMap, x) -> np.ndarray:
    """``sigma2/2 (2 U_flat U_flat - g)`` through the unit vertical field."""
    state = field_state(m, x)
    Uf = state.geo.lower(state.U)
    return (
        0.5
        * state.sigma2[..., None, None]
        * (2 * Uf[..., :, None] * Uf[..., None, :] - state.geo.g)
    )


def stress_divergence(m: AnsatzMap, x) -> np.ndarray:
    """``(div S)_j = g^ik nabla_k S_ij`` with central differences of ``S``."""
    x = m.chart.validate(x)
    geo = geometry_jet(m.metric, m.chart, x)
    S = stress_tensor_sigma2(m, x)
    dS = fd_jacobian(lambda y: stress_tensor_sigma2(m, y), x, m.chart)  # [i, j, k]
    cov = (
        dS
        - np.einsum("...mki,...mj->...ijk", geo.gamma, S)
        - np.einsum("...mkj,...im->...ijk", geo.gamma, S)
    )
    return np.einsum("...ik,...ijk->...j", geo.ginv, cov)


def stress_divergence_identity_check(m: AnsatzMap, x) -> float:
    """Max over points and basis directions of ``|h(tau, dphi(d_j)) + (div S)_j|``."""
    x = m.chart.validate(x)
    state = field_state(m, x)
    if np.all(state.sigma2 < 1e-12) and np.all(np.abs(state.dphi) < 1e-14):
        return 0.0
    tau = tension_sigma2(m, x)
    lhs = np.einsum("...a,...aj->...j", tau, state.dphi)
    return float(np.max(np.abs(lhs + stress_divergence(m, x))))


# ---------------------------------------------------------------------------
# critical points and scaling


def potential_gradient_norm(m: AnsatzMap, potential: Potential, x) -> np.ndarray:
    state = field_state(m, x)
    dP = potential_differential(state, potential)
    return np.sqrt(
        np.maximum(np.einsum("...i,...ij,...j->...", dP, state.geo.ginv, dP, optimize=True), 0.0)
    )


def critical_point_check(
    m: AnsatzMap,
    potential: Potential,
    x_critical,
    offsets: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
    tol: float = 1e-3,
) -> bool:
    """Whether ``|grad(P o phi)| -> 0`` when approaching ``x_critical`` along the first coordinate.

    ``x_critical`` sits on a singular locus of the chart (a pole or the axis);
    the gradient norm is sampled at the given one-sided offsets and the
    smallest-offset value is compared against ``tol``.
    """
    x_critical = np.asarray(x_critical, dtype=float)
    lo, hi = m.chart.domain[0]
    direction = 1.0 if np.isclose(x_critical[0], lo) else -1.0
    pts = np.array([x_critical + direction * np.array([d, 0.0, 0.0]) for d in offsets])
    norms = potential_gradient_norm(m, potential, pts)
    return bool(norms[-1] <= tol)


@dataclass
class DerrickRow:
    lam: float
    energy: float
    sigma2_term: float
    potential_term: float
    predicted: float


def scaled_map(m: AnsatzMap, lam: float) -> AnsatzMap:
    """``x -> phi(lam x)`` for an axisymmetric map on flat three-space."""
    if m.family != "axisymmetric":
        raise ValueError("Derrick scaling is implemented for axisymmetric maps on flat space")
    return AnsatzMap(**{**m.__dict__, "theta": m.theta.scaled(lam), "psi": m.psi.scaled(lam)})


def derrick_scan(
    m: AnsatzMap,
    potential: Optional[Potential],
    lambdas: Sequence[float],
    qspec: Optional[QuadratureSpec] = None,
):
    """Energies of ``phi_lam(x) = phi(lam x)`` by quadrature, with the scaling-law prediction.

    Under this dilation the sigma2 term scales as ``lam`` and the potential
    term as ``lam**-3``; ``predicted`` is built from the ``lam = 1`` values.
    """
    base = energy(m, potential, qspec=qspec)
    rows = []
    for lam in lambdas:
        e = energy(scaled_map(m, lam), potential, qspec=qspec)
        pred = lam * base.sigma2_term + lam**-3 * base.potential_term
        rows.append(DerrickRow(float(lam), e.total, e.sigma2_term, e.potential_term, pred))
    return rows


def derrick_critical_scale(sigma2_term: float, potential_term: float) -> float:
    """Stationary point of ``a lam + b lam^-3``: ``(3 b / a)^(1/4)``; ``inf``-free only for ``b > 0``."""
    if sigma2_term <= 0:
        raise ValueError("sigma2 term must be positive")
    if potential_term <= 0:
        return 0.0
    return (3.0 * potential_term / sigma2_term) ** 0.25


# ---------------------------------------------------------------------------
# first-variation oracle


def variation_pairing(m: AnsatzMap, potential: Optional[Potential], delta_map, qspec=None) -> float:
    """``int h(dphi(c^+ R), delta_phi) dvol``: the predicted first variation of the energy.

    ``delta_map(x)`` returns the variation field ``d/de phi_e`` in ambient
    target components.  Quadrature nodes where ``sigma2`` underflows (next to
    the poles) contribute zero; the integrand is bounded there because ``R``
    vanishes like ``sigma2`` while ``c^+`` grows only like its inverse square root.
    """
    potential = _potential(potential)

    def density(x):
        x = m.chart.validate(x)
        out = np.zeros(x.shape[:-1])
        mask = field_state(m, x).regular_mask()
        if not np.any(mask):
            return out
        state = field_state(m, x[mask])
        R = residual_vectors(state, potential)
        push = np.einsum("...ai,...i->...a", state.dphi, pseudo_inverse_strain(state, R))
        out[mask] = np.einsum("...a,...a->...", push, delta_map(state.x))
        return out

    return integrate(density, m.chart, qspec, m.metric).value
