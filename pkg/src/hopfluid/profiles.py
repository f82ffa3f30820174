"""Profile functions from the pointwise criticality condition.

For an alpha-Hopf map whose fibres are geodesics, criticality reduces to
``sigma2 / 2 = P(cos alpha)``.  With ``sigma2 = R^4 sin^2(alpha) alpha'^2 w(s)``,
where ``w = g^ss (k^2 g^11 - 2 k l g^12 + l^2 g^22)``, the condition separates:

    K(alpha) = int sin(b) / sqrt(2 P(cos b)) db,   H(s) = int_0^s ds' / (R^2 sqrt(w)),

and ``K(alpha(s)) = H(s)``.  A free metric scale ``a`` is fixed by requiring
the far boundary value, which is a 1-D shooting problem solved by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect

from .errors import InadmissibleProfile, NoAdmissibleScale, NonMonotoneProfile
from .geometry import S3, MetricSpec, metric_at
from .maps import Potential, Profile, alpha_hopf, is_smooth_alpha_hopf, pole_exponents
from .quadrature import axis_rule

A_MAX = 10.0
A_MIN = 1e-6
BISECT_TOL = 1e-12
PANEL_NODES = 8


@dataclass(frozen=True)
class ProfileProblem:
    """Boundary-value problem for ``alpha`` on ``[0, pi/2]``.

    ``metric`` carries the family and ``(k, l)``; when the family takes a
    scale ``a`` it is treated as unknown (any supplied value is ignored).
    ``boundary`` is ``(alpha(0), alpha(pi/2))``.
    """

    metric: MetricSpec
    k: int
    l: int
    potential: Potential
    boundary: tuple = (np.pi, 0.0)
    target_radius: float = 0.5

    def __post_init__(self):
        for b in self.boundary:
            if min(abs(b), abs(b - np.pi)) > 1e-12:
                raise InadmissibleProfile(f"boundary values {self.boundary} must lie in {{0, pi}}")
        if abs(self.boundary[0] - self.boundary[1]) < 1:
            raise InadmissibleProfile("boundary values must differ")

    @property
    def has_scale(self):
        return "a" in self.metric.params or self.metric.family in ("s3_squashed", "s3_conformal")

    def metric_for(self, a: Optional[float]) -> MetricSpec:
        if self.has_scale:
            return MetricSpec(
                self.metric.family, {**self.metric.params, "k": self.k, "l": self.l, "a": a}
            )
        return self.metric


def fibre_weight(metric: MetricSpec, k, l, s) -> np.ndarray:
    """``w(s) = g^ss (k^2 g^11 - 2 k l g^12 + l^2 g^22)`` on the three-sphere chart."""
    s = np.asarray(s, dtype=float)
    x = np.stack([s, np.zeros_like(s), np.zeros_like(s)], axis=-1)
    ginv = np.linalg.inv(metric_at(metric, S3, x))
    return ginv[..., 0, 0] * (
        k * k * ginv[..., 1, 1] - 2 * k * l * ginv[..., 1, 2] + l * l * ginv[..., 2, 2]
    )


def _panel_rule(grid):
    """Nodes/weights for per-panel Gauss-Legendre between consecutive grid points."""
    u, w = np.polynomial.legendre.leggauss(PANEL_NODES)
    left, right = grid[:-1, None], grid[1:, None]
    half = 0.5 * (right - left)
    return left + half * (u + 1.0), half * w


def _cumulative(f, grid):
    nodes, weights = _panel_rule(grid)
    panel = np.sum(f(nodes) * weights, axis=1)
    return np.concatenate([[0.0], np.cumsum(panel)])


def _height_integrand(potential: Potential):
    def f(b):
        P = potential.of_height(np.cos(b))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sin(b) / np.sqrt(2.0 * P)

    return f


def _check_positive_potential(potential: Potential):
    b = np.linspace(0.0, np.pi, 2001)[1:-1]
    P = potential.of_height(np.cos(b))
    if np.any(~np.isfinite(P)) or np.any(P <= 0.0):
        raise NonMonotoneProfile(
            "potential vanishes or changes sign inside (0, pi): separated integrand is not one-signed"
        )


def _H_total(problem: ProfileProblem, a, n=256):
    metric = problem.metric_for(a)
    s, w = axis_rule(0.0, np.pi / 2, False, n)
    R2 = problem.target_radius**2
    return float(np.sum(w / (R2 * np.sqrt(fibre_weight(metric, problem.k, problem.l, s)))))


@dataclass
class ProfileSolution:
    profile: Profile
    a: Optional[float]
    smooth: bool
    pole_exponents: tuple


def solve_profile(problem: ProfileProblem, grid_n: int = 4096) -> ProfileSolution:
    """Solve ``sigma2 / 2 = P(cos alpha)`` with minimal-fibre alpha-Hopf geometry.

    Returns the tabulated profile and the scale ``a`` (``None`` when the
    metric has no free scale).  Raises NoAdmissibleScale when no scale in
    ``(0, 10]`` meets both boundary values and NonMonotoneProfile when the
    separated integrand is not one-signed.
    """
    potential = problem.potential
    _check_positive_potential(potential)
    decreasing = problem.boundary[0] > problem.boundary[1]

    # K on an alpha grid, measured from the starting boundary value
    beta = np.linspace(0.0, np.pi, 4097)
    Kf = _height_integrand(potential)
    if decreasing:
        Kgrid = _cumulative(Kf, beta)  # int_0^b
        Kgrid = Kgrid[-1] - Kgrid  # int_b^pi
    else:
        Kgrid = _cumulative(Kf, beta)
    K_target = float(Kgrid[0] if decreasing else Kgrid[-1])
    if not np.all(np.isfinite(Kgrid)):
        raise NoAdmissibleScale("separated integral in alpha diverges at a boundary value")

    a = None
    if problem.has_scale:

        def defect(a_):
            return _H_total(problem, a_) - K_target

        lo, hi = A_MIN, A_MAX
        if np.sign(defect(lo)) == np.sign(defect(hi)):
            raise NoAdmissibleScale(f"shooting defect does not change sign on ({lo}, {hi}]")
        a = bisect(defect, lo, hi, xtol=BISECT_TOL, maxiter=200)
    elif abs(_H_total(problem, None) - K_target) > 1e-9 * max(1.0, K_target):
        raise NoAdmissibleScale(
            "metric has no free scale and the boundary values cannot both be met"
        )

    metric = problem.metric_for(a)
    R2 = problem.target_radius**2

    s = np.linspace(0.0, np.pi / 2, grid_n)
    H = _cumulative(
        lambda t: 1.0 / (R2 * np.sqrt(fibre_weight(metric, problem.k, problem.l, t))), s
    )
    # rescale the last node exactly onto the target to absorb the bisection tolerance
    H = np.clip(H * (K_target / H[-1]), 0.0, K_target)

    Kspline = CubicSpline(beta, Kgrid)
    dK = Kspline.derivative()
    # invert K(alpha) = H with Newton's method started from linear interpolation
    order = np.argsort(Kgrid)
    alpha = np.interp(H, Kgrid[order], beta[order])
    for _ in range(50):
        step = (Kspline(alpha) - H) / np.where(np.abs(dK(alpha)) > 1e-14, dK(alpha), np.inf)
        alpha = np.clip(alpha - step, 0.0, np.pi)
        if np.max(np.abs(step)) < 1e-15:
            break
    alpha[0], alpha[-1] = problem.boundary

    # exact slopes from the separated equation at interior nodes
    inner = slice(1, grid_n - 1)
    w = fibre_weight(metric, problem.k, problem.l, s[inner])
    P = potential.of_height(np.cos(alpha[inner]))
    sign = -1.0 if decreasing else 1.0
    slopes = np.empty(grid_n)
    slopes[inner] = sign * np.sqrt(2 * P) / (R2 * np.sin(alpha[inner]) * np.sqrt(w))
    slopes[0] = _extrapolate(s[1:5], slopes[1:5], s[0])
    slopes[-1] = _extrapolate(s[-5:-1], slopes[-5:-1], s[-1])

    profile = Profile.tabulated(
        s, alpha, slopes, tag=f"solved({problem.metric.family},{problem.k},{problem.l})"
    )
    exps = pole_exponents(profile)
    return ProfileSolution(profile, a, is_smooth_alpha_hopf(problem.k, problem.l, profile), exps)


def _extrapolate(xs, ys, x0):
    return float(np.polyval(np.polyfit(xs, ys, len(xs) - 1), x0))


@dataclass
class CoupledSolution:
    profile: Profile
    h: "_LinearH"
    h0: float
    k: int
    smooth: bool
    pole_exponents: tuple

    def residuals(self, s):
        """Back-substitution residuals of the two first-order equations."""
        s = np.asarray(s, dtype=float)
        C = np.cos(s) ** 2
        lhs = self.profile.d1(s) * np.sin(self.profile(s))
        h = self.h(C)
        dh = self.h.derivative(C)
        r1 = lhs - 2 * np.sin(2 * s) * h
        r2 = lhs + self.k**2 * np.sin(2 * s) * h * dh
        return r1, r2


class _LinearH:
    """``h(C) = h0 + slope C`` with its derivative."""

    def __init__(self, h0, slope):
        self.h0, self.slope = h0, slope

    def __call__(self, C):
        return self.h0 + self.slope * np.asarray(C, dtype=float)

    def derivative(self, C):
        return np.full(np.shape(C), self.slope)


def solve_coupled_h(k: int, grid_n: int = 4096) -> CoupledSolution:
    """Solve the pair ``alpha' sin alpha = 2 sin(2s) h(C)``, ``alpha' sin alpha = -k^2 sin(2s) h h'(C)``.

    ``C = cos^2 s``.  Equating the right-hand sides gives ``h' = -2/k^2``; the
    first equation then integrates in ``C`` to ``d cos(alpha)/dC = 2 h(C)``.
    The boundary values ``alpha(0) = 0`` (``C = 1``) and ``alpha(pi/2) = pi``
    (``C = 0``) fix the constant ``h(0)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    slope = -2.0 / k**2
    # cos(alpha) rises from -1 at C=0 to 1 at C=1, so int_0^1 2h dC = 2h0 + slope = 2
    h0 = 1.0 - slope / 2.0
    h = _LinearH(h0, slope)
    u, wu = axis_rule(0.0, 1.0, False, 16)

    s = np.linspace(0.0, np.pi / 2, grid_n)
    C = np.cos(s) ** 2
    # 1 + cos(alpha) = int_0^C 2h  and  1 - cos(alpha) = int_C^1 2h, each by Gauss-Legendre
    one_plus = C * np.sum(wu * 2 * h(C[:, None] * u), axis=1)
    one_minus = (1 - C) * np.sum(wu * 2 * h(C[:, None] + (1 - C[:, None]) * u), axis=1)
    alpha = 2 * np.arctan2(np.sqrt(np.maximum(one_minus, 0)), np.sqrt(np.maximum(one_plus, 0)))

    inner = slice(1, grid_n - 1)
    slopes = np.empty(grid_n)
    slopes[inner] = 2 * np.sin(2 * s[inner]) * h(C[inner]) / np.sin(alpha[inner])
    slopes[0] = _extrapolate(s[1:5], slopes[1:5], s[0])
    slopes[-1] = _extrapolate(s[-5:-1], slopes[-5:-1], s[-1])
    profile = Profile.tabulated(s, alpha, slopes, tag=f"coupled({k})")
    exps = pole_exponents(profile)
    return CoupledSolution(profile, h, h0, k, is_smooth_alpha_hopf(k, k, profile), exps)


def verify_profile(
    problem: ProfileProblem,
    profile: Profile,
    a: Optional[float],
    n: int = 1000,
    margin: float = 1e-3,
) -> float:
    """Sup over interior points of ``|sigma2/2 - P o phi|`` through the full map pipeline."""
    from .variational import potential_on_source, sigma2_density

    m = alpha_hopf(problem.k, problem.l, profile, problem.metric_for(a), problem.target_radius)
    s = np.linspace(margin, np.pi / 2 - margin, n)
    x = np.stack([s, np.full(n, 0.7), np.full(n, 1.9)], axis=-1)
    return float(
        np.max(np.abs(0.5 * sigma2_density(m, x) - potential_on_source(m, problem.potential, x)))
    )


def squashed_problem(k, l, potential=None):
    return ProfileProblem(
        MetricSpec("s3_squashed", {"k": k, "l": l, "a": 1.0}),
        k,
        l,
        potential or Potential.new_baby(),
    )


def conformal_problem(k, l, potential=None):
    return ProfileProblem(
        MetricSpec("s3_conformal", {"k": k, "l": l, "a": 1.0}),
        k,
        l,
        potential or Potential.new_baby(),
    )


def profile_csv_rows(profile: Profile, n: int = 257):
    s = np.linspace(profile.domain[0], profile.domain[1], n)
    return s, profile(s), profile.d1(s)
