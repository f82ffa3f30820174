import numpy as np
import pytest
from helpers import interior_points, rel

from hopfluid.cases import gate_grid
from hopfluid.catalog import (
    conformal_map,
    gaussian_test_map,
    harmonic_energy_reference,
    harmonic_map,
    harmonic_potential,
    hopf_map,
    oldbaby_map,
    squashed_map,
    weighted_map,
    winding_map,
    winding_potential,
)
from hopfluid.errors import RankDeficient
from hopfluid.geometry import S3, fd_jacobian
from hopfluid.maps import (
    Potential,
    constant_map,
    fiber_mean_curvature,
    field_state,
    perturbed_profile,
    squashed_profile,
)
from hopfluid.variational import (
    critical_point_check,
    derrick_critical_scale,
    derrick_scan,
    el_residual,
    energy,
    stress_divergence_identity_check,
    stress_tensor_from_vertical,
    stress_tensor_sigma2,
    tension_identity_defect,
    variation_pairing,
)

# frozen from tests/oracles.py (scipy quad on the closed forms): (sigma2 term, potential term)
ORACLE_ENERGIES = {
    "squashed11": (11.553326962753996, 11.553326962753996),
    "squashed21": (18.526539073715586, 18.526539073715583),
    "squashed22": (32.67774336251492, 32.67774336251492),
    "conformal11": (11.553326962753996, 11.553326962753996),
    "conformal21": (20.010949295945352, 20.010949295945345),
    "conformal22": (32.67774336251492, 32.67774336251492),
    "oldbaby1": (13.159472534785806, 13.15947253478581),
    "oldbaby2": (40.30088463778154, 18.09427473533049),
}
NB = Potential.new_baby()
CASES = {
    "squashed11": (lambda: squashed_map(1, 1), NB),
    "squashed21": (lambda: squashed_map(2, 1), NB),
    "squashed22": (lambda: squashed_map(2, 2), NB),
    "conformal11": (lambda: conformal_map(1, 1), NB),
    "conformal21": (lambda: conformal_map(2, 1), NB),
    "conformal22": (lambda: conformal_map(2, 2), NB),
    "oldbaby1": (lambda: oldbaby_map(1), Potential.old_baby()),
    "oldbaby2": (lambda: oldbaby_map(2), Potential.old_baby()),
}

# the five worked examples with their own potentials
EXAMPLES = {
    "winding": (winding_map, winding_potential()),
    "harmonic1": (lambda: harmonic_map(1), harmonic_potential(1)),
    "harmonic2": (lambda: harmonic_map(2), harmonic_potential(2)),
    "harmonic3": (lambda: harmonic_map(3), harmonic_potential(3)),
    "squashed21": (lambda: squashed_map(2, 1), NB),
    "conformal21": (lambda: conformal_map(2, 1), NB),
    "oldbaby1": (lambda: oldbaby_map(1), Potential.old_baby()),
}


@pytest.mark.parametrize("name", ORACLE_ENERGIES)
def test_energy_terms_match_independent_oracle(name):
    build, P = CASES[name]
    e = energy(build(), P)
    s2, pot = ORACLE_ENERGIES[name]
    assert rel(e.sigma2_term, s2) < 1e-10
    assert rel(e.potential_term, pot) < 1e-10
    assert e.total == e.sigma2_term + e.potential_term


@pytest.mark.parametrize("k", [1, 2, 3])
def test_harmonic_energy_matches_closed_form(k):
    e = energy(harmonic_map(k), harmonic_potential(k))
    assert rel(e.total, harmonic_energy_reference(k)) < 1e-10


def test_winding_sigma2_integral_is_eight_pi_squared():
    # 78.95683520871486 = 8 pi^2, from tests/oracles.winding_sigma2_integral
    e = energy(winding_map(), winding_potential())
    assert rel(2 * e.sigma2_term, 78.95683520871486) < 1e-9


def test_hopf_dirichlet_term():
    # |dphi|^2 = l1^2 + l2^2 = 2 on the unit round sphere
    e = energy(hopf_map(), kappa=1.0)
    assert rel(e.dirichlet_term, 2 * np.pi**2) < 1e-12


@pytest.mark.parametrize("name", ["squashed21", "oldbaby2"])
def test_energy_is_additive_in_kappa(name):
    build, P = CASES[name]
    m = build()
    e0 = energy(m, P, kappa=0.0)
    e1 = energy(m, P, kappa=1.0)
    e3 = energy(m, P, kappa=3.0)
    assert abs(e1.total - (e0.total + e1.dirichlet_term)) < 1e-12 * e1.total
    assert abs(e3.total - (e0.total + 3 * e1.dirichlet_term)) < 1e-12 * e3.total


def test_constant_map_energy_is_potential_times_volume():
    e = energy(constant_map((np.pi / 2, 0.0)), Potential.old_baby())
    assert e.sigma2_term == 0.0
    assert rel(e.potential_term, 2 * np.pi**2) < 1e-12


@pytest.mark.parametrize("name", EXAMPLES)
def test_worked_examples_are_critical_on_the_gate_grid(name):
    build, P = EXAMPLES[name]
    m = build()
    grid = gate_grid(m.chart, 48)
    parts = [el_residual(m, P, c, skip_critical=True) for c in np.array_split(grid, 16)]
    assert max(r.sup_norm for r in parts) <= 1e-6
    kept = np.concatenate([r.points for r in parts])
    assert len(kept) + sum(r.skipped for r in parts) == len(grid)
    if name != "harmonic3":
        assert len(kept) == len(grid)
    else:
        # only the branch circles of z -> z^3 (the cells next to the poles) drop out
        dropped = grid[~np.isin(grid[:, 0], kept[:, 0])]
        assert np.all(np.minimum(dropped[:, 0], np.pi / 2 - dropped[:, 0]) < np.pi / 96)


def test_residual_refuses_critical_points_by_default():
    x = gate_grid(S3, 48)[:2304]
    with pytest.raises(RankDeficient):
        el_residual(harmonic_map(3), harmonic_potential(3), x)


@pytest.mark.parametrize("name", ["squashed21", "harmonic2"])
def test_finite_difference_residual_path(name):
    build, P = EXAMPLES[name]
    m = build()
    assert el_residual(m, P, gate_grid(m.chart, 12), method="fd").sup_norm <= 1e-4


@pytest.mark.parametrize("name", ["squashed21", "oldbaby2", "winding"])
def test_pure_sigma2_residual_is_sigma2_times_tension_field(name):
    # independent assembly: fibre curvature and grad sigma2 both by differences
    build = {**CASES, **EXAMPLES}[name][0]
    m = build()
    x = interior_points(m.chart, n=200, margin=0.1, extent=2.0)
    st = field_state(m, x)
    mu = fiber_mean_curvature(m, x, method="fd")
    ds2 = fd_jacobian(lambda y: field_state(m, y).sigma2, x, m.chart)
    grad = st.geo.raise_(ds2)
    U = st.U
    grad_h = grad - st.geo.inner(grad, U)[..., None] * U
    expected = st.sigma2[..., None] * mu - 0.5 * grad_h
    got = el_residual(m, Potential.constant(0.7), x).vector_residual
    assert np.max(np.abs(got - expected)) < 1e-5 * max(1.0, np.max(np.abs(expected)))


def test_perturbed_profile_is_not_critical():
    base = squashed_map(2, 1)
    m = base.with_profile(perturbed_profile(base.profile, [0.1, -0.05]))
    x = interior_points(S3, n=500, margin=0.05)
    assert el_residual(m, NB, x).sup_norm > 1e-2


def _alpha_direction(m, bump):
    """``d phi / d alpha * bump(s)`` for an alpha-Hopf map."""

    def delta(x):
        T = m.profile(x[..., 0])
        P = -m.k * x[..., 1] + m.l * x[..., 2]
        R = m.target_radius
        b = bump(x[..., 0])
        return (
            R
            * b[..., None]
            * np.stack([np.cos(T) * np.cos(P), np.cos(T) * np.sin(P), -np.sin(T)], -1)
        )

    return delta


@pytest.mark.parametrize("trial", range(5))
def test_first_variation_matches_energy_difference_quotient(trial):
    rng = np.random.default_rng(100 + trial)
    base = squashed_map(2, 1)
    start = perturbed_profile(squashed_profile(2, 1), [0.08, -0.04])
    m = base.with_profile(start)
    c = rng.normal(size=3)

    def bump(s):
        return np.sin(2 * s) ** 4 * sum(cj * np.cos(2 * j * s) for j, cj in enumerate(c))

    predicted = variation_pairing(m, NB, _alpha_direction(m, bump))
    eps = 1e-4

    def E(e):
        return energy(base.with_profile(perturbed_profile(start, e * c)), NB).total

    quotient = (E(eps) - E(-eps)) / (2 * eps)
    assert abs(predicted - quotient) < 1e-4 * abs(quotient)


def test_first_variation_vanishes_at_a_critical_map():
    m = squashed_map(2, 1)
    val = variation_pairing(m, NB, _alpha_direction(m, lambda s: np.sin(2 * s) ** 4))
    assert abs(val) < 1e-8


@pytest.mark.parametrize("name", ["squashed21", "oldbaby2"])
def test_tension_identity_holds_for_critical_and_non_critical_maps(name):
    build, P = CASES[name]
    m = build()
    x = interior_points(S3, n=500, margin=0.05)
    assert np.max(tension_identity_defect(m, P, x)) < 1e-10
    bent = m.with_profile(perturbed_profile(m.profile, [0.1]))
    assert np.max(tension_identity_defect(bent, P, x)) < 1e-10


SMOOTH = {
    "hopf": hopf_map,
    "harmonic2": lambda: harmonic_map(2),
    "squashed21": lambda: squashed_map(2, 1),
    "conformal21": lambda: conformal_map(2, 1),
    "oldbaby1": lambda: oldbaby_map(1),
    "weighted23": lambda: weighted_map(2, 3),
    "winding": winding_map,
}


@pytest.mark.parametrize("name", SMOOTH)
def test_stress_divergence_identity(name):
    m = SMOOTH[name]()
    x = interior_points(m.chart, n=300, margin=0.05, extent=2.0)
    assert stress_divergence_identity_check(m, x) <= 1e-5


def test_stress_divergence_identity_on_non_critical_map():
    m = squashed_map(2, 1)
    m = m.with_profile(perturbed_profile(m.profile, [0.1, 0.02]))
    x = interior_points(S3, n=300, margin=0.05)
    assert stress_divergence_identity_check(m, x) <= 1e-5


@pytest.mark.parametrize("name", SMOOTH)
def test_stress_tensor_forms_agree_and_trace(name):
    m = SMOOTH[name]()
    x = interior_points(m.chart, n=500, margin=0.02)
    st = field_state(m, x)
    S = stress_tensor_sigma2(m, x)
    assert np.max(np.abs(S - stress_tensor_from_vertical(m, x))) < 1e-10 * max(
        1.0, np.max(np.abs(S))
    )
    trace = np.einsum("...ij,...ij->...", st.geo.ginv, S)
    assert np.max(np.abs(trace + 0.5 * st.sigma2)) < 1e-10 * max(1.0, np.max(st.sigma2))


def test_critical_points_of_map_are_critical_for_potential():
    # z^2 composed with the Hopf map branches along the pole s = 0
    assert critical_point_check(harmonic_map(2), harmonic_potential(2), [0.0, 0.3, 0.4])
    # a potential with an infinite slope at the target pole keeps a finite gradient
    assert not critical_point_check(hopf_map(), Potential.baby(1, 0.5), [0.0, 0.3, 0.4])


def test_derrick_scan_pure_sigma2_is_linear():
    rows = derrick_scan(gaussian_test_map(), None, [0.5, 0.8, 1.0, 1.5, 2.0])
    e1 = [r for r in rows if r.lam == 1.0][0].energy
    for r in rows:
        assert abs(r.energy - r.lam * e1) < 1e-6 * r.lam * e1
        assert r.potential_term == 0.0


def test_derrick_scan_with_potential_follows_scaling_law():
    rows = derrick_scan(gaussian_test_map(), Potential.old_baby(), [0.7, 1.0, 1.4])
    for r in rows:
        assert abs(r.energy - r.predicted) < 1e-4 * r.predicted


def test_derrick_critical_scale():
    lam = derrick_critical_scale(2.0, 1.5)
    assert lam == pytest.approx((3 * 1.5 / 2.0) ** 0.25)
    # stationary: d/dlam (a lam + b lam^-3) = 0
    assert abs(2.0 - 3 * 1.5 * lam**-4) < 1e-12
    assert derrick_critical_scale(2.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        derrick_critical_scale(0.0, 1.0)
