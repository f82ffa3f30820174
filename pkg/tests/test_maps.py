import numpy as np
import pytest
from helpers import N_PROPERTY, interior_points

from hopfluid.catalog import (
    conformal_map,
    gaussian_test_map,
    harmonic_map,
    hopf_map,
    oldbaby_map,
    rational_map,
    squashed_map,
    weighted_map,
    winding_map,
)
from hopfluid.errors import RankDeficient
from hopfluid.geometry import S3, geometry_jet
from hopfluid.maps import (
    Potential,
    Profile,
    conformal_profile,
    constant_map,
    fiber_mean_curvature,
    field_state,
    harmonic_profile,
    is_smooth_alpha_hopf,
    pole_exponents,
    potential_eval,
    potential_grad,
    squashed_profile,
    strain_spectrum,
    vertical_unit,
)

MAPS = {
    "hopf": hopf_map,
    "harmonic2": lambda: harmonic_map(2),
    "harmonic3": lambda: harmonic_map(3),
    "squashed21": lambda: squashed_map(2, 1),
    "conformal23": lambda: conformal_map(2, 3),
    "oldbaby1": lambda: oldbaby_map(1),
    "oldbaby2": lambda: oldbaby_map(2),
    "weighted23": lambda: weighted_map(2, 3),
    "winding": winding_map,
    "rational11": lambda: rational_map(1, 1),
    "rational21": lambda: rational_map(2, 1),
}


def regular_points(m, n=N_PROPERTY):
    x = interior_points(m.chart, n=n)
    return x[field_state(m, x).sigma2 > 1e-8]


@pytest.mark.parametrize("name", MAPS)
def test_map_lands_on_target_sphere(name):
    m = MAPS[name]()
    x = interior_points(m.chart)
    r = np.linalg.norm(m.evaluate(x), axis=-1)
    assert np.max(np.abs(r - m.target_radius)) < 1e-14


@pytest.mark.parametrize("name", MAPS)
def test_closed_jet_matches_finite_differences(name):
    m = MAPS[name]()
    x = interior_points(m.chart, n=200, margin=0.05, extent=2.0)
    _, d, dd = m.jet(x)
    _, d_fd, dd_fd = m.jet(x, "fd")
    assert np.max(np.abs(d - d_fd)) < 1e-7 * max(1.0, np.max(np.abs(d)))
    assert np.max(np.abs(dd - dd_fd)) < 1e-3 * max(1.0, np.max(np.abs(dd)))


@pytest.mark.parametrize("name", MAPS)
def test_pullback_norm_is_product_of_strain_eigenvalues(name):
    m = MAPS[name]()
    x = regular_points(m)
    assert len(x) > 0.9 * N_PROPERTY
    sigma2 = field_state(m, x).sigma2
    spec = strain_spectrum(m, x)
    assert np.max(np.abs(sigma2 - spec.sigma2) / sigma2) < 1e-8


@pytest.mark.parametrize("name", MAPS)
def test_vertical_direction_is_in_the_kernel(name):
    m = MAPS[name]()
    x = regular_points(m)
    U = vertical_unit(m, x)
    assert np.max(np.abs(np.einsum("...ai,...i->...a", m.differential(x), U))) < 1e-10
    # the unit vertical from the dual field agrees with the eigenvector up to sign
    g = geometry_jet(m.metric, m.chart, x).g
    cos = np.einsum("...i,...ij,...j->...", field_state(m, x).U, g, U)
    assert np.max(np.abs(np.abs(cos) - 1)) < 1e-8


@pytest.mark.parametrize("name", ["hopf", "squashed21", "winding"])
def test_strain_reconstruction_is_independent_of_eigenplane_basis(name):
    # h = g (l1^2 E1 E1 + l2^2 E2 E2) g; in the tied case any rotation of
    # (E1, E2) in the eigenplane must give the same tensor
    m = MAPS[name]()
    x = regular_points(m, n=200)
    st = field_state(m, x)
    sp_ = strain_spectrum(m, x)
    g = st.geo.g

    def rebuilt(E1, E2):
        t = sp_.lambda1_sq[..., None, None] * E1[..., :, None] * E1[..., None, :]
        t = t + sp_.lambda2_sq[..., None, None] * E2[..., :, None] * E2[..., None, :]
        return g @ t @ g

    h = st.pullback
    assert np.max(np.abs(rebuilt(sp_.E1, sp_.E2) - h)) < 1e-10 * max(1.0, np.max(np.abs(h)))
    if name == "hopf":
        c, s = np.cos(0.7), np.sin(0.7)
        R1, R2 = c * sp_.E1 + s * sp_.E2, -s * sp_.E1 + c * sp_.E2
        assert np.max(np.abs(rebuilt(R1, R2) - h)) < 1e-10


def test_hopf_map_has_constant_unit_sigma2():
    m = hopf_map()
    x = interior_points(S3)
    spec = strain_spectrum(m, x)
    assert np.max(np.abs(spec.sigma2 - 1.0)) < 1e-12
    assert np.max(np.abs(spec.lambda1_sq - spec.lambda2_sq)) < 1e-12


@pytest.mark.parametrize("name", ["hopf", "squashed21", "oldbaby2", "weighted23"])
def test_fiber_mean_curvature_closed_vs_finite_differences(name):
    m = MAPS[name]()
    x = interior_points(m.chart, n=100, margin=0.1)
    closed = fiber_mean_curvature(m, x)
    fd = fiber_mean_curvature(m, x, method="fd")
    assert np.max(np.abs(closed - fd)) < 1e-5 * max(1.0, np.max(np.abs(closed)))


def test_constant_map_is_rank_deficient():
    m = constant_map((0.4, 1.0))
    x = interior_points(S3, n=10)
    with pytest.raises(RankDeficient):
        strain_spectrum(m, x)
    with pytest.raises(RankDeficient):
        field_state(m, x).U


def test_gaussian_map_critical_points_are_flagged():
    m = gaussian_test_map()
    x = np.array([[1.0, 0.3, 0.0]])  # d Theta vanishes at rho = 1, z = 0
    assert field_state(m, x).sigma2[0] < 1e-20
    with pytest.raises(RankDeficient):
        vertical_unit(m, x)


@pytest.mark.parametrize("k", range(1, 9))
def test_harmonic_profiles_are_smooth_for_all_k(k):
    a, b = pole_exponents(harmonic_profile(k))
    assert abs(a - k) < 1e-6 and abs(b - k) < 1e-6
    assert is_smooth_alpha_hopf(k, k, harmonic_profile(k))


@pytest.mark.parametrize("builder", [squashed_profile, conformal_profile])
@pytest.mark.parametrize("k,l", [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3), (3, 2), (3, 3)])
def test_squashed_and_conformal_smooth_exactly_for_small_charges(builder, k, l):
    expected = max(k, l) <= 2
    assert is_smooth_alpha_hopf(k, l, builder(k, l)) is expected


def test_tabulated_profile_interpolates_closed_form():
    closed = squashed_profile(2, 1)
    s = np.linspace(0, np.pi / 2, 2049)
    tab = Profile.tabulated(s, closed(s), closed.d1(s))
    q = interior_points(S3, n=N_PROPERTY)[:, 0]
    assert np.max(np.abs(tab(q) - closed(q))) < 1e-10
    assert np.max(np.abs(tab.d1(q) - closed.d1(q))) < 1e-8
    assert tab.endpoints == pytest.approx(closed.endpoints, abs=1e-12)


@pytest.mark.parametrize(
    "P",
    [
        Potential.old_baby(),
        Potential.new_baby(),
        Potential.quartic_sixteenth(),
        Potential.charge_dependent(2),
        Potential.baby(2, 1.5),
    ],
    ids=lambda P: P.family,
)
def test_potential_gradient_is_tangent_and_matches_differences(P, rng):
    y = rng.normal(size=(N_PROPERTY, 3))
    y = 0.5 * y / np.linalg.norm(y, axis=-1, keepdims=True)
    y = y[np.abs(y[:, 2]) < 0.49]
    gr = potential_grad(P, y)
    assert np.max(np.abs(np.einsum("...a,...a->...", gr, y))) < 1e-12
    # directional derivative along a tangent great circle
    w = np.cross(y, rng.normal(size=y.shape))
    w = 0.5 * w / np.linalg.norm(w, axis=-1, keepdims=True)
    h = 1e-5

    def along(e):
        return potential_eval(P, np.cos(e) * y + np.sin(e) * w)

    fd = (along(h) - along(-h)) / (2 * h)
    assert np.max(np.abs(fd - np.einsum("...a,...a->...", gr, w))) < 1e-6


def test_potential_uses_normalized_height():
    P = Potential.old_baby()
    y = np.array([[0.0, 0.0, 0.5], [0.0, 0.0, 2.0], [0.3, 0.0, 0.0]])
    assert np.allclose(potential_eval(P, y), [0.0, 0.0, 1.0])
