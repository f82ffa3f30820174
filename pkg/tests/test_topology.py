import numpy as np
import pytest
import sympy as sp

from hopfluid.catalog import (
    gaussian_test_map,
    harmonic_energy_reference,
    harmonic_map,
    harmonic_potential,
    hopf_map,
    khesin_functions,
    oldbaby_map,
    rational_map,
    squashed_map,
    weighted_map,
)
from hopfluid.errors import InadmissibleProfile, ZeroCharge
from hopfluid.fluid import (
    constant_coefficient_flow,
    dual_flow,
    flow_from_callables,
    khesin_flow,
)
from hopfluid.geometry import S3, MetricSpec
from hopfluid.maps import (
    S_SYM,
    Potential,
    Profile,
    alpha_hopf,
    constant_map,
    cylinder_winding,
    linear_profile,
    squashed_profile,
    winding_profile,
)
from hopfluid.quadrature import default_spec
from hopfluid.topology import (
    bound_check_sigma2,
    bound_ratio_mass_term,
    helicity,
    hopf_charge,
)
from hopfluid.variational import energy

KL = [(k, l) for k in (1, 2, 3) for l in (1, 2, 3)]


@pytest.mark.parametrize("k,l", KL)
@pytest.mark.parametrize("metric", ["round", "squashed"])
def test_charge_is_k_times_l(k, l, metric):
    spec = MetricSpec.round() if metric == "round" else MetricSpec.squashed(k, l, 0.9)
    m = alpha_hopf(k, l, squashed_profile(k, l), spec)
    q = hopf_charge(m)
    assert q.rounded == k * l
    assert q.defect <= 1e-6


@pytest.mark.parametrize("k,l", [(1, 1), (2, 3), (3, 2)])
def test_charge_of_reversed_profile(k, l):
    # [z0^k : z1^l] climbs from 0 to pi instead of descending
    q = hopf_charge(weighted_map(k, l))
    assert q.rounded == k * l and q.defect <= 1e-6


@pytest.mark.parametrize("c", [0.05, -0.2, 0.24])
@pytest.mark.parametrize("k,l", [(1, 1), (2, 1), (3, 2)])
def test_charge_is_invariant_under_reparametrization(k, l, c):
    base = squashed_profile(k, l)
    beta = S_SYM + c * sp.sin(4 * S_SYM)  # monotone for |c| < 1/4, fixes 0 and pi/2
    warped = Profile.from_expression(base.expr.subs(S_SYM, beta))
    q0 = hopf_charge(alpha_hopf(k, l, base))
    q1 = hopf_charge(alpha_hopf(k, l, warped))
    assert abs(q0.raw_integral - q1.raw_integral) < 1e-8


@pytest.mark.parametrize("k", [1, 2, 3])
def test_harmonic_and_oldbaby_charges_are_k_squared(k):
    assert hopf_charge(harmonic_map(k)).rounded == k * k
    assert hopf_charge(oldbaby_map(k)).rounded == k * k


@pytest.mark.parametrize("k,l", [(1, 1), (2, 1), (1, 2)])
def test_axisymmetric_rational_map_charges(k, l):
    q = hopf_charge(rational_map(k, l))
    assert q.rounded == k * l
    assert q.defect <= 1e-6


def test_axisymmetric_charge_of_trivial_configuration():
    q = hopf_charge(gaussian_test_map())
    assert q.rounded == 0 and q.defect <= 1e-6


def test_constant_map_has_zero_charge():
    assert hopf_charge(constant_map()).rounded == 0


def test_inadmissible_profile_is_rejected():
    with pytest.raises(InadmissibleProfile):
        hopf_charge(alpha_hopf(1, 1, linear_profile(slope=1.0)))


def test_charge_not_defined_on_the_cylinder():
    with pytest.raises(ValueError):
        hopf_charge(cylinder_winding(winding_profile()))


DUALS = {
    "hopf": (hopf_map, None),
    "harmonic2": (lambda: harmonic_map(2), harmonic_potential(2)),
    "squashed21": (lambda: squashed_map(2, 1), Potential.new_baby()),
    "oldbaby2": (lambda: oldbaby_map(2), Potential.old_baby()),
    "weighted23": (lambda: weighted_map(2, 3), None),
}


@pytest.mark.parametrize("name", DUALS)
def test_helicity_of_dual_flow_equals_charge(name):
    build, P = DUALS[name]
    m = build()
    assert abs(helicity(dual_flow(m, P)) - hopf_charge(m).raw_integral) < 1e-6


def test_hopf_field_has_unit_helicity():
    xi = constant_coefficient_flow(S3, MetricSpec.round(), (0.0, 1.0, 1.0))
    assert abs(helicity(xi) - 1.0) < 1e-6


def test_khesin_helicity():
    # f_- = -(1+t)/2, f_+ = 3(1+t)/2 on the unit round sphere
    h = helicity(khesin_flow(*khesin_functions(2, 1)))
    assert h == pytest.approx(4.5, abs=1e-8)


def test_helicity_rejects_unsupported_flows():
    flow = flow_from_callables(
        S3,
        MetricSpec.round(),
        lambda x: np.stack([np.sin(x[..., 1]), np.ones(x.shape[:-1]), 0 * x[..., 0]], -1),
        lambda x: np.zeros(x.shape[:-1]),
    )
    with pytest.raises(ValueError):
        helicity(flow)


def test_hopf_map_saturates_the_sigma2_bound():
    b = bound_check_sigma2(hopf_map(), mu1=2.0)
    assert b.ratio == pytest.approx(1.0, abs=1e-10)
    assert b.satisfied is True


@pytest.mark.parametrize("k", [2, 3])
def test_harmonic_maps_sit_above_the_sigma2_bound(k):
    b = bound_check_sigma2(harmonic_map(k), mu1=2.0)
    assert b.ratio > 1.0 and b.satisfied is True


def test_zero_charge_ratio_is_refused():
    with pytest.raises(ZeroCharge):
        bound_check_sigma2(constant_map(), mu1=2.0)
    with pytest.raises(ZeroCharge):
        bound_ratio_mass_term(constant_map(), Potential.old_baby())


def test_mass_term_ratio_is_reported_without_verdict():
    b = bound_ratio_mass_term(squashed_map(2, 2), Potential.new_baby())
    assert b.satisfied == "ratio-only" and b.bound_constant == "unspecified"
    assert b.ratio == pytest.approx(b.energy / 4**0.75)


def test_harmonic_energy_per_cubed_charge_decreases_toward_limit():
    ratios = []
    for k in (2, 4, 8, 16):
        spec = default_spec(S3, order=64 if k < 8 else 256)
        e = energy(harmonic_map(k), harmonic_potential(k), qspec=spec)
        assert abs(e.total - harmonic_energy_reference(k)) < 1e-8 * e.total
        ratios.append(e.total / k**3)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert all(r > 4 * np.pi**2 / 3 for r in ratios)
    assert ratios[-1] - 4 * np.pi**2 / 3 < 0.02
