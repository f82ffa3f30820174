"""Geometry, energies, steady flows and topological charges of Hopf-type maps.

The package evaluates the strongly coupled Faddeev-Skyrme (sigma2) energy of
symmetric maps from three-manifolds to the two-sphere, checks the
Euler-Lagrange equations pointwise, builds the dual steady Euler flow of a
critical map, and computes Hopf charges, helicities and energy-bound ratios.
"""

from .errors import (
    ConfigError,
    HopfluidError,
    InadmissibleProfile,
    NoAdmissibleScale,
    NonMonotoneProfile,
    OutOfDomain,
    QuadratureDivergence,
    RankDeficient,
    SingularPoint,
    StepTooLarge,
    ZeroCharge,
)
from .fluid import (
    FlowField,
    beltrami_classify,
    dual_flow,
    euler_defects,
    forced_euler_check,
    khesin_flow,
    reeb_field,
)
from .geometry import (
    CARTESIAN,
    CYLINDRICAL,
    R2XS1,
    S3,
    MetricSpec,
    curl,
    div,
    geometry_jet,
    grad,
)
from .maps import (
    AnsatzMap,
    Potential,
    Profile,
    alpha_hopf,
    axisymmetric,
    field_state,
    strain_spectrum,
)
from .profiles import ProfileProblem, solve_coupled_h, solve_profile
from .quadrature import QuadratureSpec, integrate
from .topology import bound_check_sigma2, helicity, hopf_charge
from .variational import EnergyBreakdown, derrick_scan, el_residual, energy

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "HopfluidError",
    "InadmissibleProfile",
    "NoAdmissibleScale",
    "NonMonotoneProfile",
    "OutOfDomain",
    "QuadratureDivergence",
    "RankDeficient",
    "SingularPoint",
    "StepTooLarge",
    "ZeroCharge",
    "FlowField",
    "beltrami_classify",
    "dual_flow",
    "euler_defects",
    "forced_euler_check",
    "khesin_flow",
    "reeb_field",
    "CARTESIAN",
    "CYLINDRICAL",
    "R2XS1",
    "S3",
    "MetricSpec",
    "curl",
    "div",
    "geometry_jet",
    "grad",
    "AnsatzMap",
    "Potential",
    "Profile",
    "alpha_hopf",
    "axisymmetric",
    "field_state",
    "strain_spectrum",
    "ProfileProblem",
    "solve_coupled_h",
    "solve_profile",
    "QuadratureSpec",
    "integrate",
    "bound_check_sigma2",
    "helicity",
    "hopf_charge",
    "EnergyBreakdown",
    "derrick_scan",
    "el_residual",
    "energy",
]
