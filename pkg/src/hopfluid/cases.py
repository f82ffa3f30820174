"""Built-in case families and the verification pipeline.

A case builds a map (when there is one), its potential and a flow, then runs
map -> strain -> energy -> Euler-Lagrange residual -> flow -> Euler residuals
-> charge/helicity -> bounds and collects everything into a
``VerificationReport``.  ``pass`` is the conjunction of the gated defects;
printed reference energies are reported next to the computed ones but are
not gates.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import catalog
from .config import CaseConfig, parse_potential
from .errors import HopfluidError
from .fluid import (
    FlowField,
    beltrami_classify,
    constant_coefficient_flow,
    dual_flow,
    euler_defects,
    khesin_flow,
    reeb_field,
    vertical_field_kl,
)
from .geometry import R2XS1, S3, Chart, MetricSpec
from .maps import AnsatzMap, Potential
from .profiles import (
    conformal_problem,
    solve_coupled_h,
    solve_profile,
    squashed_problem,
)
from .quadrature import default_spec, integrate
from .topology import bound_check_sigma2, bound_ratio_mass_term, helicity, hopf_charge
from .variational import el_residual, energy, stress_divergence_identity_check

SCHEMA_VERSION = 1
CHUNK = 8192
R_EXTENT = 8.0
ROUND_MU1 = 2.0


def thread_count() -> int:
    """Worker threads for grid sweeps, capped by ``HOPFLUID_THREADS``."""
    raw = os.environ.get("HOPFLUID_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


def gate_grid(chart: Chart, n: int, extent: float = R_EXTENT) -> np.ndarray:
    """``n^3`` cell-centred points; never on a pole, the axis or a seam."""
    axes = []
    for (lo, hi), periodic in zip(chart.domain, chart.periodic):
        centres = (np.arange(n) + 0.5) / n
        if periodic:
            axes.append(lo + (hi - lo) * centres)
        else:
            lo_f = lo if np.isfinite(lo) else -extent
            hi_f = hi if np.isfinite(hi) else extent
            axes.append(lo_f + (hi_f - lo_f) * centres)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, 3)


def sample_points(chart: Chart, n: int = 64, seed: int = 7, extent: float = 4.0) -> np.ndarray:
    """Random interior points kept away from singular loci."""
    rng = np.random.default_rng(seed)
    cols = []
    for (lo, hi), periodic in zip(chart.domain, chart.periodic):
        lo_f = lo if np.isfinite(lo) else -extent
        hi_f = hi if np.isfinite(hi) else extent
        pad = 0.0 if periodic else 0.05 * (hi_f - lo_f)
        cols.append(rng.uniform(lo_f + pad, hi_f - pad, n))
    return np.stack(cols, axis=-1)


def chunked_map(func: Callable[[np.ndarray], object], points: np.ndarray) -> list:
    """``[func(chunk)]`` over ordered chunks, evaluated on a thread pool."""
    chunks = [points[i : i + CHUNK] for i in range(0, len(points), CHUNK)]
    threads = min(thread_count(), len(chunks))
    if threads <= 1:
        return [func(c) for c in chunks]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(func, chunks))


def chunked_max(func: Callable[[np.ndarray], float], points: np.ndarray) -> float:
    """``max(func(chunk))`` over ordered chunks, evaluated on a thread pool."""
    values = chunked_map(func, points)
    return float(max(values)) if values else 0.0


# ---------------------------------------------------------------------------
# case setups


@dataclass
class CaseSetup:
    chart: Chart
    metric: MetricSpec
    map: Optional[AnsatzMap] = None
    potential: Optional[Potential] = None
    flow: Optional[FlowField] = None
    el_gate: bool = True
    expected_charge: Optional[int] = None
    references: dict = field(default_factory=dict)
    beltrami: Optional[tuple] = None  # (handle, expected classification or None)
    pressure_reference: Optional[Callable] = None
    extra_gates: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    bound_mu1: Optional[float] = None


@dataclass(frozen=True)
class CaseFamily:
    name: str
    manifold: str
    description: str
    parameters: dict
    build: Callable[[CaseConfig], CaseSetup]

    @property
    def parametric(self):
        return bool(self.parameters)


def _potential(config: CaseConfig, default: Potential, k=1) -> Potential:
    return default if config.potential == "default" else parse_potential(config.potential, k)


def _kl(config, k0, l0):
    return config.k if config.k is not None else k0, config.l if config.l is not None else l0


def _build_winding(config):
    m = catalog.winding_map()
    P = _potential(config, catalog.winding_potential())
    return CaseSetup(
        R2XS1,
        m.metric,
        map=m,
        potential=P,
        flow=dual_flow(m, P),
        references={"sigma2_term": catalog.winding_energy_reference()},
        pressure_reference=lambda x: catalog.winding_pressure(x[..., 0]),
    )


def _build_harmonic(config):
    k, _ = _kl(config, 1, None)
    m = catalog.harmonic_map(k)
    P = _potential(config, catalog.harmonic_potential(k), k)
    flow = dual_flow(m, P)
    return CaseSetup(
        S3,
        m.metric,
        map=m,
        potential=P,
        flow=flow,
        expected_charge=k * k,
        references={"total": catalog.harmonic_energy_reference(k)},
        beltrami=(flow.velocity, "linear" if k == 1 else None),
        bound_mu1=ROUND_MU1,
    )


def _build_khesin(config):
    k, l = _kl(config, 2, 1)
    flow = khesin_flow(*catalog.khesin_functions(k, l))
    return CaseSetup(S3, flow.metric, flow=flow, beltrami=(flow.velocity, None))


def _build_oldbaby(config):
    k, _ = _kl(config, 1, None)
    m = catalog.oldbaby_map(k)
    P = _potential(config, Potential.old_baby(), k)
    sol = solve_coupled_h(k)
    s = np.linspace(0.0, np.pi / 2, 1001)[1:-1]
    coupled = float(np.max(np.abs(sol.residuals(s))))
    closed = float(np.max(np.abs(sol.profile(s) - m.profile(s))))
    return CaseSetup(
        S3,
        m.metric,
        map=m,
        potential=P,
        flow=dual_flow(m, P),
        expected_charge=k * k,
        extra_gates={
            "coupled_residual": (coupled, 1e-8),
            "coupled_vs_closed_form": (closed, 1e-8),
        },
        bound_mu1=ROUND_MU1,
    )


def _build_scaled(kind):
    a2_closed = catalog.squashed_a2 if kind == "squashed" else catalog.conformal_a2
    problem = squashed_problem if kind == "squashed" else conformal_problem
    builder = catalog.squashed_map if kind == "squashed" else catalog.conformal_map
    reference = (
        catalog.squashed_energy_reference
        if kind == "squashed"
        else catalog.conformal_energy_reference
    )

    def build(config):
        k, l = _kl(config, 2, 1)
        P = _potential(config, Potential.new_baby(), k)
        extra = {"a2_closed_form": float(a2_closed(k, l))}
        if config.profile == "solved":
            sol = solve_profile(problem(k, l, P))
            a = sol.a if config.a is None else config.a
            a = a * config.a_scale
            m = builder(k, l, a)
            m = m.with_profile(sol.profile)
            extra.update(a2_solved=float(sol.a**2), smooth=bool(sol.smooth))
        else:
            a = (np.sqrt(a2_closed(k, l)) if config.a is None else config.a) * config.a_scale
            m = builder(k, l, a)
        extra["a"] = float(a)
        return CaseSetup(
            S3,
            m.metric,
            map=m,
            potential=P,
            flow=dual_flow(m, P),
            expected_charge=k * l,
            references={"total": reference(k, l)},
            beltrami=(
                vertical_field_kl(k, l, a),
                "linear" if k == l else "nonlinear",
            ),
            extra=extra,
        )

    return build


def _build_reeb(config):
    k, l = _kl(config, 2, 3)
    metric = MetricSpec.weighted_sasakian(k, l)
    flow = constant_coefficient_flow(S3, metric, (0.0, float(l), float(k)), bernoulli=0.5)
    vol = integrate(lambda x: np.ones(x.shape[:-1]), S3, None, metric)
    m = catalog.weighted_map(k, l)
    return CaseSetup(
        S3,
        metric,
        map=m,
        flow=flow,
        el_gate=False,
        expected_charge=k * l,
        references={"volume": catalog.weighted_volume_reference(k, l)},
        beltrami=(reeb_field(k, l), "linear"),
        extra={"volume": vol.value},
    )


FAMILIES = {
    f.name: f
    for f in (
        CaseFamily(
            "r2xs1_winding",
            "R2xS1",
            "winding map of the plane times a circle, quartic potential",
            {},
            _build_winding,
        ),
        CaseFamily(
            "s3_harmonic_k",
            "S3",
            "z^k composed with the Hopf map, charge-dependent potential",
            {"k": 1},
            _build_harmonic,
        ),
        CaseFamily(
            "s3_khesin",
            "S3",
            "rotation-invariant steady flow f_-(cos^2 s) xi_- + f_+(cos^2 s) xi_+",
            {"k": 2, "l": 1},
            _build_khesin,
        ),
        CaseFamily(
            "s3_oldbaby_profile",
            "S3",
            "alpha-Hopf map solving the coupled old-baby profile equations",
            {"k": 1},
            _build_oldbaby,
        ),
        CaseFamily(
            "s3_squashed_kl",
            "S3",
            "alpha-Hopf (k,l) map on the squashed metric, new-baby potential",
            {"k": 2, "l": 1},
            _build_scaled("squashed"),
        ),
        CaseFamily(
            "s3_conformal_kl",
            "S3",
            "alpha-Hopf (k,l) map on the conformally squashed metric, new-baby potential",
            {"k": 2, "l": 1},
            _build_scaled("conformal"),
        ),
        CaseFamily(
            "s3_weighted_reeb",
            "S3",
            "Reeb field of the weighted Sasakian structure",
            {"k": 2, "l": 3},
            _build_reeb,
        ),
    )
}


def list_cases(filters: Optional[dict] = None):
    """Built-in families, optionally filtered by ``manifold``, ``parametric`` or ``name``."""
    filters = filters or {}
    allowed = {"manifold", "parametric", "name"}
    unknown = set(filters) - allowed
    if unknown:
        raise ValueError(f"unknown filter key(s) {sorted(unknown)}; use one of {sorted(allowed)}")
    out = []
    for fam in FAMILIES.values():
        if "manifold" in filters and _norm(fam.manifold) != _norm(filters["manifold"]):
            continue
        if "parametric" in filters and str(fam.parametric).lower() != filters["parametric"].lower():
            continue
        if "name" in filters and filters["name"] not in fam.name:
            continue
        out.append(fam)
    return out


def _norm(s):
    return s.lower().replace("³", "3").replace("²", "2").replace("×", "x").replace(" ", "")


# ---------------------------------------------------------------------------
# the pipeline


@dataclass
class VerificationReport:
    case: str
    family: str
    parameters: dict
    energies: Optional[dict]
    references: dict
    el_residual_sup: Optional[float]
    el_skipped_points: Optional[int]
    euler_defect_sup: Optional[float]
    div_defect_sup: Optional[float]
    convective_defect_sup: Optional[float]
    stress_identity_defect: Optional[float]
    charge: Optional[dict]
    helicity: Optional[float]
    beltrami: Optional[dict]
    bounds: dict
    gates: dict
    extra: dict
    passed: bool
    timing: Optional[dict] = None

    def to_dict(self):
        d = {
            "schema": SCHEMA_VERSION,
            "case": self.case,
            "family": self.family,
            "parameters": self.parameters,
            "energies": self.energies,
            "references": self.references,
            "el_residual_sup": self.el_residual_sup,
            "el_skipped_points": self.el_skipped_points,
            "euler_defect_sup": self.euler_defect_sup,
            "div_defect_sup": self.div_defect_sup,
            "convective_defect_sup": self.convective_defect_sup,
            "stress_identity_defect": self.stress_identity_defect,
            "charge": self.charge,
            "helicity": self.helicity,
            "beltrami": self.beltrami,
            "bounds": self.bounds,
            "gates": self.gates,
            "extra": self.extra,
            "pass": self.passed,
        }
        if self.timing is not None:
            d["timing"] = self.timing
        return d


class _Clock:
    def __init__(self, enabled):
        self.enabled = enabled
        self.marks = {}
        self._t = time.perf_counter()

    def mark(self, name):
        now = time.perf_counter()
        self.marks[name] = now - self._t
        self._t = now


def run_verify(config: CaseConfig, timing: bool = False) -> VerificationReport:
    """Run every stage of the pipeline for one case and gate the defects."""
    config.validate()
    fam = FAMILIES[config.family]
    clock = _Clock(timing)
    try:
        setup = fam.build(config)
    except HopfluidError as exc:
        raise type(exc)(f"case {config.case_name}: {exc}") from exc
    clock.mark("build")
    tol = config.tolerances
    gates = {}

    def gate(name, value, limit):
        gates[name] = {"value": value, "tolerance": limit, "pass": bool(value <= limit)}

    params = {**fam.parameters}
    if config.k is not None:
        params["k"] = config.k
    if config.l is not None and "l" in params:
        params["l"] = config.l
    params.update(
        potential=config.potential,
        kappa=config.kappa,
        profile=config.profile,
        a_scale=config.a_scale,
        grid=config.grid,
        method=config.method,
    )

    grid = gate_grid(setup.chart, config.grid)
    m, P = setup.map, setup.potential
    energies, references, el_sup, el_skipped, stress = None, {}, None, None, None
    qspec = default_spec(setup.chart, config.quadrature_order, config.periodic_order)
    if m is not None and setup.el_gate:
        e = energy(m, P, config.kappa, qspec)
        energies = e.as_dict()
        clock.mark("energy")
        el_tol = tol["el_residual"] if config.method == "closed" else tol["el_residual_fd"]
        el_parts = chunked_map(
            lambda x: el_residual(m, P, x, config.method, skip_critical=True), grid
        )
        el_sup = max((r.sup_norm for r in el_parts), default=0.0)
        el_skipped = sum(r.skipped for r in el_parts)
        gate("el_residual", el_sup, el_tol)
        clock.mark("el_residual")
        stress = stress_divergence_identity_check(m, sample_points(setup.chart, 24))
        gate("stress_identity", stress, tol["stress_identity"])
        clock.mark("stress_identity")
    for key, ref in setup.references.items():
        computed = energies.get(key) if energies and key in energies else setup.extra.get(key)
        if computed is None:
            continue
        references[key] = {
            "computed": computed,
            "reference": float(ref),
            "rel_error": abs(computed - ref) / abs(ref),
        }

    euler = div = conv = None
    if setup.flow is not None:
        flow = setup.flow
        chunks = [grid[i : i + CHUNK] for i in range(0, len(grid), CHUNK)]
        with ThreadPoolExecutor(max(1, min(thread_count(), len(chunks)))) as pool:
            parts = list(pool.map(lambda x: euler_defects(flow, x, config.method), chunks))
        euler = max(p.curl_form for p in parts)
        div = max(p.divergence for p in parts)
        conv = max(p.convective_form for p in parts)
        gate("euler_curl_form", euler, tol["euler"])
        gate("divergence", div, tol["divergence"])
        gate("euler_convective_form", conv, max(tol["euler"], 2 * euler))
        clock.mark("euler")
        if setup.pressure_reference is not None:
            err = chunked_max(
                lambda x: float(np.max(np.abs(flow.pressure(x) - setup.pressure_reference(x)))),
                grid,
            )
            gate("pressure", err, tol["pressure"])

    charge = None
    if m is not None and setup.expected_charge is not None:
        c = hopf_charge(m)
        charge = {**c.as_dict(), "expected": setup.expected_charge}
        gate("charge_defect", c.defect, tol["charge"])
        gates["charge_value"] = {
            "value": c.rounded,
            "tolerance": setup.expected_charge,
            "pass": c.rounded == setup.expected_charge,
        }
        clock.mark("charge")

    hel = None
    if setup.flow is not None and setup.chart is S3:
        try:
            hel = helicity(setup.flow)
        except ValueError:
            hel = None

    beltrami = None
    if setup.beltrami is not None:
        handle, expected = setup.beltrami
        rep = beltrami_classify(handle, setup.metric, setup.chart, sample_points(setup.chart))
        beltrami = {**rep.as_dict(), "expected": expected}
        if expected is not None:
            gates["beltrami_class"] = {
                "value": rep.classification,
                "tolerance": expected,
                "pass": rep.classification == expected,
            }
        clock.mark("beltrami")

    bounds = {}
    if energies is not None and charge is not None and abs(charge["raw_integral"]) > 0.5:
        if setup.bound_mu1 is not None:
            b = bound_check_sigma2(
                m,
                setup.bound_mu1,
                charge=charge["raw_integral"],
                sigma2_energy=energies["sigma2_term"] / m.target_radius**4,
            )
            bounds["sigma2_spectral"] = b.as_dict()
            gates["sigma2_bound"] = {
                "value": b.ratio,
                "tolerance": 1.0,
                "pass": bool(b.satisfied),
            }
        if P is not None:
            bounds["mass_term_ratio"] = bound_ratio_mass_term(
                m, P, charge=charge["raw_integral"], total_energy=energies["total"]
            ).as_dict()

    for name, (value, limit) in setup.extra_gates.items():
        gate(name, value, limit)

    passed = all(g["pass"] for g in gates.values())
    return VerificationReport(
        case=config.case_name,
        family=config.family,
        parameters=params,
        energies=energies,
        references=references,
        el_residual_sup=el_sup,
        el_skipped_points=el_skipped,
        euler_defect_sup=euler,
        div_defect_sup=div,
        convective_defect_sup=conv,
        stress_identity_defect=stress,
        charge=charge,
        helicity=hel,
        beltrami=beltrami,
        bounds=bounds,
        gates=gates,
        extra=setup.extra,
        passed=passed,
        timing=clock.marks if timing else None,
    )


def builtin_config(name: str, **overrides) -> CaseConfig:
    if name not in FAMILIES:
        raise KeyError(f"unknown built-in case {name!r}")
    return CaseConfig(family=name).with_updates(**overrides)
