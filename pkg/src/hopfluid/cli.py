"""Command-line entry point.

Usage::

    hopfluid list [--filter manifold=S3]
    hopfluid verify s3_squashed_kl --k 2 --l 1 [--a-scale 1.1] [--out report.json]
    hopfluid verify path/to/case.ini
    hopfluid scan s3_harmonic_k --param k=1..8
    hopfluid scan r3_derrick --param lambda=0.5..2:7
    hopfluid profile s3_squashed_kl --k 2 --l 1 --potential new_baby
    hopfluid report --out results/

Exit status is 0 when every gated check passes, 1 when a gate fails and 2 on
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import catalog
from .cases import FAMILIES, builtin_config, list_cases, run_verify, thread_count
from .config import load_case, parse_potential
from .errors import ConfigError, HopfluidError
from .geometry import MetricSpec
from .maps import Potential
from .profiles import (
    ProfileProblem,
    conformal_problem,
    profile_csv_rows,
    solve_coupled_h,
    solve_profile,
    squashed_problem,
)
from .topology import hopf_charge
from .variational import energy, scaled_map

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# serialisation


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(float(obj))
    return obj


class _Float(float):
    pass


def _encode(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}  {json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[" + ", ".join(_encode(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, _Float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        return text if any(c in text for c in ".e") else text + ".0"
    return json.dumps(obj)


def dumps_report(d: dict) -> str:
    """JSON with floats at 17 significant digits and insertion-ordered keys."""
    return _encode(_jsonable(d)) + "\n"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# scans


def parse_range(spec: str):
    """``name=1..8`` (integers), ``name=0.5..2:7`` (7 evenly spaced), ``name=1,2,5``."""
    if "=" not in spec:
        raise ConfigError(f"--param needs name=range, got {spec!r}")
    name, rng = (p.strip() for p in spec.split("=", 1))
    if not rng:
        return name, []
    m = re.fullmatch(r"([-+.\deE]+)\.\.([-+.\deE]+)(?::(\d+))?", rng)
    if m:
        lo, hi, count = m.group(1), m.group(2), m.group(3)
        if count is not None:
            n = int(count)
            return name, [] if n == 0 else list(np.linspace(float(lo), float(hi), n))
        try:
            return name, list(range(int(lo), int(hi) + 1))
        except ValueError as exc:
            raise ConfigError(f"float ranges need a point count, e.g. {name}={lo}..{hi}:5") from exc
    try:
        return name, [int(v) if re.fullmatch(r"[-+]?\d+", v) else float(v) for v in rng.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse range {rng!r}") from exc


SCAN_FAMILIES = (
    "s3_harmonic_k",
    "s3_squashed_kl",
    "s3_conformal_kl",
    "s3_oldbaby_profile",
    "r3_derrick",
)
SCAN_HEADER = ("parameter", "energy", "charge", "ratio", "status")


def _scan_map(family, name, value, fixed_l):
    if family == "s3_harmonic_k":
        k = int(value)
        return catalog.harmonic_map(k), catalog.harmonic_potential(k), k**3
    if family == "s3_oldbaby_profile":
        k = int(value)
        return catalog.oldbaby_map(k), Potential.old_baby(), None
    builder = catalog.squashed_map if family == "s3_squashed_kl" else catalog.conformal_map
    if name == "kl":
        k = l = int(value)
    elif name == "k":
        k, l = int(value), fixed_l
    elif name == "l":
        k, l = fixed_l, int(value)
    else:
        raise ConfigError(f"{family} scans take k, l or kl, not {name!r}")
    return builder(k, l), Potential.new_baby(), None


def run_scan(family: str, param: str, fixed_l: int = 1):
    """Rows ``(parameter, energy, charge, ratio, status)``.

    ``ratio`` is ``E / k^3`` for the harmonic family, ``E / |Q|^(3/4)`` for the
    other three-sphere families and ``E(lam) / (lam E(1))`` for Derrick scans.
    A row whose computation raises is kept with ``status = error: ...``.
    """
    if family not in SCAN_FAMILIES:
        raise ConfigError(f"cannot scan {family!r}; scannable: {', '.join(SCAN_FAMILIES)}")
    name, values = parse_range(param)
    if family == "r3_derrick":
        if name not in ("lambda", "lam"):
            raise ConfigError("r3_derrick scans take lambda=lo..hi:n")
        if not values:
            return []
        m = catalog.gaussian_test_map()
        base = energy(m).total

        def row(lam):
            scaled = scaled_map(m, lam)
            e = energy(scaled).total
            return (lam, e, hopf_charge(scaled).raw_integral, e / (lam * base), "ok")

    else:
        if family == "s3_harmonic_k" and name != "k":
            raise ConfigError("s3_harmonic_k scans take k=...")

        def row(v):
            try:
                m, P, k3 = _scan_map(family, name, v, fixed_l)
                e = energy(m, P).total
                q = hopf_charge(m).raw_integral
                ratio = e / k3 if k3 is not None else e / abs(q) ** 0.75
                return (v, e, q, ratio, "ok")
            except HopfluidError as exc:
                return (v, float("nan"), float("nan"), float("nan"), f"error: {exc}")

    with ThreadPoolExecutor(max(1, min(thread_count(), len(values) or 1))) as pool:
        return list(pool.map(row, values))


# ---------------------------------------------------------------------------
# profiles


PROFILE_FAMILIES = ("s3_squashed_kl", "s3_conformal_kl", "s3_oldbaby_profile", "s3_round")


def run_profile(family, k, l, potential_tag, n=257):
    """``(s, alpha, alpha')`` rows and a dict of solver metadata."""
    if family == "s3_oldbaby_profile":
        sol = solve_coupled_h(k)
        meta = {"h0": sol.h0, "smooth": sol.smooth, "pole_exponents": sol.pole_exponents}
        return profile_csv_rows(sol.profile, n), meta
    P = parse_potential(potential_tag, k)
    if family == "s3_squashed_kl":
        problem = squashed_problem(k, l, P)
    elif family == "s3_conformal_kl":
        problem = conformal_problem(k, l, P)
    elif family == "s3_round":
        problem = ProfileProblem(MetricSpec.round(), k, l, P)
    else:
        raise ConfigError(f"no profile solver for {family!r}; choose from {PROFILE_FAMILIES}")
    sol = solve_profile(problem)
    meta = {"a": sol.a, "smooth": sol.smooth, "pole_exponents": sol.pole_exponents}
    return profile_csv_rows(sol.profile, n), meta


# ---------------------------------------------------------------------------
# commands


def _config_from_args(args):
    target = args.case
    if target in FAMILIES:
        config = builtin_config(target)
    elif Path(target).is_file():
        config = load_case(target)
    else:
        raise ConfigError(f"{target!r} is neither a built-in case nor a case file")
    config = config.with_updates(
        k=args.k,
        l=args.l,
        a_scale=args.a_scale,
        profile=args.profile,
        grid=args.grid,
        potential=args.potential,
    )
    return config.validate()


def cmd_list(args):
    filters = {}
    for f in args.filter or []:
        if "=" not in f:
            raise ConfigError(f"--filter needs key=value, got {f!r}")
        key, val = f.split("=", 1)
        filters[key.strip()] = val.strip()
    try:
        fams = list_cases(filters)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for fam in fams:
        params = ",".join(f"{k}={v}" for k, v in fam.parameters.items()) or "-"
        print(f"{fam.name:<20} {fam.manifold:<6} {params:<10} {fam.description}")
    return EXIT_OK


def cmd_verify(args):
    report = run_verify(_config_from_args(args), timing=args.timing)
    _emit(dumps_report(report.to_dict()), args.out)
    failed = [k for k, g in report.gates.items() if not g["pass"]]
    status = "PASS" if report.passed else "FAIL " + ",".join(failed)
    print(f"{report.case}: {status}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_scan(args):
    rows = run_scan(args.family, args.param, fixed_l=args.l or 1)
    _emit(rows_to_csv(SCAN_HEADER, rows), args.out)
    return EXIT_OK if all(r[-1] == "ok" for r in rows) else EXIT_FAIL


def cmd_profile(args):
    (s, a, da), meta = run_profile(args.family, args.k, args.l, args.potential, args.n)
    _emit(rows_to_csv(("s", "alpha", "alpha_prime"), zip(s, a, da)), args.out)
    print(" ".join(f"{k}={_fmt(v)}" for k, v in meta.items()), file=sys.stderr)
    return EXIT_OK


def cmd_report(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name in FAMILIES:
        rep = run_verify(builtin_config(name), timing=args.timing)
        (out / f"{name}.json").write_text(dumps_report(rep.to_dict()))
        summary[name] = rep.passed
        print(f"{name}: {'PASS' if rep.passed else 'FAIL'}", file=sys.stderr)
    scans = {
        "scan_s3_harmonic_k.csv": ("s3_harmonic_k", "k=1..8"),
        "scan_s3_squashed_kl.csv": ("s3_squashed_kl", "kl=1..4"),
        "scan_s3_conformal_kl.csv": ("s3_conformal_kl", "kl=1..4"),
        "scan_r3_derrick.csv": ("r3_derrick", "lambda=0.5..2:7"),
    }
    for fname, (family, param) in scans.items():
        (out / fname).write_text(rows_to_csv(SCAN_HEADER, run_scan(family, param)))
    (out / "summary.json").write_text(
        dumps_report({"schema": 1, "cases": summary, "pass": all(summary.values())})
    )
    return EXIT_OK if all(summary.values()) else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="hopfluid", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    ls = sub.add_parser("list", help="list built-in case families")
    ls.add_argument("--filter", action="append", metavar="KEY=VALUE")
    ls.set_defaults(func=cmd_list)

    v = sub.add_parser("verify", help="run the verification pipeline for one case")
    v.add_argument("case", help="built-in case name or path to a case file")
    v.add_argument("--k", type=int)
    v.add_argument("--l", type=int)
    v.add_argument("--a-scale", type=float, dest="a_scale")
    v.add_argument("--profile", choices=("closed_form", "solved"))
    v.add_argument("--potential")
    v.add_argument("--grid", type=int)
    v.add_argument("--out")
    v.add_argument("--timing", action="store_true", help="include wall-clock timings")
    v.set_defaults(func=cmd_verify)

    sc = sub.add_parser("scan", help="energy/charge table over a parameter range")
    sc.add_argument("family", choices=SCAN_FAMILIES)
    sc.add_argument("--param", required=True, metavar="NAME=RANGE")
    sc.add_argument("--l", type=int, help="fixed l when scanning k")
    sc.add_argument("--out")
    sc.set_defaults(func=cmd_scan)

    pr = sub.add_parser("profile", help="solve a profile and write (s, alpha, alpha') CSV")
    pr.add_argument("family", choices=PROFILE_FAMILIES)
    pr.add_argument("--k", type=int, required=True)
    pr.add_argument("--l", type=int, default=None)
    pr.add_argument("--potential", default="new_baby")
    pr.add_argument("--n", type=int, default=257)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_profile)

    rp = sub.add_parser("report", help="verify every built-in case and write JSON/CSV")
    rp.add_argument("--out", required=True)
    rp.add_argument("--timing", action="store_true")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "l", None) is None and args.command == "profile":
        args.l = args.k
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"hopfluid: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HopfluidError as exc:
        print(f"hopfluid: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
