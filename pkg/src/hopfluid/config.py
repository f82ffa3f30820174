"""Case files: one case per INI file, unknown sections or keys are errors.

Example::

    [case]
    name = squashed_wrong_scale
    family = s3_squashed_kl
    k = 2
    l = 1
    a_scale = 1.1

    [tolerances]
    el_residual = 1e-6

    [numerics]
    grid = 48
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .maps import Potential

DEFAULT_TOLERANCES = {
    "el_residual": 1e-6,
    "el_residual_fd": 1e-4,
    "euler": 1e-6,
    "divergence": 1e-6,
    "charge": 1e-6,
    "pressure": 1e-8,
    "stress_identity": 1e-5,
}

_CASE_KEYS = {
    "name": str,
    "family": str,
    "k": int,
    "l": int,
    "potential": str,
    "kappa": float,
    "profile": str,
    "a": float,
    "a_scale": float,
}
_NUMERIC_KEYS = {
    "grid": int,
    "quadrature_order": int,
    "periodic_order": int,
    "method": str,
}
_SECTIONS = {
    "case": _CASE_KEYS,
    "tolerances": {k: float for k in DEFAULT_TOLERANCES},
    "numerics": _NUMERIC_KEYS,
}

PROFILE_TAGS = ("closed_form", "solved")
METHODS = ("closed", "fd")


@dataclass(frozen=True)
class CaseConfig:
    """Everything needed to run one verification case.

    ``potential = "default"`` selects the family's own potential; ``a`` (when
    set) replaces the closed-form metric scale, and ``a_scale`` multiplies
    whichever scale is in use.
    """

    family: str
    name: Optional[str] = None
    k: Optional[int] = None
    l: Optional[int] = None
    potential: str = "default"
    kappa: float = 0.0
    profile: str = "closed_form"
    a: Optional[float] = None
    a_scale: float = 1.0
    grid: int = 48
    quadrature_order: int = 64
    periodic_order: int = 8
    method: str = "closed"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    @property
    def case_name(self):
        return self.name or self.family

    def with_updates(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def validate(self):
        from .cases import FAMILIES

        if self.family not in FAMILIES:
            raise ConfigError(f"unknown case family {self.family!r}; known: {', '.join(FAMILIES)}")
        if self.profile not in PROFILE_TAGS:
            raise ConfigError(f"profile must be one of {PROFILE_TAGS}, got {self.profile!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        for key, tol in self.tolerances.items():
            if not tol > 0:
                raise ConfigError(f"tolerance {key} must be positive, got {tol}")
        if self.grid < 2 or self.quadrature_order < 8 or self.periodic_order < 1:
            raise ConfigError("grid must be >= 2 and quadrature_order >= 8")
        if self.potential != "default":
            parse_potential(self.potential)
        return self


def parse_potential(tag: str, k: int = 1) -> Potential:
    """``constant``, ``old_baby``, ``new_baby``, ``quartic_sixteenth``,
    ``charge_dependent`` (uses ``k``) or ``baby(a,b)``."""
    m = re.fullmatch(r"\s*baby\(\s*([^,]+),\s*([^)]+)\)\s*", tag)
    if m:
        return Potential.baby(float(m.group(1)), float(m.group(2)))
    simple = {
        "constant": Potential.constant,
        "old_baby": Potential.old_baby,
        "new_baby": Potential.new_baby,
        "quartic_sixteenth": Potential.quartic_sixteenth,
    }
    if tag in simple:
        return simple[tag]()
    if tag == "charge_dependent":
        return Potential.charge_dependent(k)
    raise ConfigError(f"unknown potential tag {tag!r}")


def _key_lines(text):
    """``(section, key) -> line number`` for diagnostics."""
    out, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            out[(section, None)] = no
        elif "=" in stripped and not stripped.startswith(("#", ";")):
            out[(section, stripped.split("=", 1)[0].strip().lower())] = no
    return out


def parse_case_text(text: str, source: str = "<string>") -> CaseConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    lines = _key_lines(text)
    values, tolerances = {}, dict(DEFAULT_TOLERANCES)
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"{source}:{lines.get((section, None), '?')}: unknown section [{section}]"
            )
        schema = _SECTIONS[section]
        for key, raw in parser.items(section):
            where = f"{source}:{lines.get((section, key), '?')}"
            if key not in schema:
                raise ConfigError(f"{where}: unknown key {key!r} in [{section}]")
            try:
                val = schema[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{where}: bad value for {key}: {raw!r}") from exc
            if section == "tolerances":
                tolerances[key] = val
            else:
                values[key] = val
    if "family" not in values:
        raise ConfigError(f"{source}: [case] needs a 'family' key")
    try:
        return CaseConfig(tolerances=tolerances, **values).validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_case(path) -> CaseConfig:
    path = Path(path)
    return parse_case_text(path.read_text(), source=str(path))
