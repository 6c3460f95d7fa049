"""Plain-text key/value configuration with [model], [pulse] and [run] sections.

A model definition file carries just [model] and [pulse]; a run
configuration adds [run] with the subcommand and its parameters. Parsing
is strict: unknown sections or keys are errors naming the offender and its
line number, so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import ast
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import ConfigurationError
from .potentials import InteractionPotential, ModelSpec, PulseSpec, SitePotential

__all__ = [
    "ConfigDoc",
    "parse_config",
    "load_config",
    "model_from_config",
    "serialize_model",
    "model_digest",
    "parse_rho",
]

_KNOWN_KEYS = {
    "model": {"W.kind", "W.c", "W.c2", "W.c4", "V.fourier"},
    "pulse": {"tau", "kappa"},
    "run": {
        "command", "rho", "rho_list", "tau", "tau_list", "mode", "out",
        "transient_periods", "max_periods", "window", "speed_tol",
        "workers", "periods", "q_max", "grid_n", "max_terms", "dt_max",
        "safety", "eps_margin",
    },
}


@dataclass(frozen=True)
class ConfigDoc:
    sections: dict

    def get(self, section: str, key: str, default=None) -> Optional[str]:
        return self.sections.get(section, {}).get(key, default)

    def require(self, section: str, key: str) -> str:
        value = self.get(section, key)
        if value is None:
            raise ConfigurationError(f"missing key {key!r} in section [{section}]")
        return value


def parse_config(text: str, source: str = "<config>") -> ConfigDoc:
    sections: dict[str, dict[str, str]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _KNOWN_KEYS:
                raise ConfigurationError(
                    f"{source}:{lineno}: unknown section [{name}]")
            current = name
            sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if current is None:
            raise ConfigurationError(
                f"{source}:{lineno}: key outside any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS[current]:
            raise ConfigurationError(
                f"{source}:{lineno}: unknown key {key!r} in section [{current}]")
        if key in sections[current]:
            raise ConfigurationError(
                f"{source}:{lineno}: duplicate key {key!r}")
        sections[current][key] = value
    return ConfigDoc(sections)


def load_config(path) -> ConfigDoc:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def _parse_float(doc_value: str, what: str) -> float:
    try:
        return float(doc_value)
    except ValueError as exc:
        raise ConfigurationError(f"invalid number for {what}: {doc_value!r}") from exc


def _parse_fourier(value: str) -> tuple[tuple[float, ...], tuple[float, ...]]:
    try:
        pairs = ast.literal_eval(value)
        amps = tuple(float(a) for a, _ in pairs)
        phases = tuple(float(p) for _, p in pairs)
    except (ValueError, SyntaxError, TypeError) as exc:
        raise ConfigurationError(
            f"V.fourier must be a list of (amplitude, phase) pairs, got {value!r}"
        ) from exc
    if not amps:
        raise ConfigurationError("V.fourier must contain at least one pair")
    return amps, phases


def model_from_config(doc: ConfigDoc) -> ModelSpec:
    kind = doc.require("model", "W.kind")
    if kind == "quadratic":
        w = InteractionPotential.quadratic(
            _parse_float(doc.require("model", "W.c"), "W.c"))
    elif kind == "quadratic-plus-quartic":
        w = InteractionPotential.quadratic_quartic(
            _parse_float(doc.require("model", "W.c2"), "W.c2"),
            _parse_float(doc.require("model", "W.c4"), "W.c4"))
    else:
        raise ConfigurationError(f"unknown W.kind {kind!r}")
    amps, phases = _parse_fourier(doc.require("model", "V.fourier"))
    try:
        v = SitePotential(amps=amps, phases=phases)
        pulse = PulseSpec(tau=_parse_float(doc.require("pulse", "tau"), "pulse.tau"),
                          kappa=_parse_float(doc.require("pulse", "kappa"), "pulse.kappa"))
    except ValueError as exc:
        raise ConfigurationError(f"invalid model: {exc}") from exc
    return ModelSpec(w=w, v=v, pulse=pulse)


def serialize_model(model: ModelSpec) -> str:
    """Canonical model-file text; stable across runs for digesting."""
    lines = ["[model]"]
    if model.w.kind == "quadratic":
        lines.append("W.kind = quadratic")
        lines.append(f"W.c = {model.w.c2:.17g}")
    else:
        lines.append("W.kind = quadratic-plus-quartic")
        lines.append(f"W.c2 = {model.w.c2:.17g}")
        lines.append(f"W.c4 = {model.w.c4:.17g}")
    pairs = ", ".join(f"({a:.17g}, {p:.17g})"
                      for a, p in zip(model.v.amps, model.v.phases))
    lines.append(f"V.fourier = [{pairs}]")
    lines.append("[pulse]")
    lines.append(f"tau = {model.pulse.tau:.17g}")
    lines.append(f"kappa = {model.pulse.kappa:.17g}")
    return "\n".join(lines) + "\n"


def model_digest(model: ModelSpec) -> str:
    return hashlib.sha256(serialize_model(model).encode()).hexdigest()[:16]


def parse_rho(text: str) -> Fraction:
    """Parse 'p/q' or an integer into an exact reduced fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigurationError(f"invalid spacing {text!r}: {exc}") from exc
