"""Plain-text run configuration and the figure presets.

A configuration file holds one ``key = value`` pair per line; ``#`` starts
a comment. Keys are the fields of :class:`~qcnhc.ensemble.EnsembleConfig`
plus ``preset``. Values may be integers, floats, simple fractions such as
``1/3``, ``true``/``false``, ``none`` or bare words. Keys given explicitly
override the preset.

Keys and defaults (dimensionless units, hbar = k_B = M = omega_c = 1)::

    n_traj = 10000          trajectories in the ensemble
    t_max = 10.0            final time
    dt = 0.01               time step
    n_output = 201          output times, evenly spread over [0, t_max]
    scheme = nhc            nve | nhc | bd
    mode = adiabatic        adiabatic | nonadiabatic
    max_hops = 6            transitions allowed per trajectory
    master_seed = 0         seed of the per-trajectory random streams
    populations_only = false  sample diagonal surface pairs only
    block_size = 1000       trajectories per reduction block
    omega = 1/3             tunnelling splitting
    kondo = 0.007           Kondo parameter of the Ohmic bath
    beta = 0.3              inverse temperature
    omega_max = 3.0         cutoff of the bath discretization
    gamma_s = 0.0           static bias
    n_bath = 1              bath oscillators
    tau = none              thermostat time scale, 1/omega_max when none
    m_eta1 = none           chain masses, n_bath kT tau^2 and kT tau^2 when none
    m_eta2 = none
    zeta = 1.0              Langevin friction
    sy_order = 3            Suzuki-Yoshida order of the thermostat splitting
    n_respa = 1             thermostat sub-steps
"""

from __future__ import annotations

import types
import typing
from dataclasses import asdict, fields
from fractions import Fraction

from .ensemble import EnsembleConfig


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


OMEGA = 1.0 / 3.0
_FIG_COMMON = dict(omega=OMEGA, omega_max=3.0)
_WEAK = dict(beta=0.3, kondo=0.007)
_STRONG = dict(beta=3.0, kondo=0.1)
_BACKENDS = {
    "nve": dict(scheme="nve", n_bath=200),
    "nhc": dict(scheme="nhc", n_bath=1),
    "bd": dict(scheme="bd", n_bath=1, zeta=1.0),
}

PRESETS: dict[str, dict] = {
    "fig1": dict(**_FIG_COMMON, **_WEAK, mode="adiabatic", t_max=10.0, n_traj=10_000),
    "fig2": dict(**_FIG_COMMON, **_STRONG, mode="adiabatic", t_max=10.0, n_traj=10_000),
    "fig3": dict(**_FIG_COMMON, **_WEAK, mode="nonadiabatic", max_hops=6, t_max=6.0,
                 n_output=121, n_traj=100_000),
    "fig4": dict(**_FIG_COMMON, **_STRONG, mode="nonadiabatic", max_hops=6, t_max=6.0,
                 n_output=121, n_traj=100_000),
    "fig5": dict(**_FIG_COMMON, **_STRONG, gamma_s=OMEGA / 3.0, mode="adiabatic",
                 t_max=40.0, n_output=401, n_traj=10_000),
}
PRESET_SCHEMES = {
    "fig1": ("nve", "nhc", "bd"),
    "fig2": ("nve", "nhc", "bd"),
    "fig3": ("nve", "nhc", "bd"),
    "fig4": ("nve", "nhc", "bd"),
    "fig5": ("nve", "nhc"),
}

_FIELDS = {f.name: f for f in fields(EnsembleConfig)}
_HINTS = typing.get_type_hints(EnsembleConfig)


def preset_runs(name: str, **overrides) -> dict[str, EnsembleConfig]:
    """The back-end runs of a figure preset, keyed by scheme."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    runs = {}
    for scheme in PRESET_SCHEMES[name]:
        values = {**PRESETS[name], **_BACKENDS[scheme], **overrides}
        runs[values["scheme"]] = _build(values)
    return runs


def _base_type(name):
    hint = _HINTS[name]
    args = [a for a in typing.get_args(hint) if a is not type(None)]
    if typing.get_origin(hint) in (typing.Union, types.UnionType) and args:
        return args[0], True
    return hint, False


def _convert(key: str, raw: str):
    kind, optional = _base_type(key)
    low = raw.lower()
    if optional and low in ("none", "null", ""):
        return None
    if kind is bool:
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected true or false, got {raw!r}")
    if kind is int:
        value = float(Fraction(raw))
        if value != int(value):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            return float(Fraction(raw))
    return raw


def _build(values: dict) -> EnsembleConfig:
    try:
        return EnsembleConfig(**values)
    except ValueError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def _read_pairs(text: str) -> tuple[str | None, dict, dict]:
    preset = None
    values: dict = {}
    lines: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key in lines:
            raise ConfigError(f"line {lineno}: key {key!r} already set on line {lines[key]}")
        lines[key] = lineno
        if key == "preset":
            preset = raw
            continue
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"line {lineno}: key {key!r}: {exc}") from None
    return preset, values, lines


def parse_runs(text: str) -> dict[str, EnsembleConfig]:
    """Parse a configuration that may name a multi-run preset.

    Returns one config per scheme; a ``scheme`` key restricts a preset to
    that single run.
    """
    preset, values, _ = _read_pairs(text)
    if preset is None:
        cfg = _build(values)
        return {cfg.scheme: cfg}
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    if "scheme" in values:
        scheme = values["scheme"]
        if scheme not in PRESET_SCHEMES[preset]:
            raise ConfigError(f"preset {preset} has no {scheme!r} run")
        return {scheme: _build({**PRESETS[preset], **_BACKENDS[scheme], **values})}
    return preset_runs(preset, **values)


def parse_config(text: str) -> EnsembleConfig:
    """Parse a single-run configuration.

    Raises :class:`ConfigError` with the line number and key on malformed
    input, and with the violated condition on out-of-range values.
    """
    runs = parse_runs(text)
    if len(runs) != 1:
        raise ConfigError(
            f"configuration describes {len(runs)} runs ({', '.join(runs)}); "
            "add a 'scheme' line to pick one")
    return next(iter(runs.values()))


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: EnsembleConfig) -> str:
    """Every field with its resolved value; parsing the text gives ``cfg`` back."""
    return "".join(f"{k} = {_format(v)}\n" for k, v in asdict(cfg).items())
