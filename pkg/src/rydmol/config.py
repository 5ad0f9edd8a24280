"""Run configuration: one JSON document, validated section by section.

Energies and rates are in atomic units; durations are in Kepler periods of
the initial packet. Unknown keys are rejected so that a typo cannot silently
fall back to a default.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .channels import ChannelSet, build_channel_set
from .classical import resonant_rotational_constant


class ConfigError(ValueError):
    pass


@dataclass
class Physics:
    J: int = 50
    L: int = 10
    parity: str = "+"
    mu0: float = 0.4
    k: float = 0.25


@dataclass
class Calibration:
    nu_ref: float = 315.5
    N_ref: int | None = None  # defaults to J
    p: int = 2
    generic_offset: float = 0.137
    case: str = "resonant"
    B_r: float | None = None
    E_total: float | None = None


@dataclass
class Sos:
    n_cos: int = 24
    n_phi: int = 24
    n_kicks: int = 1000


@dataclass
class Eigens:
    nu_min: float | None = None
    nu_max: float | None = None
    half_width: float = 5.0


@dataclass
class Stats:
    k_values: list[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 10.0])
    cases: list[str] = field(default_factory=lambda: ["resonant", "generic"])


@dataclass
class Wavepacket:
    N0: int = 40
    n0: float | None = None  # defaults to nu_N0 at the total energy
    dn: float = 2.0
    weight_cutoff: float = 1e-4


@dataclass
class Evolve:
    t_max_Te: float = 120.0
    dt_Te: float = 0.05


@dataclass
class Correlation:
    N: int = 42
    t_ref_Te: float = 0.5


@dataclass
class Husimi:
    n_theta: int = 100
    n_phi: int = 200
    frame: str = "sos"
    # "min_S2", "max_S2", "channel:<N>" or an eigenstate index in the window
    targets: list[str] = field(default_factory=lambda: ["min_S2", "max_S2"])


@dataclass
class Revival:
    t_max_Te: float = 330.0
    dt_Te: float = 0.05
    skip_Te: float = 20.0
    lag_min: int = 30
    lag_max: int = 200


@dataclass
class Output:
    directory: str = "out"


@dataclass
class RunConfig:
    physics: Physics = field(default_factory=Physics)
    calibration: Calibration = field(default_factory=Calibration)
    sos: Sos = field(default_factory=Sos)
    eigens: Eigens = field(default_factory=Eigens)
    stats: Stats = field(default_factory=Stats)
    wavepacket: Wavepacket = field(default_factory=Wavepacket)
    evolve: Evolve = field(default_factory=Evolve)
    correlation: Correlation = field(default_factory=Correlation)
    husimi: Husimi = field(default_factory=Husimi)
    revival: Revival = field(default_factory=Revival)
    output: Output = field(default_factory=Output)

    # --- serialization ---------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        sections = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(sections)
        if unknown:
            raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
        kwargs = {}
        for name, f in sections.items():
            section_cls = f.default_factory
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"section '{name}' must be an object")
            allowed = {g.name for g in dataclasses.fields(section_cls)}
            bad = set(raw) - allowed
            if bad:
                raise ConfigError(f"unknown key(s) in '{name}': {sorted(bad)}")
            kwargs[name] = section_cls(**raw)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def with_overrides(self, pairs: list[str]) -> "RunConfig":
        """Apply ``section.key=value`` overrides; values are parsed as JSON."""
        data = self.to_dict()
        for item in pairs:
            key, sep, value = item.partition("=")
            section, dot, name = key.partition(".")
            if not sep or not dot:
                raise ConfigError(f"override '{item}' is not of the form section.key=value")
            if section not in data:
                raise ConfigError(f"unknown config section: {section}")
            try:
                parsed = json.loads(value)
            except json.JSONDecodeError:
                parsed = value
            data[section][name] = parsed
        return RunConfig.from_dict(data)

    # --- validation ------------------------------------------------------

    def validate(self) -> None:
        ph, cal = self.physics, self.calibration
        _check(isinstance(ph.J, int) and isinstance(ph.L, int), "physics.J and physics.L must be integers")
        _check(ph.J >= ph.L > 0, "physics needs J >= L > 0")
        _check(ph.parity in ("+", "-"), "physics.parity must be '+' or '-'")
        _check(ph.k >= 0, "physics.k must be non-negative")
        _check(cal.case in ("resonant", "generic"), "calibration.case must be 'resonant' or 'generic'")
        _check(cal.nu_ref > ph.L, "calibration.nu_ref must exceed L")
        _check(cal.p >= 1, "calibration.p must be >= 1")
        _check(cal.B_r is None or cal.B_r > 0, "calibration.B_r must be positive")
        _check(self.sos.n_cos > 0 and self.sos.n_phi > 0 and self.sos.n_kicks > 0, "sos sizes must be positive")
        _check(self.eigens.half_width > 0, "eigens.half_width must be positive")
        if self.eigens.nu_min is not None or self.eigens.nu_max is not None:
            _check(
                self.eigens.nu_min is not None and self.eigens.nu_max is not None,
                "eigens.nu_min and eigens.nu_max go together",
            )
            _check(0 < self.eigens.nu_min < self.eigens.nu_max, "eigens needs 0 < nu_min < nu_max")
        _check(all(k >= 0 for k in self.stats.k_values) and self.stats.k_values, "stats.k_values must be non-negative")
        _check(all(c in ("resonant", "generic") for c in self.stats.cases), "stats.cases holds resonant/generic")
        wp = self.wavepacket
        _check(wp.dn > 0 and 0 < wp.weight_cutoff < 1, "wavepacket needs dn > 0 and 0 < weight_cutoff < 1")
        _check(wp.n0 is None or wp.n0 > ph.L, "wavepacket.n0 must exceed L")
        _check((wp.N0 - ph.J - ph.L) % 2 == (0 if ph.parity == "+" else 1), "wavepacket.N0 has the wrong parity")
        _check(abs(wp.N0 - ph.J) <= ph.L, "wavepacket.N0 outside |J-L|..J+L")
        _check(self.correlation.N >= 0, "correlation.N must be a channel")
        for sec in (self.evolve, self.revival):
            _check(sec.t_max_Te > 0 and 0 < sec.dt_Te <= sec.t_max_Te, "time grids need 0 < dt <= t_max")
        _check(0 < self.revival.lag_min < self.revival.lag_max, "revival needs 0 < lag_min < lag_max")
        _check(self.husimi.n_theta > 0 and self.husimi.n_phi > 0, "husimi resolution must be positive")
        _check(self.husimi.frame in ("sos", "molecular"), "husimi.frame must be 'sos' or 'molecular'")

    # --- derived quantities ----------------------------------------------

    def rotational_constant(self) -> float:
        cal = self.calibration
        if cal.B_r is not None:
            return float(cal.B_r)
        N_ref = self.physics.J if cal.N_ref is None else cal.N_ref
        return resonant_rotational_constant(cal.nu_ref, N_ref, cal.p)

    def reference_nu(self, case: str | None = None) -> float:
        """``nu`` in the ``N = J`` channel at the total energy."""
        cal = self.calibration
        case = case or cal.case
        if cal.E_total is not None and case == cal.case:
            J = self.physics.J
            eps = cal.E_total - self.rotational_constant() * J * (J + 1)
            _check(eps < 0, "calibration.E_total lies above the N=J threshold")
            return 1.0 / math.sqrt(-2.0 * eps)
        return cal.nu_ref * (1.0 + cal.generic_offset) if case == "generic" else cal.nu_ref

    def total_energy(self, case: str | None = None) -> float:
        J = self.physics.J
        return self.rotational_constant() * J * (J + 1) - 0.5 / self.reference_nu(case) ** 2

    def eigen_window(self, case: str | None = None) -> tuple[float, float]:
        e = self.eigens
        if e.nu_min is not None:
            return float(e.nu_min), float(e.nu_max)
        nu = self.reference_nu(case)
        return nu - e.half_width, nu + e.half_width

    def channel_set(self, k: float | None = None) -> ChannelSet:
        ph = self.physics
        return build_channel_set(ph.J, ph.L, ph.parity, self.rotational_constant(), ph.mu0, ph.k if k is None else k)


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return RunConfig.from_dict(data)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(cfg.to_json() + "\n")


PRESETS: dict[str, dict[str, Any]] = {
    # surface of section, resonant and generic panels are two runs of this
    "fig2": {"physics": {"k": 1.0}, "sos": {"n_cos": 12, "n_phi": 12, "n_kicks": 2000}},
    "fig3": {"stats": {"k_values": [0.25, 0.5, 1.0, 2.0, 5.0, 10.0], "cases": ["resonant", "generic"]}},
    "fig5": {"physics": {"k": 0.5}, "eigens": {"half_width": 5.0}},
    "fig6": {"physics": {"k": 0.5}, "husimi": {"targets": ["min_S2", "max_S2"]}},
    "fig7": {"physics": {"k": 0.25}, "wavepacket": {"N0": 40}, "evolve": {"t_max_Te": 20.0}},
    "fig8": {"physics": {"k": 0.25}, "wavepacket": {"N0": 50}, "evolve": {"t_max_Te": 20.0}},
    "fig9": {"physics": {"k": 0.25}, "wavepacket": {"N0": 40}, "correlation": {"N": 42}},
    "fig10": {"physics": {"k": 0.25}, "wavepacket": {"N0": 40}, "evolve": {"t_max_Te": 250.0}},
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (choose from {', '.join(PRESETS)})")
    return RunConfig.from_dict(PRESETS[name])
