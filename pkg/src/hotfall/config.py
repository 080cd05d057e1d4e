"""Run configuration: strict YAML loading, SI -> internal conversion, stable hashing."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from . import units
from .grid import Grid3D
from .params import AtomSpecies, TrapParams
from .propagate import EvolutionConfig


class ConfigError(ValueError):
    pass


# Every key a config file may contain, with its default. ``None`` marks
# optional values; lists must keep their length.
DEFAULTS: dict[str, Any] = {
    "species": {
        "name": "Rb87",
        "mass_kg": units.RB87_MASS_KG,
        "scattering_length_bohr": units.RB87_SCATTERING_BOHR,
        "wavelength_nm": units.RB87_WAVELENGTH_NM,
    },
    "trap": {
        "ell": 1,
        "waist_um": 4.0,
        "depth_er": 41.6,
        "wavelength_nm": None,
        "gravity_m_s2": units.GRAVITY,
        "power_mw": 5.0,
        "detuning_hz": -1.0e15,
    },
    "grid": {
        "n": [128, 128, 256],
        "box_um": [20.0, 20.0, 40.0],
        "center_um": [0.0, 0.0, 0.0],
    },
    "state": {
        "kind": "single_atom",
        "atom_number": 10000,
        "scattering_length_bohr": None,
        "dtau_ms": 1e-4,
        "tol": 1e-10,
        "max_iter": 50000,
        "refine": False,
    },
    "evolution": {
        "dt_ms": 5e-4,
        "t_final_ms": 3.0,
        "mode": "falling_frame",
        "snapshot_every": 500,
        "record_every": 1,
        "renormalize": False,
        "interactions": True,
        "guard_axes": ["z"],
    },
    "analysis": {
        "smoothing_window": 5,
        "prominence": 0.05,
        "braid_threshold": 0.5,
        "z_slices_um": [0.0],
    },
    "seed": 0,
}

_CHOICES = {
    ("state", "kind"): ("single_atom", "bec"),
    ("evolution", "mode"): ("falling_frame", "direct"),
}
_FIXED_LEN = {("grid", "n"), ("grid", "box_um"), ("grid", "center_um")}


def _merge(defaults: dict, user: dict, path: tuple = ()) -> dict:
    if not isinstance(user, dict):
        raise ConfigError(f"{'.'.join(path) or 'config'}: expected a mapping")
    unknown = set(user) - set(defaults)
    if unknown:
        where = ".".join(path) or "top level"
        raise ConfigError(f"unknown key(s) at {where}: {', '.join(sorted(map(str, unknown)))}")
    out = {}
    for key, default in defaults.items():
        here = path + (key,)
        name = ".".join(here)
        if key not in user:
            out[key] = copy.deepcopy(default)
            continue
        val = user[key]
        if isinstance(default, dict):
            out[key] = _merge(default, val or {}, here)
        elif val is None:
            if default is not None:
                raise ConfigError(f"{name} may not be null")
            out[key] = None
        elif isinstance(default, bool):
            if not isinstance(val, bool):
                raise ConfigError(f"{name}: expected true/false, got {val!r}")
            out[key] = val
        elif isinstance(default, int) and not isinstance(default, bool):
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"{name}: expected an integer, got {val!r}")
            out[key] = val
        elif isinstance(default, float) or default is None:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{name}: expected a number, got {val!r}")
            out[key] = float(val)
        elif isinstance(default, str):
            if not isinstance(val, str):
                raise ConfigError(f"{name}: expected a string, got {val!r}")
            out[key] = val
        elif isinstance(default, list):
            if not isinstance(val, list):
                raise ConfigError(f"{name}: expected a list, got {val!r}")
            if here in _FIXED_LEN and len(val) != len(default):
                raise ConfigError(f"{name}: expected {len(default)} entries")
            proto = default[0] if default else None
            if isinstance(proto, (int, float)) and not isinstance(proto, bool):
                for v in val:
                    if isinstance(v, bool) or not isinstance(v, (int, float)):
                        raise ConfigError(f"{name}: non-numeric entry {v!r}")
                val = [type(proto)(v) if isinstance(proto, float) else v for v in val]
            out[key] = list(val)
        choices = _CHOICES.get(here)
        if choices and out[key] not in choices:
            raise ConfigError(f"{name} must be one of {choices}, got {out[key]!r}")
    return out


def config_hash(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def set_path(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


@dataclass
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, user: dict | None) -> "RunConfig":
        cfg = cls(_merge(DEFAULTS, user or {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        text = Path(path).read_text()
        try:
            user = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(user)

    @property
    def hash(self) -> str:
        return config_hash(self.data)

    def validate(self) -> None:
        """Build every engine object once so bad values fail before any compute."""
        try:
            self.species()
            self.trap()
            self.grid()
            self.evolution()
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        st = self.data["state"]
        if st["dtau_ms"] <= 0 or st["tol"] <= 0 or st["max_iter"] < 1:
            raise ConfigError("state.dtau_ms, state.tol and state.max_iter must be positive")
        if st["kind"] == "bec" and st["atom_number"] < 1:
            raise ConfigError("state.atom_number must be >= 1")
        an = self.data["analysis"]
        if not 0 < an["braid_threshold"] < 1:
            raise ConfigError("analysis.braid_threshold must lie in (0, 1)")
        if an["smoothing_window"] < 1 or an["prominence"] < 0:
            raise ConfigError("analysis.smoothing_window must be >= 1 and prominence >= 0")

    # engine objects -------------------------------------------------------

    def species(self) -> AtomSpecies:
        s = self.data["species"]
        if s["mass_kg"] <= 0 or s["wavelength_nm"] <= 0:
            raise ConfigError("species mass and wavelength must be positive")
        return AtomSpecies.from_si(
            s["name"], s["mass_kg"], s["scattering_length_bohr"] * units.BOHR_RADIUS, s["wavelength_nm"] * 1e-9
        )

    def trap(self) -> TrapParams:
        t = self.data["trap"]
        sp = self.species()
        if t["depth_er"] <= 0:
            raise ConfigError(f"trap.depth_er must be positive, got {t['depth_er']}")
        k = sp.transition_wavenumber if t["wavelength_nm"] is None else 2 * math.pi / units.length_from_nm(t["wavelength_nm"])
        return TrapParams(
            ell=t["ell"],
            waist=t["waist_um"],
            wavenumber=k,
            depth=t["depth_er"] * sp.recoil_energy,
            gravity=units.accel_from_si(t["gravity_m_s2"]),
            power=None if t["power_mw"] is None else t["power_mw"] * 1e-3,
            detuning=t["detuning_hz"],
        )

    def grid(self) -> Grid3D:
        g = self.data["grid"]
        return Grid3D(*g["n"], *g["box_um"], tuple(g["center_um"]))

    @property
    def atom_number(self) -> int:
        return self.data["state"]["atom_number"] if self.data["state"]["kind"] == "bec" else 1

    def scattering_length(self) -> float:
        a = self.data["state"]["scattering_length_bohr"]
        if a is None:
            return self.species().scattering_length
        return units.length_from_m(a * units.BOHR_RADIUS)

    def g_eff(self) -> float:
        if self.data["state"]["kind"] != "bec" or not self.data["evolution"]["interactions"]:
            return 0.0
        sp = self.species()
        return self.atom_number * 4 * math.pi * self.scattering_length() / sp.mass

    def evolution(self) -> EvolutionConfig:
        e = self.data["evolution"]
        return EvolutionConfig(
            dt=e["dt_ms"],
            t_final=e["t_final_ms"],
            gravity_mode=e["mode"],
            g=units.accel_from_si(self.data["trap"]["gravity_m_s2"]),
            g_eff=self.g_eff(),
            mass=self.species().mass,
            snapshot_every=e["snapshot_every"],
            record_every=e["record_every"],
            renormalize=e["renormalize"],
            guard_axes=tuple(e["guard_axes"]),
        )
