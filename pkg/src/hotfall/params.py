"""Atomic species, trap parameters and the derived trap scales."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import units


@dataclass(frozen=True)
class AtomSpecies:
    """Atom in internal units (um, ms, hbar = 1)."""

    name: str
    mass: float
    scattering_length: float
    transition_wavenumber: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.transition_wavenumber > 0:
            raise ValueError("transition wavenumber must be positive")

    @property
    def recoil_energy(self) -> float:
        return self.transition_wavenumber**2 / (2.0 * self.mass)

    @property
    def g_int(self) -> float:
        """Contact coupling 4*pi*a_s/m (energy x volume)."""
        return 4.0 * math.pi * self.scattering_length / self.mass

    @classmethod
    def from_si(cls, name, mass_kg, scattering_length_m, wavelength_m) -> "AtomSpecies":
        return cls(
            name=name,
            mass=units.mass_from_kg(mass_kg),
            scattering_length=units.length_from_m(scattering_length_m),
            transition_wavenumber=2.0 * math.pi / units.length_from_m(wavelength_m),
        )


def rubidium87() -> AtomSpecies:
    return AtomSpecies.from_si(
        "Rb87",
        units.RB87_MASS_KG,
        units.RB87_SCATTERING_BOHR * units.BOHR_RADIUS,
        units.RB87_WAVELENGTH_NM * 1e-9,
    )


@dataclass(frozen=True)
class TrapParams:
    """Helical trap made of two counter-propagating LG beams with winding +/- ell.

    ``depth`` is the well depth epsilon (energy); power and detuning are kept
    only as a record of where a depth came from.
    """

    ell: int
    waist: float
    wavenumber: float
    depth: float
    gravity: float = units.accel_from_si(units.GRAVITY)
    power: float | None = field(default=None, compare=False)
    detuning: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.ell) != self.ell or abs(self.ell) < 1:
            raise ValueError(f"winding number must be a nonzero integer, got {self.ell!r}")
        if not self.waist > 0:
            raise ValueError("waist must be positive")
        if not self.depth > 0:
            raise ValueError("depth must be positive")
        if not self.wavenumber > 0:
            raise ValueError("wavenumber must be positive")

    @property
    def rayleigh_range(self) -> float:
        return self.wavenumber * self.waist**2 / 2.0

    @property
    def ring_radius(self) -> float:
        """Radius of maximum intensity at z = 0."""
        return self.waist * math.sqrt(abs(self.ell) / 2.0)

    def with_(self, **kw) -> "TrapParams":
        return replace(self, **kw)


def default_trap(species: AtomSpecies | None = None, **overrides) -> TrapParams:
    """ell = 1, w0 = 4 um, depth 41.6 E_r at the species' own transition wavenumber."""
    species = species or rubidium87()
    kw = dict(
        ell=1,
        waist=4.0,
        wavenumber=species.transition_wavenumber,
        depth=41.6 * species.recoil_energy,
        power=5e-3,
        detuning=-1e15,
    )
    kw.update(overrides)
    return TrapParams(**kw)


def envelope_ratio(ell: int) -> float:
    """Peak of the normalized LG intensity (sqrt2 rho/w)^(2l) exp(-2 rho^2/w^2) / l!, i.e. l^l e^-l / l!"""
    a = abs(int(ell))
    return a**a * math.exp(-a) / math.factorial(a)


def depth_to_prefactor(tp: TrapParams) -> float:
    """Beam prefactor V0 whose potential bottoms out at exactly -depth."""
    return tp.depth / envelope_ratio(tp.ell)


@dataclass(frozen=True)
class DerivedScales:
    V0: float
    omega_rho: float
    omega_nu: float
    T_rho: float
    T_nu: float
    T_xi: float
    gap: float
    alpha: float


def trap_frequencies(tp: TrapParams, species: AtomSpecies, step: float = 1e-3) -> tuple[float, float]:
    """Harmonic frequencies (omega_rho, omega_nu) at the bottom of a well.

    Curvatures come from central second differences of the sampled potential
    at rho = w0*sqrt(|l|/2), z = phi = 0: radially for omega_rho and along the
    helical coordinate nu (i.e. z at fixed phi) for omega_nu. ``step`` is a
    fraction of w0 and of 1/k respectively.
    """
    from .potential import hot_potential

    r0 = tp.ring_radius
    h_r = step * tp.waist
    h_n = step / tp.wavenumber

    u0 = hot_potential(r0, 0.0, 0.0, tp)
    d2_r = (hot_potential(r0 + h_r, 0.0, 0.0, tp) - 2 * u0 + hot_potential(r0 - h_r, 0.0, 0.0, tp)) / h_r**2
    d2_n = (hot_potential(r0, 0.0, h_n, tp) - 2 * u0 + hot_potential(r0, 0.0, -h_n, tp)) / h_n**2
    if not (d2_r > 0 and d2_n > 0):
        raise ValueError(f"non-positive trap curvature (rho: {d2_r}, nu: {d2_n})")
    return math.sqrt(d2_r / species.mass), math.sqrt(d2_n / species.mass)


def energy_gap(tp: TrapParams, species: AtomSpecies, alpha: float) -> float:
    """Band gap 2 alpha^(3/4) l sqrt(eps E_r) along the helix."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return 2.0 * alpha**0.75 * abs(tp.ell) * math.sqrt(tp.depth * species.recoil_energy)


def calibrate_alpha(tp: TrapParams, species: AtomSpecies, t_xi: float = 2.0) -> float:
    """The alpha for which the helix clock 2 pi / gap equals ``t_xi``."""
    gap = 2.0 * math.pi / t_xi
    return (gap / (2.0 * abs(tp.ell) * math.sqrt(tp.depth * species.recoil_energy))) ** (4.0 / 3.0)


def timescales(tp: TrapParams, species: AtomSpecies, alpha: float) -> DerivedScales:
    w_r, w_n = trap_frequencies(tp, species)
    gap = energy_gap(tp, species, alpha)
    return DerivedScales(
        V0=depth_to_prefactor(tp),
        omega_rho=w_r,
        omega_nu=w_n,
        T_rho=2.0 * math.pi / w_r,
        T_nu=2.0 * math.pi / w_n,
        T_xi=2.0 * math.pi / gap,
        gap=gap,
        alpha=alpha,
    )
