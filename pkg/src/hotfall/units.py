"""Internal unit system: micrometres, milliseconds and hbar = 1.

Energies are in hbar/ms (angular frequency units), masses in hbar*ms/um^2.
Only this module and the config loader ever see SI numbers.
"""

import math

HBAR = 1.054571817e-34  # J s
BOHR_RADIUS = 5.29177210903e-11  # m
ATOMIC_MASS = 1.66053906660e-27  # kg

UM = 1e-6  # m per internal length unit
MS = 1e-3  # s per internal time unit

MASS_UNIT = HBAR * MS / UM**2  # kg
ENERGY_UNIT = HBAR / MS  # J


def mass_from_kg(m_kg: float) -> float:
    return m_kg / MASS_UNIT


def length_from_m(x: float) -> float:
    return x / UM


def length_from_nm(x: float) -> float:
    return x * 1e-3


def accel_from_si(g: float) -> float:
    """m/s^2 -> um/ms^2."""
    return g * MS**2 / UM


def energy_to_joule(e: float) -> float:
    return e * ENERGY_UNIT


def energy_to_hz(e: float) -> float:
    return e / (2 * math.pi) * 1e3


# 87Rb, D2 line (5S1/2 -> 5P3/2).
RB87_MASS_KG = 1.44316e-25
RB87_WAVELENGTH_NM = 780.241
RB87_SCATTERING_BOHR = 98.0
GRAVITY = 9.81  # m/s^2
