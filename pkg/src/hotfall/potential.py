"""Helical optical tube potential, helical coordinates and grid sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid3D
from .params import AtomSpecies, TrapParams, depth_to_prefactor
from . import units


def beam_waist(z, tp: TrapParams):
    return tp.waist * np.sqrt(1.0 + (np.asarray(z) / tp.rayleigh_range) ** 2)


def hot_potential(x, y, z, tp: TrapParams):
    """Attractive dipole potential, ``-V0 (sqrt2 rho/w)^(2|l|) exp(-2 rho^2/w^2) cos^2(kz + l phi) / |l|!``.

    The 1/|l|! is the Laguerre-Gaussian mode normalization, which is what
    makes the well depth equal ``tp.depth`` for every l. Broadcasts over array arguments. Values lie in [-depth, 0]; the minima sit
    on the 2|l| helical bright lines at rho = w(z) sqrt(|l|/2).
    """
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    w2 = beam_waist(z, tp) ** 2
    s = 2.0 * (x * x + y * y) / w2
    phase = tp.wavenumber * z + tp.ell * np.arctan2(y, x)
    v0 = depth_to_prefactor(tp) / math.factorial(abs(tp.ell))
    return -v0 * s ** abs(tp.ell) * np.exp(-s) * np.cos(phase) ** 2


def fresnel_coords(x, y, z, tp: TrapParams):
    """(rho_off, nu, xi): radial offset from the bright ring, helical phase coordinate, axial coordinate.

    ``nu = z + l*phi/k`` with phi in (-pi, pi]; xi is just z (no pitch rescaling).
    """
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    r = np.hypot(x, y)
    rho_off = r - np.sqrt(abs(tp.ell) / 2.0) * beam_waist(z, tp)
    nu = z + tp.ell * np.arctan2(y, x) / tp.wavenumber
    return rho_off, nu, z


@dataclass
class PotentialField:
    """Real potential sampled on a grid together with the inputs that produced it."""

    grid: Grid3D
    values: np.ndarray = field(repr=False)
    trap: TrapParams | None = None
    gravity: bool = False
    mass: float | None = None

    @property
    def depth(self) -> float | None:
        return self.trap.depth if self.trap is not None else None


def sample_potential(
    grid: Grid3D,
    tp: TrapParams | None,
    include_gravity: bool = False,
    species: AtomSpecies | None = None,
    g: float | None = None,
) -> PotentialField:
    """Sample the trap (``tp=None`` means no trap) and optionally ``m g z`` onto ``grid``."""
    x, y, z = grid.xyz
    if tp is not None:
        values = hot_potential(x, y, z, tp)
    else:
        values = np.zeros(grid.shape)
    values = np.broadcast_to(values, grid.shape).astype(np.float64, copy=True)
    mass = species.mass if species is not None else None
    if include_gravity:
        if species is None:
            raise ValueError("gravity term needs the atomic mass")
        if g is None:
            g = tp.gravity if tp is not None else units.accel_from_si(units.GRAVITY)
        values += species.mass * g * np.broadcast_to(z, grid.shape)
    return PotentialField(grid, values, tp, include_gravity, mass)


def harmonic_potential(grid: Grid3D, mass: float, omega: float, center=(0.0, 0.0, 0.0)) -> PotentialField:
    """Isotropic 1/2 m w^2 r^2, used to validate the solvers."""
    x, y, z = grid.xyz
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2
    return PotentialField(grid, 0.5 * mass * omega**2 * r2, None, False, mass)
