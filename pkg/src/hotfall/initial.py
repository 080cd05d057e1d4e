"""Pre-release states: imaginary-time ground state, separable seed, Thomas-Fermi condensate."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .grid import ComplexField, Grid3D, SpectralPlan
from .params import AtomSpecies, TrapParams, trap_frequencies
from .potential import PotentialField, fresnel_coords
from .propagate import NumericalError, SplitStepper, energy_terms

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


class BracketError(ValueError):
    pass


@dataclass
class GroundStateResult:
    field: ComplexField
    energy: float
    iterations: int
    residual: float
    energies: list[float] = field(default_factory=list, repr=False)


@dataclass
class TFState:
    field: ComplexField
    chemical_potential: float
    atom_number: int
    g_int: float

    @property
    def mu(self) -> float:
        return self.chemical_potential


def analytic_seed(tp: TrapParams, species: AtomSpecies, grid: Grid3D) -> ComplexField:
    """Product of harmonic-oscillator ground states across and along the helix.

    Gaussian in the radial offset (length 1/sqrt(m w_rho)), Gaussian in nu
    around the nearest well (length 1/sqrt(m w_nu)), flat along z.
    """
    w_r, w_n = trap_frequencies(tp, species)
    a_r = 1.0 / math.sqrt(species.mass * w_r)
    a_n = 1.0 / math.sqrt(species.mass * w_n)
    x, y, z = grid.xyz
    rho_off, nu, _ = fresnel_coords(x, y, z, tp)
    period = math.pi / tp.wavenumber
    nu = (nu + 0.5 * period) % period - 0.5 * period
    amp = np.exp(-0.5 * (rho_off / a_r) ** 2 - 0.5 * (nu / a_n) ** 2)
    f = ComplexField(grid, np.broadcast_to(amp, grid.shape))
    return f.normalize()


def _default_seed(pot: PotentialField, species: AtomSpecies) -> ComplexField:
    if pot.trap is not None:
        return analytic_seed(pot.trap, species, pot.grid)
    # Boltzmann-like guess at a temperature set by the potential spread.
    v = pot.values - pot.values.min()
    spread = float(v.max())
    amp = np.exp(-v / spread * 4.0) if spread > 0 else np.ones(pot.grid.shape)
    return ComplexField(pot.grid, amp).normalize()


def imaginary_time_ground_state(
    pot: PotentialField,
    species: AtomSpecies,
    nonlinearity: float = 0.0,
    dtau: float = 1e-4,
    tol: float = 1e-10,
    max_iter: int = 50_000,
    initial: ComplexField | None = None,
    energy_floor: float = 0.0,
    callback=None,
) -> GroundStateResult:
    """Lowest state of -lap/2m + U (+ nonlinearity |psi|^2) by normalized imaginary-time Strang steps.

    Stops once ``|E_n - E_(n-1)| <= tol * max(|E_n|, energy_floor)``.
    ``energy_floor`` only matters for states whose energy tends to zero.
    """
    if pot.gravity:
        raise ValueError("ground state requires a potential without the gravity term")
    if not (dtau > 0 and tol > 0):
        raise ValueError("dtau and tol must be positive")
    grid = pot.grid
    plan = SpectralPlan(grid)
    stepper = SplitStepper(grid, pot.values, species.mass, dtau, nonlinearity, imaginary=True, plan=plan)
    psi = (initial if initial is not None else _default_seed(pot, species)).copy().normalize().data
    dv = grid.dv

    def energy(p):
        return energy_terms(p, grid, species.mass, pot.values, nonlinearity, plan)["total"]

    e_prev = energy(psi)
    energies = [e_prev]
    residual = math.inf
    for it in range(1, max_iter + 1):
        psi = stepper.step(psi)
        n2 = np.vdot(psi.ravel(), psi.ravel()).real * dv
        if not np.isfinite(n2) or n2 == 0.0:
            raise NumericalError(
                f"imaginary-time step {it} produced norm^2={n2}; last energy {e_prev:g}, dtau={dtau:g}"
            )
        psi /= math.sqrt(n2)
        e = energy(psi)
        if not np.isfinite(e):
            raise NumericalError(f"energy became {e} at iteration {it}")
        energies.append(e)
        residual = abs(e - e_prev) / max(abs(e), energy_floor, np.finfo(float).tiny)
        if callback is not None:
            callback(it, e, residual)
        if residual < tol:
            return GroundStateResult(ComplexField(grid, psi), e, it, residual, energies)
        e_prev = e
    result = GroundStateResult(ComplexField(grid, psi), e_prev, max_iter, residual, energies)
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (residual {residual:.3e} > {tol:g})", result
    )


def thomas_fermi_state(
    pot: PotentialField,
    species: AtomSpecies,
    N: int,
    a_s: float | None = None,
    bracket: tuple[float, float] | None = None,
) -> TFState:
    """Thomas-Fermi condensate, psi = sqrt((mu - U)/(N g)) where U < mu.

    The field is normalized per particle; mu is found by bisection between
    min U and min U + 10*depth (or a closed-form bound without a trap).
    """
    if N < 1:
        raise ValueError("atom number must be >= 1")
    if pot.gravity:
        raise ValueError("Thomas-Fermi state requires a potential without the gravity term")
    a_s = species.scattering_length if a_s is None else a_s
    if not a_s > 0:
        raise ValueError("scattering length must be positive for a Thomas-Fermi state")
    g = 4.0 * math.pi * a_s / species.mass
    ng = N * g
    u = pot.values
    dv = pot.grid.dv
    u_min = float(u.min())
    if bracket is None:
        if pot.trap is not None:
            bracket = (u_min, u_min + 10.0 * pot.trap.depth)
        else:
            bracket = (u_min, float(u.max()) + ng / pot.grid.volume)
    lo, hi = bracket
    scale = pot.trap.depth if pot.trap is not None else max(hi - lo, 1e-300)

    def excess(mu):
        return float(np.sum(np.clip(mu - u, 0.0, None))) * dv / ng - 1.0

    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo <= 0.0 <= f_hi):
        raise BracketError(
            f"chemical potential not bracketed by [{lo:g}, {hi:g}] "
            f"(normalization excess {f_lo:+.3g}, {f_hi:+.3g}); Thomas-Fermi may not apply"
        )
    mu = optimize.bisect(excess, lo, hi, xtol=1e-10 * scale, rtol=4 * np.finfo(float).eps, maxiter=400)
    amp = np.sqrt(np.clip(mu - u, 0.0, None) / ng)
    return TFState(ComplexField(pot.grid, amp), mu, N, g)
