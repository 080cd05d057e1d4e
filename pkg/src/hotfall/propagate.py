"""Strang split-step propagation in real and imaginary time, and the falling-frame map."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import units
from .grid import ComplexField, Grid3D, SpectralPlan
from .params import rubidium87
from .potential import PotentialField

log = logging.getLogger(__name__)

MODES = ("falling_frame", "direct")


class NumericalError(FloatingPointError):
    """NaN/Inf or another unrecoverable numerical failure."""


class BoundaryWarning(RuntimeWarning):
    pass


@dataclass
class EvolutionConfig:
    dt: float = 5e-4
    t_final: float = 3.0
    gravity_mode: str = "falling_frame"
    g: float = units.accel_from_si(units.GRAVITY)
    g_eff: float = 0.0
    mass: float = field(default_factory=lambda: rubidium87().mass)
    snapshot_every: int = 500
    record_every: int = 1
    renormalize: bool = False
    guard_axes: tuple[str, ...] = ("z",)
    guard_cells: int = 3
    guard_level: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= 0:
            raise ValueError("t_final must be non-negative")
        if self.snapshot_every < 1 or self.record_every < 1:
            raise ValueError("snapshot/record cadence must be >= 1")
        if self.gravity_mode not in MODES:
            raise ValueError(f"gravity_mode must be one of {MODES}")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        bad = set(self.guard_axes) - {"x", "y", "z"}
        if bad:
            raise ValueError(f"unknown guard axes {sorted(bad)}")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_final / self.dt - 1e-9))


@dataclass
class TrajectoryRecord:
    dt: float
    mode: str
    steps: list[int] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    norm: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    peak_density: list[float] = field(default_factory=list)
    com_z: list[float] = field(default_factory=list)
    snapshots: list[Any] = field(default_factory=list)
    snapshot_times: list[float] = field(default_factory=list)
    max_norm_error: float = 0.0
    contaminated: bool = False
    contamination_time: float | None = None
    final: ComplexField | None = field(default=None, repr=False)

    def rows(self):
        return zip(self.steps, self.times, self.norm, self.energy, self.peak_density, self.com_z)


def _external_values(pot: PotentialField | None, grid: Grid3D, cfg: EvolutionConfig) -> np.ndarray | None:
    v = None
    if pot is not None:
        if pot.grid != grid:
            raise ValueError("potential grid does not match the field grid")
        if cfg.gravity_mode == "falling_frame" and pot.gravity:
            raise ValueError("falling-frame evolution must not carry the m g z term")
        v = pot.values
    if cfg.gravity_mode == "direct" and not (pot is not None and pot.gravity):
        mgz = cfg.mass * cfg.g * np.broadcast_to(grid.xyz[2], grid.shape)
        v = mgz if v is None else v + mgz
    return v


class SplitStepper:
    """Potential/kinetic/potential splitting with cached exponentials.

    With ``imaginary=True`` time is rotated (t -> -i tau) so each step damps
    rather than rotates; callers renormalize.
    """

    def __init__(
        self,
        grid: Grid3D,
        values: np.ndarray | None,
        mass: float,
        dt: float,
        g_eff: float = 0.0,
        imaginary: bool = False,
        plan: SpectralPlan | None = None,
    ):
        self.grid = grid
        self.values = values
        self.mass = mass
        self.dt = dt
        self.g_eff = g_eff
        self.imaginary = imaginary
        self.plan = plan or SpectralPlan(grid)
        c = -1.0 if imaginary else -1j
        self._c = c
        self.kin_phase = np.exp(c * dt * grid.k2 / (2.0 * mass))
        self.half_phase = None if values is None else np.exp(c * 0.5 * dt * values)

    @property
    def kinetic_only(self) -> bool:
        return self.values is None and self.g_eff == 0.0

    def _half(self, psi: np.ndarray) -> np.ndarray:
        if self.g_eff:
            dens = psi.real**2 + psi.imag**2
            v = self.g_eff * dens if self.values is None else self.values + self.g_eff * dens
            psi *= np.exp(self._c * 0.5 * self.dt * v)
        elif self.half_phase is not None:
            psi *= self.half_phase
        return psi

    def step(self, psi: np.ndarray) -> np.ndarray:
        """Advance by one ``dt``; ``psi`` is consumed (may be modified in place)."""
        psi = self._half(psi)
        psik = self.plan.fwd(psi, overwrite=True)
        psik *= self.kin_phase
        psi = self.plan.inv(psik, overwrite=True)
        return self._half(psi)


def energy_terms(
    psi: np.ndarray,
    grid: Grid3D,
    mass: float,
    values: np.ndarray | None = None,
    g_eff: float = 0.0,
    plan: SpectralPlan | None = None,
    psik: np.ndarray | None = None,
) -> dict[str, float]:
    """Kinetic, potential and interaction energy per unit norm^2."""
    plan = plan or SpectralPlan(grid)
    if psik is None:
        psik = plan.fwd(psi)
    dens = psi.real**2 + psi.imag**2
    n2 = float(dens.sum()) * grid.dv
    if n2 == 0.0:
        return {"kinetic": 0.0, "potential": 0.0, "interaction": 0.0, "total": 0.0}
    kin = float(np.sum((psik.real**2 + psik.imag**2) * grid.k2)) * grid.dv / grid.size / (2.0 * mass)
    pot = float(np.sum(dens * values)) * grid.dv if values is not None else 0.0
    inter = 0.5 * g_eff * float(np.sum(dens * dens)) * grid.dv / n2 if g_eff else 0.0
    terms = {"kinetic": kin / n2, "potential": pot / n2, "interaction": inter}
    terms["total"] = sum(terms.values())
    return terms


def stable_dt(grid: Grid3D, mass: float, values: np.ndarray | None = None) -> float:
    """Accuracy guidance: 0.1 of the fastest phase period on the grid."""
    w = grid.kmax2 / (2.0 * mass)
    if values is not None:
        w += float(np.max(np.abs(values)))
    return 0.1 * 2.0 * math.pi / w


def step_strang(psi: ComplexField, pot: PotentialField | None, cfg: EvolutionConfig) -> ComplexField:
    """One Strang step; a standalone (uncached) version of what ``evolve`` does."""
    values = _external_values(pot, psi.grid, cfg)
    stepper = SplitStepper(psi.grid, values, cfg.mass, cfg.dt, cfg.g_eff)
    out = stepper.step(psi.data.copy())
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite values after split step")
    return ComplexField(psi.grid, out)


def _edge_fraction(dens: np.ndarray, axes: tuple[str, ...], cells: int, peak: float) -> float:
    worst = 0.0
    for name in axes:
        ax = "xyz".index(name)
        lo = np.take(dens, range(cells), axis=ax)
        hi = np.take(dens, range(dens.shape[ax] - cells, dens.shape[ax]), axis=ax)
        worst = max(worst, float(lo.max()), float(hi.max()))
    return worst / peak if peak > 0 else 0.0


def evolve(
    psi0: ComplexField,
    pot: PotentialField | None,
    cfg: EvolutionConfig,
    snapshot_sink: Callable[[int, float, ComplexField], Any] | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> TrajectoryRecord:
    """Real-time evolution for ceil(t_final/dt) steps.

    Scalars are recorded every ``record_every`` steps (and always at the first
    and last step); the norm is checked at every step. Snapshots go to
    ``snapshot_sink(step, t, field)`` whose return value is stored in the
    record; without a sink, copies are kept in memory.
    """
    grid = psi0.grid
    plan = SpectralPlan(grid)
    values = _external_values(pot, grid, cfg)
    stepper = SplitStepper(grid, values, cfg.mass, cfg.dt, cfg.g_eff, plan=plan)
    rec = TrajectoryRecord(dt=cfg.dt, mode=cfg.gravity_mode)
    n_steps = cfg.n_steps

    guide = stable_dt(grid, cfg.mass, values)
    if n_steps and cfg.dt > guide:
        warnings.warn(f"dt={cfg.dt:g} exceeds accuracy guidance {guide:.3g}", RuntimeWarning, stacklevel=2)

    if snapshot_sink is None:
        def snapshot_sink(i, t, f):
            return f.copy()

    dv = grid.dv
    z = np.broadcast_to(grid.xyz[2], grid.shape)
    state = {"peak0": None}

    def record(i: int, psi: np.ndarray, psik: np.ndarray | None):
        t = i * cfg.dt
        dens = psi.real**2 + psi.imag**2
        n2 = float(dens.sum()) * dv
        peak = float(dens.max())
        if not (np.isfinite(n2) and np.isfinite(peak)):
            raise NumericalError(f"non-finite density at step {i} (t={t:g} ms)")
        e = energy_terms(psi, grid, cfg.mass, values, cfg.g_eff, plan, psik)["total"]
        rec.steps.append(i)
        rec.times.append(t)
        rec.norm.append(math.sqrt(n2))
        rec.energy.append(e)
        rec.peak_density.append(peak)
        rec.com_z.append(float(np.sum(dens * z)) * dv / n2 if n2 > 0 else 0.0)
        if cfg.guard_axes:
            frac = _edge_fraction(dens, cfg.guard_axes, cfg.guard_cells, peak)
            if frac > cfg.guard_level and not rec.contaminated:
                rec.contaminated = True
                rec.contamination_time = t
                warnings.warn(
                    f"density at the box edge reached {frac:.2e} of peak at t={t:g} ms; result unreliable",
                    BoundaryWarning,
                    stacklevel=3,
                )

    def check_norm(i: int, nrm: float):
        if not np.isfinite(nrm):
            raise NumericalError(f"norm became {nrm} at step {i}")
        rec.max_norm_error = max(rec.max_norm_error, abs(nrm - 1.0))

    def snap(i: int, psi: np.ndarray):
        f = ComplexField(grid, psi)
        rec.snapshots.append(snapshot_sink(i, i * cfg.dt, f))
        rec.snapshot_times.append(i * cfg.dt)

    psi = psi0.data.copy()
    check_norm(0, math.sqrt(np.vdot(psi.ravel(), psi.ravel()).real * dv))
    record(0, psi, None)
    snap(0, psi)

    if stepper.kinetic_only and not cfg.renormalize:
        # No position-space operator: the potential half steps are identities and
        # consecutive kinetic factors merge, so the state stays in momentum space.
        psik = plan.fwd(psi)
        scale = dv / grid.size
        for i in range(1, n_steps + 1):
            psik *= stepper.kin_phase
            flat = psik.ravel()
            check_norm(i, math.sqrt(np.vdot(flat, flat).real * scale))
            rec_now = i % cfg.record_every == 0 or i == n_steps
            snap_now = i % cfg.snapshot_every == 0 or i == n_steps
            if rec_now or snap_now:
                psi = plan.inv(psik)
                if rec_now:
                    record(i, psi, psik)
                if snap_now:
                    snap(i, psi)
            if progress:
                progress(i, n_steps)
        if n_steps == 0:
            psi = psi0.data.copy()
    else:
        for i in range(1, n_steps + 1):
            psi = stepper.step(psi)
            flat = psi.ravel()
            nrm = math.sqrt(np.vdot(flat, flat).real * dv)
            if cfg.renormalize:
                if not np.isfinite(nrm) or nrm == 0:
                    raise NumericalError(f"norm became {nrm} at step {i}")
                psi /= nrm
                nrm = 1.0
            check_norm(i, nrm)
            if i % cfg.record_every == 0 or i == n_steps:
                record(i, psi, None)
            if i % cfg.snapshot_every == 0 or i == n_steps:
                snap(i, psi)
            if progress:
                progress(i, n_steps)

    rec.final = ComplexField(grid, psi)
    return rec


def spectral_shift(data: np.ndarray, grid: Grid3D, shift: float, axis: int = 2) -> np.ndarray:
    """Return f(r + shift*e_axis) by an exact Fourier translation."""
    k = grid.kaxis(axis)
    sh = [1, 1, 1]
    sh[axis] = -1
    plan = SpectralPlan(grid)
    fk = plan.fwd(data)
    fk *= np.exp(1j * k * shift).reshape(sh)
    return plan.inv(fk, overwrite=True)


def to_lab_frame(
    xi: ComplexField,
    t: float,
    g: float,
    mass: float,
    wrap: bool = False,
    tol: float = 1e-6,
) -> ComplexField:
    """Map a falling-frame field back to the lab frame.

    Psi(r, t) = exp(-i m g t z - i m g^2 t^3 / 6) Xi(r + g t^2/2 z_hat, t),
    which solves i dPsi/dt = (-lap/2m + m g z) Psi when Xi evolves freely.
    Unless ``wrap`` is set (axially periodic states), refuses to shift
    density out through the bottom of the box.
    """
    grid = xi.grid
    drop = 0.5 * g * t * t
    if drop == 0.0 and t * g == 0.0:
        return xi.copy()
    if not wrap and drop > 0:
        dens = xi.density()
        zax = grid.axis(2)
        lost = zax < zax[0] + drop + 3 * grid.dz
        if drop >= grid.lz or dens[:, :, lost].max() > tol * dens.max():
            raise ValueError(f"a drop of {drop:.3g} um pushes the state out of the box")
    data = spectral_shift(xi.data, grid, drop)
    z = grid.xyz[2]
    data *= np.exp(-1j * mass * g * t * z - 1j * mass * g * g * t**3 / 6.0)
    return ComplexField(grid, data)
