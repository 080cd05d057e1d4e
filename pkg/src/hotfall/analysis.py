"""Observables extracted from fields and trajectory records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .grid import ComplexField, Grid3D
from .potential import PotentialField
from .propagate import TrajectoryRecord, spectral_shift

# Strand counts quoted in the literature for this trap; they disagree with
# the 2|l| rule, so reports carry both and flag the mismatch.
PUBLISHED_BRAID_COUNTS = {2: 6, 3: 4}


@dataclass
class RevivalReport:
    revival_times: list[float]
    peak_series: list[tuple[float, float]] = field(repr=False)
    period: float | None = None
    period_uncertainty: float | None = None


@dataclass
class BraidCount:
    z_slice: float
    threshold: float
    count: int
    angular_maxima_positions: list[float]
    radius: float = 0.0


def peak_density_series(rec: TrajectoryRecord) -> list[tuple[float, float]]:
    if not rec.times:
        raise ValueError("empty trajectory record")
    p0 = rec.peak_density[0]
    return [(t, p / p0) for t, p in zip(rec.times, rec.peak_density)]


def detect_revivals(series, smoothing_window: int = 5, prominence: float = 0.05) -> RevivalReport:
    """Local maxima of the moving-averaged series whose prominence exceeds
    ``prominence * max(series)``; the period is the mean spacing of those maxima."""
    series = [(float(t), float(v)) for t, v in series]
    if len(series) < 5:
        raise ValueError("need at least 5 samples to look for revivals")
    t = np.array([s[0] for s in series])
    v = np.array([s[1] for s in series])
    w = max(1, int(smoothing_window))
    smooth = ndimage.uniform_filter1d(v, size=w, mode="nearest") if w > 1 else v
    top = float(np.max(np.abs(v)))
    idx, _ = signal.find_peaks(smooth, prominence=prominence * top if top > 0 else None)
    times = [float(t[i]) for i in idx]
    period = unc = None
    if len(times) >= 2:
        gaps = np.diff(times)
        period = float(gaps.mean())
        unc = float(gaps.std(ddof=1)) if len(gaps) > 1 else float(abs(t[1] - t[0]))
    return RevivalReport(times, series, period, unc)


def _slice(data: np.ndarray, grid: Grid3D, z: float) -> np.ndarray:
    """Linear interpolation between the two planes bracketing z (periodic in z)."""
    pos = (z - grid.center[2]) / grid.dz + grid.nz // 2
    if not (-0.5 <= pos <= grid.nz - 0.5):
        raise ValueError(f"z={z} is outside the box")
    i0 = int(math.floor(pos))
    frac = pos - i0
    a = data[:, :, i0 % grid.nz]
    if frac < 1e-12:
        return a.copy()
    b = data[:, :, (i0 + 1) % grid.nz]
    return (1.0 - frac) * a + frac * b


def _radial_bins(grid: Grid3D):
    x, y, _ = grid.xyz
    r = np.hypot(x[:, :, 0] - grid.center[0], y[:, :, 0] - grid.center[1])
    dr = min(grid.dx, grid.dy)
    return r, np.floor(r / dr + 0.5).astype(int), dr


def _radial_average(plane: np.ndarray, grid: Grid3D):
    r, ib, dr = _radial_bins(grid)
    # keep only full circles inside the box
    rmax = min(grid.lx, grid.ly) / 2.0
    keep = r <= rmax
    cnt = np.bincount(ib[keep])
    tot = np.bincount(ib[keep], weights=plane[keep])
    radii = np.arange(len(cnt)) * dr
    ok = cnt > 0
    return radii[ok], tot[ok] / cnt[ok]


def radial_profile(f: ComplexField, z_slice: float) -> list[tuple[float, float]]:
    """Azimuthally averaged density on the plane z = z_slice, binned at the grid spacing."""
    plane = _slice(f.density(), f.grid, z_slice)
    radii, prof = _radial_average(plane, f.grid)
    return list(zip(radii.tolist(), prof.tolist()))


def com_z(f: ComplexField) -> float:
    dens = f.density()
    tot = float(dens.sum())
    if tot == 0.0:
        return 0.0
    return float(np.sum(dens * f.grid.xyz[2])) / tot


def _ring_values(plane: np.ndarray, grid: Grid3D, radius: float, n_angles: int) -> tuple[np.ndarray, np.ndarray]:
    phi = 2.0 * np.pi * np.arange(n_angles) / n_angles
    px = (grid.center[0] + radius * np.cos(phi) - grid.axis(0)[0]) / grid.dx
    py = (grid.center[1] + radius * np.sin(phi) - grid.axis(1)[0]) / grid.dy
    vals = ndimage.map_coordinates(plane, [px, py], order=3, mode="grid-wrap")
    return phi, vals


def ring_maxima(
    plane: np.ndarray,
    grid: Grid3D,
    threshold: float,
    radius: float | None = None,
    n_angles: int = 720,
    min_prominence: float = 0.01,
) -> tuple[float, list[float]]:
    """Angular positions of strict local maxima on the ring of highest mean value.

    Maxima must exceed ``threshold * plane.max()`` and stand out by
    ``min_prominence * plane.max()`` (rejects interpolation ripple).
    """
    top = float(plane.max())
    if top <= 0.0:
        return 0.0, []
    if radius is None:
        radii, prof = _radial_average(plane, grid)
        radius = float(radii[int(np.argmax(prof))])
    phi, vals = _ring_values(plane, grid, radius, n_angles)
    n = len(vals)
    ext = np.concatenate([vals, vals, vals])
    idx, _ = signal.find_peaks(ext, height=threshold * top, prominence=min_prominence * top)
    pos = sorted({float(phi[i - n]) for i in idx if n <= i < 2 * n})
    return radius, pos


def braid_count(f: ComplexField, z_slice: float, threshold: float = 0.5, **kw) -> BraidCount:
    """Count density maxima around the brightest ring in the plane z = z_slice."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    plane = _slice(f.density(), f.grid, z_slice)
    radius, pos = ring_maxima(plane, f.grid, threshold, **kw)
    return BraidCount(z_slice, threshold, len(pos), pos, radius)


def potential_braid_count(pot: PotentialField, z_slice: float, threshold: float = 0.5, **kw) -> BraidCount:
    """Same count on the well depth -U, i.e. how many strands the trap itself has."""
    plane = _slice(-pot.values, pot.grid, z_slice)
    plane = np.clip(plane, 0.0, None)
    radius, pos = ring_maxima(plane, pot.grid, threshold, **kw)
    return BraidCount(z_slice, threshold, len(pos), pos, radius)


def screw_deviation(f: ComplexField, ell: int, wavenumber: float, angle: float, center_margin: int = 3) -> float:
    """max |n(rho, phi + a, z - l a / k) - n(rho, phi, z)| / max n for rotation angle a.

    Quarter turns on a square, centred grid are applied exactly; other angles
    use cubic interpolation in the transverse plane. The axial shift is
    spectral, so the box must be periodic along z for the state in question.
    """
    grid = f.grid
    dens = f.density()
    shift = -ell * angle / wavenumber
    quarter = angle / (np.pi / 2)
    exact = (
        abs(quarter - round(quarter)) < 1e-12
        and grid.nx == grid.ny
        and math.isclose(grid.dx, grid.dy, rel_tol=1e-12)
        and grid.center[0] == grid.center[1] == 0.0
    )
    # g(x, y, z) = n(x, y, z - l a / k); the rotated copy samples g at R_a(x, y)
    g = np.real(spectral_shift(dens.astype(complex), grid, shift))
    if exact:
        flip = (-np.arange(grid.nx)) % grid.nx
        rotated = g
        for _ in range(int(round(quarter)) % 4):
            # quarter turn: (x, y) -> (-y, x), i.e. index j -> (n - j) mod n on a centred axis
            rotated = rotated[flip].transpose(1, 0, 2)
    else:
        x0, y0 = grid.axis(0), grid.axis(1)
        X, Y = np.meshgrid(x0, y0, indexing="ij")
        c, s = math.cos(angle), math.sin(angle)
        px = (c * X - s * Y - x0[0]) / grid.dx
        py = (s * X + c * Y - y0[0]) / grid.dy
        rotated = np.empty_like(g)
        for k in range(grid.nz):
            rotated[:, :, k] = ndimage.map_coordinates(g[:, :, k], [px, py], order=3, mode="grid-wrap")
    m = center_margin
    core = (slice(m, grid.nx - m), slice(m, grid.ny - m), slice(None))
    return float(np.max(np.abs(rotated[core] - dens[core])) / dens.max())
