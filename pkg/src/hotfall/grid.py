"""Uniform periodic grids, complex fields on them, and the FFT pair used by the propagators."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

THREADS_ENV = "HOTFALL_THREADS"

_workers: int | None = None


def set_threads(n: int | None) -> None:
    """Set the worker count used by every FFT (``None`` restores the env/default)."""
    global _workers
    if n is not None and n < 1:
        raise ValueError("thread count must be >= 1")
    _workers = n


def get_threads() -> int:
    if _workers is not None:
        return _workers
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


@dataclass(frozen=True)
class Grid3D:
    """Cartesian box of ``nx*ny*nz`` points with periodic wrap-around.

    Positions follow ``x_i = center + (i - n/2) * dx``; the matching
    wavenumber axes are ``2*pi*fftfreq(n, dx)``.
    """

    nx: int
    ny: int
    nz: int
    lx: float
    ly: float
    lz: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if int(n) != n:
                raise ValueError(f"{name} must be an integer, got {n!r}")
            if n % 2:
                raise ValueError(f"odd count {name}={n} (counts must be even)")
            if n < 8:
                raise ValueError(f"{name}={n} is too small (need >= 8)")
        for name in ("lx", "ly", "lz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def size(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.lx / self.nx, self.ly / self.ny, self.lz / self.nz)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def dz(self) -> float:
        return self.lz / self.nz

    @property
    def dv(self) -> float:
        return self.dx * self.dy * self.dz

    @property
    def volume(self) -> float:
        return self.lx * self.ly * self.lz

    def axis(self, i: int) -> np.ndarray:
        n, length = self.shape[i], (self.lx, self.ly, self.lz)[i]
        return self.center[i] + (np.arange(n) - n // 2) * (length / n)

    def kaxis(self, i: int) -> np.ndarray:
        n = self.shape[i]
        return 2.0 * np.pi * sfft.fftfreq(n, d=self.spacing[i])

    # Broadcastable (n,1,1)/(1,n,1)/(1,1,n) views; cheap and enough for every pointwise formula.
    @cached_property
    def xyz(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, y, z = self.axis(0), self.axis(1), self.axis(2)
        return x[:, None, None], y[None, :, None], z[None, None, :]

    @cached_property
    def kxyz(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        kx, ky, kz = self.kaxis(0), self.kaxis(1), self.kaxis(2)
        return kx[:, None, None], ky[None, :, None], kz[None, None, :]

    @cached_property
    def k2(self) -> np.ndarray:
        kx, ky, kz = self.kxyz
        return kx**2 + ky**2 + kz**2

    @property
    def kmax2(self) -> float:
        return float(sum((np.pi / d) ** 2 for d in self.spacing))

    def as_dict(self) -> dict:
        return {
            "n": [self.nx, self.ny, self.nz],
            "box": [self.lx, self.ly, self.lz],
            "center": list(self.center),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grid3D":
        (nx, ny, nz), (lx, ly, lz) = d["n"], d["box"]
        return cls(nx, ny, nz, lx, ly, lz, tuple(d.get("center", (0.0, 0.0, 0.0))))


def make_grid(nx, ny, nz, lx, ly, lz, center=(0.0, 0.0, 0.0)) -> Grid3D:
    return Grid3D(nx, ny, nz, float(lx), float(ly), float(lz), tuple(center))


@dataclass
class ComplexField:
    """Complex amplitude sampled on ``grid``; ``data`` has shape ``grid.shape``."""

    grid: Grid3D
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.shape != self.grid.shape:
            raise ValueError(f"data shape {self.data.shape} does not match grid {self.grid.shape}")

    @classmethod
    def zeros(cls, grid: Grid3D) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.data.copy())

    def density(self) -> np.ndarray:
        return self.data.real**2 + self.data.imag**2

    def norm(self) -> float:
        return norm(self)

    def normalize(self) -> "ComplexField":
        """Scale in place to unit norm; returns self."""
        n = norm(self)
        if not np.isfinite(n) or n == 0.0:
            raise ValueError(f"cannot normalize a field with norm {n}")
        self.data /= n
        return self


def norm(f: ComplexField) -> float:
    """Discrete L2 norm ``sqrt(sum |psi|^2 dV)``."""
    d = f.data.ravel()
    return float(np.sqrt(np.vdot(d, d).real * f.grid.dv))


def embed(f: ComplexField, grid: Grid3D) -> ComplexField:
    """Copy ``f`` into the centre of a larger grid with identical spacing (zero padding)."""
    src = f.grid
    if not np.allclose(src.spacing, grid.spacing, rtol=1e-12, atol=0):
        raise ValueError("embed requires identical grid spacing")
    out = np.zeros(grid.shape, dtype=np.complex128)
    sl = []
    for i in range(3):
        n_src, n_dst = src.shape[i], grid.shape[i]
        if n_src > n_dst:
            raise ValueError("target grid is smaller than the source grid")
        off = n_dst // 2 - n_src // 2
        shift = (src.center[i] - grid.center[i]) / grid.spacing[i]
        if abs(shift - round(shift)) > 1e-9:
            raise ValueError("grid centres are not offset by a whole number of cells")
        off += int(round(shift))
        if off < 0 or off + n_src > n_dst:
            raise ValueError("source grid does not fit inside the target grid")
        sl.append(slice(off, off + n_src))
    out[tuple(sl)] = f.data
    return ComplexField(grid, out)


class SpectralPlan:
    """Forward/inverse 3D DFT pair on one grid; the inverse carries the 1/N factor."""

    def __init__(self, grid: Grid3D, workers: int | None = None):
        self.grid = grid
        self.workers = workers

    def _check(self, f: ComplexField):
        if f.grid != self.grid:
            raise ValueError("field grid does not match the spectral plan grid")

    def fwd(self, a: np.ndarray, overwrite: bool = False) -> np.ndarray:
        return sfft.fftn(a, overwrite_x=overwrite, workers=self.workers or get_threads())

    def inv(self, a: np.ndarray, overwrite: bool = False) -> np.ndarray:
        return sfft.ifftn(a, overwrite_x=overwrite, workers=self.workers or get_threads())

    def forward(self, f: ComplexField) -> ComplexField:
        self._check(f)
        return ComplexField(self.grid, self.fwd(f.data))

    def inverse(self, f: ComplexField) -> ComplexField:
        self._check(f)
        return ComplexField(self.grid, self.inv(f.data))

    def spectral_norm(self, fk: ComplexField) -> float:
        """Norm computed from spectral coefficients (Parseval with this convention)."""
        d = fk.data.ravel()
        return float(np.sqrt(np.vdot(d, d).real * self.grid.dv / self.grid.size))


def spectral_forward(f: ComplexField) -> ComplexField:
    return SpectralPlan(f.grid).forward(f)


def spectral_inverse(f: ComplexField) -> ComplexField:
    return SpectralPlan(f.grid).inverse(f)
