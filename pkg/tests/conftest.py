import math

import numpy as np
import pytest

from hotfall.grid import Grid3D
from hotfall.params import default_trap, rubidium87

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def rb():
    return rubidium87()


@pytest.fixture(scope="session")
def trap(rb):
    return default_trap(rb)


def helix_grid(trap, n_perp=96, box=12.0, nz=8):
    """One lattice period along z with nz planes; exact for the periodic helix."""
    return Grid3D(n_perp, n_perp, nz, box, box, math.pi / trap.wavenumber)


@pytest.fixture(scope="session")
def hgrid(trap):
    return helix_grid(trap)


@pytest.fixture(scope="session")
def ground_state(rb, trap, hgrid):
    from hotfall.initial import analytic_seed, imaginary_time_ground_state
    from hotfall.potential import sample_potential

    pot = sample_potential(hgrid, trap)
    seed = analytic_seed(trap, rb, hgrid)
    return imaginary_time_ground_state(pot, rb, initial=seed)


def gaussian(grid, sigma, center=(0.0, 0.0, 0.0), k0=(0.0, 0.0, 0.0)):
    """Amplitude whose density has standard deviation sigma per axis."""
    x, y, z = grid.xyz
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2
    phase = k0[0] * x + k0[1] * y + k0[2] * z
    return np.exp(-r2 / (4 * sigma**2) + 1j * phase)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
