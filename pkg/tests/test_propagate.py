import math
import warnings

import numpy as np
import pytest

from hotfall.analysis import com_z
from hotfall.grid import ComplexField, make_grid
from hotfall.potential import PotentialField, harmonic_potential, sample_potential
from hotfall.propagate import (
    BoundaryWarning,
    EvolutionConfig,
    NumericalError,
    SplitStepper,
    evolve,
    spectral_shift,
    step_strang,
    to_lab_frame,
)

from conftest import gaussian


def widths(f):
    d = f.density()
    d = d / d.sum()
    out = []
    for ax in f.grid.xyz:
        m = float((d * ax).sum())
        out.append(math.sqrt(float((d * (ax - m) ** 2).sum())))
    return out


def test_plane_wave_phase(rb):
    g = make_grid(16, 8, 8, 2, 1, 1)
    k0 = g.kaxis(0)[2]
    f = ComplexField(g, np.broadcast_to(np.exp(1j * k0 * g.xyz[0]), g.shape))
    cfg = EvolutionConfig(dt=1e-3, g_eff=0.0, mass=rb.mass, gravity_mode="falling_frame")
    out = step_strang(f, None, cfg)
    np.testing.assert_allclose(out.data, f.data * np.exp(-1j * k0**2 * 1e-3 / (2 * rb.mass)), atol=1e-13)


def test_zero_dt_is_identity(rb):
    g = make_grid(8, 8, 8, 1, 1, 1)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    st = SplitStepper(g, rng.normal(size=g.shape), rb.mass, 0.0, g_eff=3.0)
    np.testing.assert_allclose(st.step(psi.copy()), psi, atol=1e-14)


def test_free_gaussian_width(rb):
    g = make_grid(64, 64, 64, 16, 16, 16)
    f = ComplexField(g, gaussian(g, 1.0)).normalize()
    cfg = EvolutionConfig(dt=5e-3, t_final=1.0, mass=rb.mass, snapshot_every=10**6, record_every=50)
    rec = evolve(f, None, cfg)
    expected = math.sqrt(1 + (1.0 / (2 * rb.mass)) ** 2)
    for w in widths(rec.final):
        assert w == pytest.approx(expected, rel=1e-3)
    # peak dilution of a free Gaussian
    peaks = np.array(rec.peak_density) / rec.peak_density[0]
    t = np.array(rec.times)
    np.testing.assert_allclose(peaks, (1 + (t / (2 * rb.mass)) ** 2) ** -1.5, rtol=1e-2)


def test_t_final_zero(rb):
    g = make_grid(8, 8, 8, 4, 4, 4)
    f = ComplexField(g, gaussian(g, 0.5)).normalize()
    rec = evolve(f, None, EvolutionConfig(t_final=0.0, mass=rb.mass))
    assert rec.times == [0.0] and len(rec.snapshots) == 1
    np.testing.assert_array_equal(rec.final.data, f.data)


def test_norm_conservation_with_potential(rb):
    g = make_grid(16, 16, 16, 4, 4, 4)
    pot = harmonic_potential(g, rb.mass, 20.0)
    f = ComplexField(g, gaussian(g, 0.3, center=(0.4, 0, 0))).normalize()
    cfg = EvolutionConfig(dt=1e-4, t_final=1.0, gravity_mode="falling_frame", mass=rb.mass, g_eff=5.0,
                          snapshot_every=10**6, record_every=100)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rec = evolve(f, pot, cfg)
    assert cfg.n_steps == 10_000
    assert rec.max_norm_error < 1e-10


def test_direct_mode_energy_and_fall(rb):
    g = make_grid(32, 32, 128, 8, 8, 16)
    f = ComplexField(g, gaussian(g, 0.8, center=(0, 0, 2.0))).normalize()
    t = 0.6
    cfg = EvolutionConfig(dt=2.5e-4, t_final=t, gravity_mode="direct", mass=rb.mass,
                          snapshot_every=10**6, record_every=40, guard_axes=())
    rec = evolve(f, None, cfg)
    e = np.array(rec.energy)
    assert np.max(np.abs(e - e[0])) < 1e-6 * abs(e[0])
    assert rec.com_z[-1] - rec.com_z[0] == pytest.approx(-0.5 * 9.81 * t * t, rel=5e-3)
    cfg_ff = EvolutionConfig(dt=2.5e-4, t_final=t, mass=rb.mass, snapshot_every=10**6, record_every=40)
    rec_ff = evolve(f, None, cfg_ff)
    assert np.max(np.abs(np.array(rec_ff.com_z) - rec_ff.com_z[0])) < 1e-6


def test_record_cadence(rb):
    g = make_grid(8, 8, 8, 4, 4, 4)
    f = ComplexField(g, gaussian(g, 0.5)).normalize()
    rec = evolve(f, None, EvolutionConfig(dt=1e-3, t_final=0.0105, mass=rb.mass, snapshot_every=4, record_every=1))
    assert rec.steps == list(range(12))
    assert np.all(np.diff(rec.times) > 0)
    assert rec.snapshot_times == pytest.approx([0, 0.004, 0.008, 0.011])


def test_lab_frame_identities(rb):
    g = make_grid(8, 8, 16, 4, 4, 8)
    f = ComplexField(g, gaussian(g, 0.5)).normalize()
    np.testing.assert_array_equal(to_lab_frame(f, 0.0, 9.81, rb.mass).data, f.data)
    np.testing.assert_array_equal(to_lab_frame(f, 0.3, 0.0, rb.mass).data, f.data)


def test_lab_frame_shift_and_limits(rb):
    g = make_grid(8, 8, 64, 4, 4, 16)
    f = ComplexField(g, gaussian(g, 0.5)).normalize()
    t = 0.5
    lab = to_lab_frame(f, t, 9.81, rb.mass)
    assert com_z(lab) == pytest.approx(com_z(f) - 0.5 * 9.81 * t * t, abs=1e-9)
    with pytest.raises(ValueError):
        to_lab_frame(f, 1.5, 9.81, rb.mass)


def test_spectral_shift_exact():
    g = make_grid(8, 8, 32, 1, 1, 4)
    z = g.xyz[2]
    k = g.kaxis(2)[3]
    f = np.broadcast_to(np.exp(1j * k * z), g.shape).astype(complex)
    out = spectral_shift(f, g, 0.37)
    np.testing.assert_allclose(out, f * np.exp(1j * k * 0.37), atol=1e-12)


def test_gpe_norm_conservation(rb, trap, hgrid):
    pot = sample_potential(hgrid, trap)
    f = ComplexField(hgrid, np.exp(-((np.hypot(*hgrid.xyz[:2]) - 2.8) ** 2)) + 0 * hgrid.xyz[2]).normalize()
    cfg = EvolutionConfig(dt=5e-5, t_final=0.01, mass=rb.mass, g_eff=1e4 * rb.g_int,
                          snapshot_every=10**6, record_every=50)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rec = evolve(f, pot, cfg)
    assert rec.max_norm_error < 1e-10


def test_nan_detection(rb):
    g = make_grid(8, 8, 8, 1, 1, 1)
    f = ComplexField(g, np.ones(g.shape)).normalize()
    pot = PotentialField(g, np.full(g.shape, np.nan))
    with pytest.raises(NumericalError):
        evolve(f, pot, EvolutionConfig(dt=1e-3, t_final=0.01, mass=rb.mass))


def test_boundary_flag(rb):
    g = make_grid(8, 8, 16, 4, 4, 4)
    f = ComplexField(g, gaussian(g, 0.2, k0=(0, 0, 30.0))).normalize()
    with pytest.warns(BoundaryWarning):
        rec = evolve(f, None, EvolutionConfig(dt=1e-3, t_final=0.1, mass=rb.mass))
    assert rec.contaminated and rec.contamination_time is not None


def test_falling_frame_rejects_gravity_potential(rb, trap, hgrid):
    pot = sample_potential(hgrid, trap, include_gravity=True, species=rb)
    f = ComplexField(hgrid, np.ones(hgrid.shape)).normalize()
    with pytest.raises(ValueError):
        evolve(f, pot, EvolutionConfig(t_final=1e-3, mass=rb.mass))


@pytest.mark.parametrize("kw", [dict(dt=0), dict(t_final=-1), dict(snapshot_every=0), dict(gravity_mode="x"),
                                dict(guard_axes=("w",))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        EvolutionConfig(**kw)
