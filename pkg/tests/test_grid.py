import numpy as np
import pytest

from hotfall.grid import (
    ComplexField,
    Grid3D,
    SpectralPlan,
    embed,
    get_threads,
    make_grid,
    norm,
    set_threads,
    spectral_forward,
    spectral_inverse,
)


def test_unit_box_axes():
    g = make_grid(8, 8, 8, 1, 1, 1)
    assert g.dx == 0.125
    ax = g.axis(0)
    assert ax[0] == -0.5 and ax[-1] == 0.375


def test_default_box_spacing():
    g = make_grid(128, 128, 256, 20, 20, 40)
    assert g.dz == pytest.approx(0.15625, abs=0)


@pytest.mark.parametrize("counts, msg", [((7, 8, 8), "odd count"), ((8, 6, 8), "too small")])
def test_bad_counts(counts, msg):
    with pytest.raises(ValueError, match=msg):
        make_grid(*counts, 1, 1, 1)


def test_nonpositive_length():
    with pytest.raises(ValueError):
        make_grid(8, 8, 8, 1, 0, 1)


def test_axes_by_index_formula():
    g = make_grid(16, 8, 8, 3.3, 1, 1, center=(0.7, 0, 0))
    i = np.arange(16)
    np.testing.assert_array_equal(g.axis(0), 0.7 + (i - 8) * (3.3 / 16))
    np.testing.assert_allclose(g.kaxis(0), 2 * np.pi * np.fft.fftfreq(16, 3.3 / 16))


def test_grid_is_immutable():
    g = make_grid(8, 8, 8, 1, 1, 1)
    with pytest.raises(AttributeError):
        g.nx = 10


def test_norms():
    g = make_grid(8, 8, 8, 2, 3, 4)
    assert norm(ComplexField.zeros(g)) == 0.0
    f = ComplexField(g, np.full(g.shape, 1 / np.sqrt(g.volume)))
    assert norm(f) == pytest.approx(1.0, abs=1e-14)


def test_gaussian_norm():
    # unit Gaussian density exp(-r^2)/pi^(3/2), box 10 sigma wide
    g = make_grid(64, 64, 64, 10, 10, 10)
    x, y, z = g.xyz
    f = ComplexField(g, np.pi ** (-0.75) * np.exp(-(x**2 + y**2 + z**2) / 2))
    assert norm(f) == pytest.approx(1.0, abs=1e-9)


def test_normalize_and_errors():
    g = make_grid(8, 8, 8, 1, 1, 1)
    f = ComplexField(g, np.random.default_rng(1).normal(size=g.shape))
    assert f.normalize().norm() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ComplexField.zeros(g).normalize()
    with pytest.raises(ValueError):
        ComplexField(g, np.zeros((8, 8, 10)))


def test_constant_goes_to_zero_bin():
    g = make_grid(8, 8, 8, 1, 1, 1)
    fk = spectral_forward(ComplexField(g, np.ones(g.shape)))
    assert abs(fk.data[0, 0, 0]) == pytest.approx(g.size)
    fk.data[0, 0, 0] = 0
    assert np.abs(fk.data).max() < 1e-12


def test_plane_wave_single_bin():
    g = make_grid(16, 8, 8, 2, 1, 1)
    kj = g.kaxis(0)[3]
    x = g.xyz[0]
    fk = spectral_forward(ComplexField(g, np.broadcast_to(np.exp(1j * kj * x), g.shape)))
    mag = np.abs(fk.data)
    assert np.count_nonzero(mag > 1e-9 * mag.max()) == 1
    assert mag[3, 0, 0] == mag.max()


def test_round_trip_and_mismatch():
    g = make_grid(16, 8, 12, 1, 1, 1)
    rng = np.random.default_rng(7)
    f = ComplexField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    back = spectral_inverse(spectral_forward(f))
    assert np.abs(back.data - f.data).max() < 1e-12 * np.abs(f.data).max()
    plan = SpectralPlan(make_grid(8, 8, 8, 1, 1, 1))
    with pytest.raises(ValueError):
        plan.forward(f)


def test_parseval():
    g = make_grid(16, 8, 12, 1.5, 1, 2)
    rng = np.random.default_rng(3)
    f = ComplexField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    plan = SpectralPlan(g)
    assert plan.spectral_norm(plan.forward(f)) == pytest.approx(norm(f), rel=1e-12)


def test_embed_keeps_norm_and_position():
    small = make_grid(8, 8, 8, 1, 1, 1)
    big = make_grid(16, 16, 8, 2, 2, 1)
    f = ComplexField(small, np.random.default_rng(0).normal(size=small.shape))
    e = embed(f, big)
    assert norm(e) == pytest.approx(norm(f), rel=1e-14)
    np.testing.assert_array_equal(e.data[4:12, 4:12, :], f.data)
    with pytest.raises(ValueError):
        embed(f, make_grid(16, 16, 8, 4, 4, 1))


def test_threads(monkeypatch):
    set_threads(None)
    monkeypatch.setenv("HOTFALL_THREADS", "3")
    assert get_threads() == 3
    set_threads(2)
    assert get_threads() == 2
    set_threads(None)
    with pytest.raises(ValueError):
        set_threads(0)


def test_dict_round_trip():
    g = make_grid(8, 10, 12, 1, 2, 3, center=(0.5, 0, -1))
    assert Grid3D.from_dict(g.as_dict()) == g
