import math

import numpy as np
import pytest

from hotfall.analysis import screw_deviation
from hotfall.grid import ComplexField, make_grid, norm
from hotfall.initial import (
    BracketError,
    ConvergenceError,
    analytic_seed,
    imaginary_time_ground_state,
    thomas_fermi_state,
)
from hotfall.params import trap_frequencies
from hotfall.potential import PotentialField, harmonic_potential, sample_potential
from hotfall.propagate import NumericalError


def test_harmonic_oscillator_energy(rb):
    omega = 10.0
    g = make_grid(64, 64, 64, 3.2, 3.2, 3.2)
    pot = harmonic_potential(g, rb.mass, omega)
    res = imaginary_time_ground_state(pot, rb, dtau=2e-3, tol=1e-10, max_iter=20000)
    assert res.energy == pytest.approx(1.5 * omega, rel=5e-3)
    assert norm(res.field) == pytest.approx(1.0, abs=1e-10)
    assert res.residual <= 1e-10


def test_free_box_converges_to_constant(rb):
    g = make_grid(8, 8, 8, 1, 1, 1)
    pot = PotentialField(g, np.zeros(g.shape))
    x, y, z = g.xyz
    init = ComplexField(g, np.broadcast_to(1.0 + 0.3 * np.cos(2 * np.pi * x), g.shape))
    res = imaginary_time_ground_state(pot, rb, dtau=1e-3, tol=1e-12, initial=init, energy_floor=1.0)
    assert abs(res.energy) < 1e-10
    d = res.field.density()
    # energy is quadratic in the leftover excitation, so flatness lags it
    assert d.max() - d.min() < 1e-4 * d.max()


def test_ground_state_properties(ground_state, rb, trap):
    res = ground_state
    assert norm(res.field) == pytest.approx(1.0, abs=1e-10)
    assert res.residual <= 1e-10
    e = np.array(res.energies)
    assert np.all(np.diff(e) <= 1e-12 * np.abs(e[1:]))
    w_r, w_n = trap_frequencies(trap, rb)
    assert res.energy == pytest.approx(-trap.depth + 0.5 * (w_r + w_n), rel=0.05)


def test_ground_state_screw_symmetry(ground_state, trap):
    for quarter in (1, 2, 3):
        dev = screw_deviation(ground_state.field, trap.ell, trap.wavenumber, quarter * math.pi / 2)
        assert dev < 0.01


def test_seed(ground_state, rb, trap, hgrid):
    seed = analytic_seed(trap, rb, hgrid)
    assert norm(seed) == pytest.approx(1.0, abs=1e-10)
    ov = abs(np.vdot(seed.data.ravel(), ground_state.field.data.ravel()) * hgrid.dv) ** 2
    assert ov > 0.9


def test_rejects_gravity(rb, trap, hgrid):
    pot = sample_potential(hgrid, trap, include_gravity=True, species=rb)
    with pytest.raises(ValueError):
        imaginary_time_ground_state(pot, rb)


def test_non_convergence_carries_result(rb, trap, hgrid):
    pot = sample_potential(hgrid, trap)
    with pytest.raises(ConvergenceError) as info:
        imaginary_time_ground_state(pot, rb, max_iter=3)
    assert info.value.result.iterations == 3


def test_nan_aborts(rb):
    g = make_grid(8, 8, 8, 1, 1, 1)
    pot = PotentialField(g, np.full(g.shape, np.nan))
    with pytest.raises(NumericalError):
        imaginary_time_ground_state(pot, rb, initial=ComplexField(g, np.ones(g.shape)))


def test_tf_free_box(rb):
    g = make_grid(8, 8, 8, 2, 2, 2)
    pot = PotentialField(g, np.zeros(g.shape))
    n = 1000
    tf = thomas_fermi_state(pot, rb, n)
    gi = 4 * math.pi * rb.scattering_length / rb.mass
    assert tf.mu == pytest.approx(n * gi / g.volume, rel=1e-9)
    np.testing.assert_allclose(tf.field.data.real, math.sqrt(tf.mu / (n * gi)), rtol=1e-9)


def test_tf_default_trap(rb, trap, hgrid):
    pot = sample_potential(hgrid, trap)
    tf = thomas_fermi_state(pot, rb, 10_000)
    assert norm(tf.field) ** 2 == pytest.approx(1.0, abs=1e-6)
    d = tf.field.density()
    assert np.all(d[pot.values >= tf.mu] == 0.0)
    assert np.all(d[pot.values < tf.mu] > 0.0)
    lhs = np.clip(tf.mu - pot.values, 0, None)
    rhs = tf.atom_number * tf.g_int * d
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(abs(tf.mu), lhs.max())
    assert np.all(tf.field.data.imag == 0) and tf.field.data.real.min() >= 0


def test_tf_mu_grows_with_n(rb, trap, hgrid):
    pot = sample_potential(hgrid, trap)
    mus = [thomas_fermi_state(pot, rb, n).mu for n in (1000, 2000, 10_000)]
    assert mus[0] < mus[1] < mus[2]
    s1 = thomas_fermi_state(pot, rb, 1000).field.density() > 0
    s2 = thomas_fermi_state(pot, rb, 2000).field.density() > 0
    assert np.all(s2[s1])


def test_tf_bracket_failure(rb, trap, hgrid):
    pot = sample_potential(hgrid, trap)
    with pytest.raises(BracketError):
        thomas_fermi_state(pot, rb, 10**15)
    with pytest.raises(ValueError):
        thomas_fermi_state(pot, rb, 0)
